#pragma once

#include <span>
#include <vector>

#include "varorder/model.hpp"
#include "varorder/nuts.hpp"
#include "varorder/reparam.hpp"

namespace varorder {

/// Posterior over the effective order p* in {0, ..., p_max}.
struct OrderPosterior {
  std::vector<double> pmf;
  double threshold = 0.0;
  double beta = 0.0;
  int n = 0;
  int m = 0;

  int mode() const;
  double modal_mass() const;
};

/// Directed influence j -> i at a given lag, retained when the 50%
/// equi-tailed interval of phi_{s,ij} excludes zero. Indices are 1-based.
struct GrangerEdge {
  int lag = 0;
  int from = 0;
  int to = 0;
  double weight = 0.0;  // |posterior mean|
  double mean = 0.0;
  double ci_lo = 0.0;   // 25% quantile
  double ci_hi = 0.0;   // 75% quantile
};

/// One eigen-component of the companion matrix. Complex pairs carry a
/// frequency in (0, pi) and a finite period; real roots have frequency 0,
/// with negative real roots flagged as alternating.
struct LatentComponent {
  enum class Kind { complex_pair, real };
  Kind kind = Kind::real;
  bool alternating = false;
  double modulus = 0.0;
  double frequency = 0.0;       // radians per sample
  double period_samples = 0.0;  // 2*pi/frequency; +inf for real roots
  double period_time = 0.0;     // period_samples * time_step
};

/// Per-draw moduli and periods of the k slowest quasi-periodic components
/// (smallest frequencies). Draws lacking component j are counted in
/// missing[j] and contribute nothing to that component's vectors.
struct DecompositionSummary {
  int k = 0;
  double time_step = 1.0;
  std::vector<std::vector<double>> moduli;
  std::vector<std::vector<double>> period_samples;
  std::vector<int> missing;
};

/// Truncation threshold: the beta-quantile bound for the maximum |entry| of
/// an m x m matrix of mean-zero normals with variance 1/n.
double truncation_threshold(int m, int n, double beta);

/// Largest lag whose partial autocorrelation matrix has any |entry| at or
/// above epsilon; equality counts as non-truncated. Zero if all lags pass.
int effective_order(const std::vector<linalg::Matrix>& pacf, double epsilon);

/// Linear-interpolation (type 7) quantile of a sorted sample.
double quantile_type7(std::span<const double> sorted_values, double prob);

OrderPosterior order_posterior(const PosteriorDraws& draws, const ParamLayout& lay, int n_obs,
                               double beta);

/// Edges from the overfitted model's final-stage coefficients restricted to
/// lags <= modal_order (draws are reused, not refit).
std::vector<GrangerEdge> granger_edges(const PosteriorDraws& draws, const ParamLayout& lay,
                                       int modal_order);

/// Companion eigenstructure of a stationary model. Complex pairs come first,
/// sorted by increasing frequency; real components follow, sorted by
/// decreasing modulus.
std::vector<LatentComponent> latent_decomposition(const VarModel& model, double time_step);

/// Per-draw decomposition at the modal order. Each draw's order-p submodel
/// is the recursion's stage-p coefficient table, which stays stationary.
DecompositionSummary decomposition_summary(const PosteriorDraws& draws, const ParamLayout& lay,
                                           int modal_order, int k, double time_step);

}  // namespace varorder
