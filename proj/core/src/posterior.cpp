#include "varorder/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

#include "varorder/errors.hpp"
#include "varorder/special.hpp"

namespace varorder {

using linalg::Matrix;

int OrderPosterior::mode() const {
  return static_cast<int>(std::max_element(pmf.begin(), pmf.end()) - pmf.begin());
}

double OrderPosterior::modal_mass() const { return pmf.empty() ? 0.0 : pmf[mode()]; }

double truncation_threshold(int m, int n, double beta) {
  if (m < 1) throw UsageError("threshold: m must be >= 1");
  if (n < 2) throw UsageError("threshold: n must be >= 2");
  if (!(beta > 0.0 && beta < 1.0)) throw UsageError("threshold: beta must lie in (0, 1)");
  double q = (std::pow(beta, 1.0 / (static_cast<double>(m) * m)) + 1.0) / 2.0;
  return inv_std_normal_cdf(q) / std::sqrt(static_cast<double>(n));
}

int effective_order(const std::vector<Matrix>& pacf, double epsilon) {
  if (epsilon <= 0.0) throw UsageError("effective_order: epsilon must be positive");
  for (int s = static_cast<int>(pacf.size()); s >= 1; --s)
    if (max_abs_value(pacf[s - 1]) >= epsilon) return s;
  return 0;
}

double quantile_type7(std::span<const double> sorted_values, double prob) {
  const std::size_t n = sorted_values.size();
  if (n == 0) throw UsageError("quantile of empty sample");
  if (prob <= 0.0) return sorted_values.front();
  if (prob >= 1.0) return sorted_values.back();
  double h = (n - 1) * prob;
  std::size_t lo = static_cast<std::size_t>(h);
  double frac = h - lo;
  if (lo + 1 >= n) return sorted_values.back();
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

namespace {

/// A draw's unconstrained A block as matrices.
std::vector<Matrix> unpack_a(const ChainDraws& chain, int t, const ParamLayout& lay) {
  std::vector<Matrix> a(lay.p_max, Matrix(lay.m, lay.m));
  const int dim = lay.dim();
  for (int s = 0; s < lay.p_max; ++s)
    for (int i = 0; i < lay.m; ++i)
      for (int j = 0; j < lay.m; ++j) a[s](i, j) = chain.value(t, lay.a_index(s, i, j), dim);
  return a;
}

Matrix unpack_chol(const ChainDraws& chain, int t, const ParamLayout& lay) {
  Matrix l(lay.m, lay.m);
  const int dim = lay.dim();
  for (int i = 0; i < lay.m; ++i)
    for (int j = 0; j <= i; ++j) {
      double v = chain.value(t, lay.chol_index(i, j), dim);
      l(i, j) = (i == j) ? std::exp(v) : v;
    }
  return l;
}

}  // namespace

OrderPosterior order_posterior(const PosteriorDraws& draws, const ParamLayout& lay, int n_obs,
                               double beta) {
  if (draws.total_draws() == 0) throw UsageError("order_posterior: no draws");
  OrderPosterior out;
  out.beta = beta;
  out.n = n_obs;
  out.m = lay.m;
  out.threshold = truncation_threshold(lay.m, n_obs, beta);
  out.pmf.assign(lay.p_max + 1, 0.0);
  for (const ChainDraws& chain : draws.chains) {
    const int nd = static_cast<int>(chain.lp.size());
    for (int t = 0; t < nd; ++t) {
      auto pacf = a_to_pacf(unpack_a(chain, t, lay));
      out.pmf[effective_order(pacf, out.threshold)] += 1.0;
    }
  }
  double total = std::accumulate(out.pmf.begin(), out.pmf.end(), 0.0);
  for (double& v : out.pmf) v /= total;
  return out;
}

std::vector<GrangerEdge> granger_edges(const PosteriorDraws& draws, const ParamLayout& lay,
                                       int modal_order) {
  const int m = lay.m;
  std::vector<GrangerEdge> edges;
  if (modal_order < 1) return edges;
  if (modal_order > lay.p_max) throw UsageError("granger_edges: modal order exceeds p_max");

  const int nd = draws.total_draws();
  // phi samples per (lag, i, j), filled draw by draw
  std::vector<std::vector<double>> samples(static_cast<std::size_t>(modal_order) * m * m);
  for (auto& s : samples) s.reserve(nd);

  for (const ChainDraws& chain : draws.chains) {
    const int cd = static_cast<int>(chain.lp.size());
    for (int t = 0; t < cd; ++t) {
      auto pacf = a_to_pacf(unpack_a(chain, t, lay));
      Matrix l = unpack_chol(chain, t, lay);
      Matrix sigma = symmetrize(l * transpose(l));
      auto [model, stages] = pacf_to_var(sigma, pacf);
      for (int s = 0; s < modal_order; ++s)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            samples[(static_cast<std::size_t>(s) * m + i) * m + j].push_back(model.phi[s](i, j));
    }
  }

  for (int s = 0; s < modal_order; ++s)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        auto& v = samples[(static_cast<std::size_t>(s) * m + i) * m + j];
        std::sort(v.begin(), v.end());
        double lo = quantile_type7(v, 0.25);
        double hi = quantile_type7(v, 0.75);
        if (lo <= 0.0 && hi >= 0.0) continue;
        GrangerEdge e;
        e.lag = s + 1;
        e.from = j + 1;
        e.to = i + 1;
        e.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        e.weight = std::fabs(e.mean);
        e.ci_lo = lo;
        e.ci_hi = hi;
        edges.push_back(e);
      }
  return edges;
}

std::vector<LatentComponent> latent_decomposition(const VarModel& model, double time_step) {
  std::vector<LatentComponent> out;
  if (model.order() < 1) return out;
  auto eig = linalg::eigenvalues(companion_matrix(model.phi));

  for (const std::complex<double>& ev : eig) {
    if (ev.imag() < 0.0) continue;  // keep one representative per pair
    LatentComponent c;
    c.modulus = std::abs(ev);
    if (ev.imag() > 0.0) {
      c.kind = LatentComponent::Kind::complex_pair;
      c.frequency = std::arg(ev);
      c.period_samples = 2.0 * std::numbers::pi_v<double> / c.frequency;
      c.period_time = c.period_samples * time_step;
    } else {
      c.kind = LatentComponent::Kind::real;
      c.alternating = ev.real() < 0.0;
      c.frequency = 0.0;
      c.period_samples = std::numeric_limits<double>::infinity();
      c.period_time = std::numeric_limits<double>::infinity();
    }
    out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(), [](const LatentComponent& a, const LatentComponent& b) {
    bool ac = a.kind == LatentComponent::Kind::complex_pair;
    bool bc = b.kind == LatentComponent::Kind::complex_pair;
    if (ac != bc) return ac;
    if (ac) return a.frequency < b.frequency;
    return a.modulus > b.modulus;
  });
  return out;
}

DecompositionSummary decomposition_summary(const PosteriorDraws& draws, const ParamLayout& lay,
                                           int modal_order, int k, double time_step) {
  if (k < 1) throw UsageError("decomposition_summary: k must be >= 1");
  if (modal_order < 1) throw UsageError("decomposition_summary: modal order must be >= 1");
  DecompositionSummary out;
  out.k = k;
  out.time_step = time_step;
  out.moduli.resize(k);
  out.period_samples.resize(k);
  out.missing.assign(k, 0);

  std::vector<std::vector<Matrix>> stage_phi;
  for (const ChainDraws& chain : draws.chains) {
    const int cd = static_cast<int>(chain.lp.size());
    for (int t = 0; t < cd; ++t) {
      auto pacf = a_to_pacf(unpack_a(chain, t, lay));
      Matrix l = unpack_chol(chain, t, lay);
      Matrix sigma = symmetrize(l * transpose(l));
      pacf_to_var_stages(sigma, pacf, stage_phi);
      VarModel sub;
      sub.sigma = sigma;  // unused by the eigenstructure
      sub.phi = stage_phi[modal_order - 1];
      auto comps = latent_decomposition(sub, time_step);
      int found = 0;
      for (const LatentComponent& c : comps) {
        if (c.kind != LatentComponent::Kind::complex_pair) break;  // pairs sort first
        if (found >= k) break;
        out.moduli[found].push_back(c.modulus);
        out.period_samples[found].push_back(c.period_samples);
        ++found;
      }
      for (int j = found; j < k; ++j) ++out.missing[j];
    }
  }
  return out;
}

}  // namespace varorder
