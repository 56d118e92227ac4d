#pragma once

#include <cstdint>
#include <vector>

#include "varorder/target.hpp"

namespace varorder {

struct SamplerConfig {
  int chains = 4;
  int warmup = 1000;
  int samples = 4000;
  double target_accept = 0.8;
  int max_treedepth = 10;
  std::uint64_t seed = 0;
  double divergence_threshold = 1000.0;  // energy error marking a divergence

  double init_radius = 2.0;  // initial points uniform on [-radius, radius]^dim
  int init_retries = 100;

  // Warmup layout at warmup = 1000; scaled proportionally otherwise. The
  // opening and closing buffers adapt the step size only; the doubling
  // windows in between also estimate the diagonal metric.
  int init_buffer = 75;
  int term_buffer = 50;
  int base_window = 25;

  // adapt = false freezes fixed_stepsize and inv_metric for the whole run
  // (used by calibration tests that need the integrator isolated).
  bool adapt = true;
  double fixed_stepsize = 0.1;
  std::vector<double> inv_metric;   // empty = unit metric
  std::vector<double> init_point;   // empty = random initialization
};

struct ChainDraws {
  std::vector<double> draws;  // samples x dim, row-major
  std::vector<double> lp;
  std::vector<int> treedepth;
  std::vector<std::uint8_t> divergent;
  std::vector<double> stepsize;
  std::vector<double> energy_error;  // mean |H - H0| over the trajectory
  std::vector<double> inv_metric;
  double final_stepsize = 0.0;
  int divergences = 0;      // post-warmup
  int max_depth_hits = 0;   // post-warmup
  int warmup_divergences = 0;

  double value(int draw, int d, int dim) const {
    return draws[static_cast<std::size_t>(draw) * dim + d];
  }
};

struct PosteriorDraws {
  int dim = 0;
  int samples_per_chain = 0;
  std::vector<ChainDraws> chains;

  int total_draws() const { return samples_per_chain * static_cast<int>(chains.size()); }
};

/// Runs cfg.chains independent NUTS chains against the target. Chains use
/// RNG streams derived from (cfg.seed, chain index), so the seed fully
/// determines every draw. Initialization failure after the configured number
/// of retries throws DomainError; divergences are recorded, never fatal.
PosteriorDraws sample(const TargetDensity& target, int dim, const SamplerConfig& cfg);

}  // namespace varorder
