#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "varorder/diagnostics.hpp"
#include "varorder/model.hpp"
#include "varorder/nuts.hpp"
#include "varorder/posterior.hpp"
#include "varorder/reparam.hpp"

namespace varorder {

struct SimSpec {
  int m = 1;
  int p = 1;
  int n = 100;
  std::uint64_t seed = 0;
  linalg::Matrix sigma;  // empty = identity
  int burn_in = -1;      // negative = exact stationary start
  double time_step = 1.0;
};

/// A generated model together with the coordinates it came from, kept for
/// later scoring of fits against the truth.
struct GroundTruth {
  std::vector<linalg::Matrix> a;
  std::vector<linalg::Matrix> pacf;
  VarModel model;
};

/// Draws A_1..A_p with iid standard normal entries (lag-major, row-major
/// fill order) and maps them through the stationary parameterization, so the
/// result is stationary by construction.
GroundTruth random_model(int m, int p, std::uint64_t seed, const linalg::Matrix& sigma = {});

/// Simulates the model. Exact stationary start draws (y_1..y_p) jointly from
/// the stacked initial distribution; burn_in >= 0 instead starts at zero and
/// discards that many leading steps.
Dataset simulate(const VarModel& model, int n, std::uint64_t seed, int burn_in = -1,
                 double time_step = 1.0);

struct StudyConfig {
  std::vector<SimSpec> cells;
  SamplerConfig sampler;
  ModelConfig model;
  double beta = 0.99;
  std::uint64_t seed = 0;  // master seed; cells derive their own streams

  // Innovation-variance prior scale, built per cell since m varies across
  // cells. Ignored when model.sigma_prior.scale already matches a cell's m.
  double sigma_scale_diag = 1.0;
  double sigma_scale_offdiag = 0.0;
};

struct StudyCellResult {
  SimSpec spec;
  bool ok = false;
  std::string error;
  OrderPosterior order;
  int modal_order = -1;
  double modal_mass = 0.0;
  double mass_at_true = 0.0;
  double max_rhat = 0.0;
  double min_ess = 0.0;
  int divergences = 0;
};

struct StudyReport {
  std::vector<StudyCellResult> cells;
  int failures = 0;
};

/// Called after each successful cell so the driver can persist datasets,
/// draws, and charts without the study core knowing about files.
using CellSink = std::function<void(std::size_t cell, const Dataset& data, const GroundTruth& truth,
                                    const PosteriorDraws& draws, const StudyCellResult& result)>;

/// Simulate + fit + order posterior per cell. A failing cell is quarantined
/// into its result's error string; remaining cells still run.
StudyReport run_study(const StudyConfig& cfg, const CellSink& sink = {});

}  // namespace varorder
