#pragma once

#include <cstdint>
#include <vector>

#include "varorder/nuts.hpp"

namespace varorder {

struct Diagnostics {
  std::vector<double> rhat;           // per parameter, NaN when degenerate
  std::vector<double> ess;            // per parameter
  std::vector<std::uint8_t> constant; // parameter was constant in some chain
  int divergences = 0;
  int max_depth_hits = 0;

  double max_rhat() const;
  double min_ess() const;
};

/// Split rank-normalized potential scale reduction. Each chain is halved,
/// pooled values are rank-transformed to normal scores, and the classic
/// between/within variance ratio is taken on the scores. Constant input
/// yields NaN.
double split_rank_normalized_rhat(const std::vector<std::vector<double>>& chains);

/// Effective sample size across chains: split chains, combined-chain
/// autocorrelations, Geyer initial-monotone truncation of the paired sums.
double ess_combined(const std::vector<std::vector<double>>& chains);

Diagnostics diagnose(const PosteriorDraws& draws);

}  // namespace varorder
