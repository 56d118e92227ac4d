#include "varorder/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "varorder/errors.hpp"
#include "varorder/special.hpp"

namespace varorder {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

/// Halve every chain (dropping a trailing odd element) so slow trends show up
/// as between-chain variance.
std::vector<std::vector<double>> split_chains(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> out;
  out.reserve(chains.size() * 2);
  for (const auto& c : chains) {
    std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + half);
    out.emplace_back(c.begin() + half, c.begin() + 2 * half);
  }
  return out;
}

bool any_constant(const std::vector<std::vector<double>>& chains) {
  for (const auto& c : chains) {
    if (c.empty()) return true;
    bool varies = false;
    for (double v : c)
      if (v != c.front()) {
        varies = true;
        break;
      }
    if (!varies) return true;
  }
  return false;
}

/// Pooled average ranks (ties averaged), then normal scores via the Blom
/// offset: z = Phi^{-1}((r - 3/8) / (S + 1/4)).
std::vector<std::vector<double>> rank_normalize(const std::vector<std::vector<double>>& chains) {
  std::size_t total = 0;
  for (const auto& c : chains) total += c.size();
  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(total);
  std::size_t offset = 0;
  for (const auto& c : chains) {
    for (std::size_t i = 0; i < c.size(); ++i) pooled.emplace_back(c[i], offset + i);
    offset += c.size();
  }
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> rank(total);
  std::size_t i = 0;
  while (i < total) {
    std::size_t j = i;
    while (j + 1 < total && pooled[j + 1].first == pooled[i].first) ++j;
    double avg = 0.5 * (i + j) + 1.0;  // average of 1-based ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) rank[pooled[k].second] = avg;
    i = j + 1;
  }
  std::vector<std::vector<double>> out(chains.size());
  offset = 0;
  double denom = total + 0.25;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    out[c].resize(chains[c].size());
    for (std::size_t k = 0; k < chains[c].size(); ++k)
      out[c][k] = inv_std_normal_cdf((rank[offset + k] - 0.375) / denom);
    offset += chains[c].size();
  }
  return out;
}

double chain_mean(const std::vector<double>& c) {
  return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
}

double chain_var(const std::vector<double>& c, double mean) {
  double s = 0.0;
  for (double v : c) s += (v - mean) * (v - mean);
  return s / (static_cast<double>(c.size()) - 1.0);
}

/// Classic potential scale reduction on already-prepared sequences.
double rhat_of(const std::vector<std::vector<double>>& seqs) {
  const std::size_t c = seqs.size();
  const double n = static_cast<double>(seqs[0].size());
  if (c < 2 || n < 2) return kNan;
  std::vector<double> means(c), vars(c);
  for (std::size_t i = 0; i < c; ++i) {
    means[i] = chain_mean(seqs[i]);
    vars[i] = chain_var(seqs[i], means[i]);
  }
  double grand = std::accumulate(means.begin(), means.end(), 0.0) / c;
  double b = 0.0;
  for (double m : means) b += (m - grand) * (m - grand);
  b *= n / (c - 1.0);
  double w = std::accumulate(vars.begin(), vars.end(), 0.0) / c;
  if (!(w > 0.0)) return kNan;
  double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

/// Combined-chain autocorrelation at the given lag, Stan style: one minus the
/// ratio of the lag-discounted within estimate to the overall variance.
struct EssAccumulator {
  std::vector<std::vector<double>> seqs;
  std::vector<double> means, vars;
  double w = 0.0, var_plus = 0.0;
  std::size_t n = 0;

  explicit EssAccumulator(const std::vector<std::vector<double>>& s) : seqs(s) {
    n = seqs[0].size();
    means.resize(seqs.size());
    vars.resize(seqs.size());
    for (std::size_t c = 0; c < seqs.size(); ++c) {
      means[c] = chain_mean(seqs[c]);
      vars[c] = chain_var(seqs[c], means[c]);
    }
    w = std::accumulate(vars.begin(), vars.end(), 0.0) / seqs.size();
    double grand = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
    double b = 0.0;
    for (double m : means) b += (m - grand) * (m - grand);
    b *= static_cast<double>(n) / std::max<double>(1.0, seqs.size() - 1.0);
    var_plus = (n - 1.0) / static_cast<double>(n) * w + (seqs.size() > 1 ? b / n : 0.0);
  }

  double rho(std::size_t lag) const {
    double acov = 0.0;
    for (std::size_t c = 0; c < seqs.size(); ++c) {
      const auto& s = seqs[c];
      double a = 0.0;
      for (std::size_t t = 0; t + lag < n; ++t) a += (s[t] - means[c]) * (s[t + lag] - means[c]);
      acov += a / static_cast<double>(n);
    }
    acov /= static_cast<double>(seqs.size());
    return 1.0 - (w - acov) / var_plus;
  }
};

}  // namespace

double split_rank_normalized_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) return kNan;
  auto halves = split_chains(chains);
  for (const auto& h : halves)
    if (h.size() < 2) return kNan;
  if (any_constant(halves)) return kNan;
  return rhat_of(rank_normalize(halves));
}

double ess_combined(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) return kNan;
  auto halves = split_chains(chains);
  for (const auto& h : halves)
    if (h.size() < 4) return kNan;
  if (any_constant(halves)) return kNan;

  EssAccumulator acc(halves);
  if (!(acc.var_plus > 0.0)) return kNan;
  const std::size_t n = acc.n;
  const double total = static_cast<double>(n) * halves.size();

  // Geyer: sum paired autocorrelations while the pairs stay positive, then
  // enforce monotone decrease.
  double rho_prev = acc.rho(1);
  double pair_sum = 1.0 + rho_prev;  // rho_0 + rho_1
  double tau = 0.0;
  double prev_pair = pair_sum;
  std::size_t lag = 1;
  while (true) {
    tau += prev_pair;
    lag += 1;
    if (lag + 1 >= n) break;
    double even = acc.rho(lag);
    double odd = acc.rho(lag + 1);
    lag += 1;
    double pair = even + odd;
    if (!(pair > 0.0)) break;
    if (pair > prev_pair) pair = prev_pair;  // initial monotone sequence
    prev_pair = pair;
  }
  if (!(tau > 0.0)) return total;
  double ess = total / tau;
  return std::min(ess, total * std::log10(total));  // antithetic cap, as in Stan
}

double Diagnostics::max_rhat() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double r : rhat)
    if (std::isfinite(r)) m = std::max(m, r);
  return m;
}

double Diagnostics::min_ess() const {
  double m = std::numeric_limits<double>::infinity();
  for (double e : ess)
    if (std::isfinite(e)) m = std::min(m, e);
  return m;
}

Diagnostics diagnose(const PosteriorDraws& draws) {
  if (draws.chains.size() < 2) throw UsageError("diagnostics require at least 2 chains");
  if (draws.samples_per_chain < 4) throw UsageError("diagnostics require at least 4 draws per chain");
  Diagnostics d;
  const int dim = draws.dim;
  d.rhat.resize(dim);
  d.ess.resize(dim);
  d.constant.assign(dim, 0);
  std::vector<std::vector<double>> chains(draws.chains.size());
  for (int p = 0; p < dim; ++p) {
    for (std::size_t c = 0; c < draws.chains.size(); ++c) {
      chains[c].resize(draws.samples_per_chain);
      for (int t = 0; t < draws.samples_per_chain; ++t)
        chains[c][t] = draws.chains[c].value(t, p, dim);
    }
    bool constant = any_constant(chains);
    d.constant[p] = constant ? 1 : 0;
    d.rhat[p] = constant ? kNan : split_rank_normalized_rhat(chains);
    d.ess[p] = constant ? kNan : ess_combined(chains);
  }
  for (const auto& c : draws.chains) {
    d.divergences += c.divergences;
    d.max_depth_hits += c.max_depth_hits;
  }
  return d;
}

}  // namespace varorder
