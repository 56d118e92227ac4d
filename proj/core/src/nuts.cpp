#include "varorder/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "varorder/errors.hpp"
#include "varorder/rng.hpp"

namespace varorder {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct State {
  std::vector<double> q, p, grad;
  double logp = -kInf;
};

/// Diagonal-metric Hamiltonian with one scratch evaluation path.
class System {
 public:
  System(const TargetDensity& target, int dim) : target_(target), dim_(dim), inv_metric_(dim, 1.0) {}

  int dim() const { return dim_; }
  const std::vector<double>& inv_metric() const { return inv_metric_; }
  void set_inv_metric(std::vector<double> v) { inv_metric_ = std::move(v); }

  double logp(State& z) const {
    z.logp = target_(z.q, z.grad);
    return z.logp;
  }

  double kinetic(const std::vector<double>& p) const {
    double k = 0.0;
    for (int i = 0; i < dim_; ++i) k += inv_metric_[i] * p[i] * p[i];
    return 0.5 * k;
  }

  /// H = -log p(q) + K(p); +inf for invalid states so comparisons stay sane.
  double hamiltonian(const State& z) const {
    if (!std::isfinite(z.logp)) return kInf;
    double h = -z.logp + kinetic(z.p);
    return std::isfinite(h) ? h : kInf;
  }

  void sample_momentum(State& z, Rng& rng) const {
    for (int i = 0; i < dim_; ++i) z.p[i] = rng.normal() / std::sqrt(inv_metric_[i]);
  }

  /// One leapfrog step of signed size eps (direction folded into the sign).
  void leapfrog(State& z, double eps) const {
    for (int i = 0; i < dim_; ++i) z.p[i] += 0.5 * eps * z.grad[i];
    for (int i = 0; i < dim_; ++i) z.q[i] += eps * inv_metric_[i] * z.p[i];
    logp(z);
    if (std::isfinite(z.logp))
      for (int i = 0; i < dim_; ++i) z.p[i] += 0.5 * eps * z.grad[i];
  }

 private:
  const TargetDensity& target_;
  int dim_;
  std::vector<double> inv_metric_;
};

/// Generalized no-U-turn condition on a subtree: the momentum sum must point
/// away from both ends (in the metric inner product).
bool no_uturn(const System& sys, const std::vector<double>& rho, const std::vector<double>& p_begin,
              const std::vector<double>& p_end) {
  const auto& mi = sys.inv_metric();
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    a += rho[i] * mi[i] * p_begin[i];
    b += rho[i] * mi[i] * p_end[i];
  }
  return a > 0.0 && b > 0.0;
}

struct TreeStats {
  double sum_accept = 0.0;
  double sum_abs_denergy = 0.0;
  int n_leaves = 0;
  bool divergent = false;
};

struct Subtree {
  std::vector<double> rho;
  std::vector<double> p_begin, p_end;
  State prop;        // multinomial proposal within the subtree
  double lsw = -kInf;  // log sum of leaf weights exp(H0 - H)
  bool ok = false;     // expandable: no divergence, no internal U-turn
};

class NutsChain {
 public:
  NutsChain(const System& sys, Rng& rng, double divergence_threshold, int max_depth)
      : sys_(sys), rng_(rng), div_threshold_(divergence_threshold), max_depth_(max_depth) {}

  struct Transition {
    int treedepth = 0;
    bool divergent = false;
    double accept_stat = 0.0;
    double mean_abs_denergy = 0.0;
  };

  Transition transit(State& z, double eps) {
    sys_.sample_momentum(z, rng_);
    h0_ = sys_.hamiltonian(z);
    eps_ = eps;
    stats_ = TreeStats{};

    State z_minus = z, z_plus = z, selected = z;
    std::vector<double> rho = z.p;
    double lsw_tree = 0.0;  // weight 1 for the initial point

    Transition tr;
    for (int depth = 0; depth < max_depth_; ++depth) {
      bool forward = rng_.uniform() < 0.5;
      State& end = forward ? z_plus : z_minus;
      Subtree sub = build_tree(depth, end, forward ? 1 : -1);
      if (stats_.divergent) {
        tr.divergent = true;
        break;
      }
      if (!sub.ok) break;
      // Biased progressive sampling: favor the fresh subtree.
      if (std::log(rng_.uniform()) < sub.lsw - lsw_tree) selected = sub.prop;
      lsw_tree = log_sum_exp(lsw_tree, sub.lsw);
      for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += sub.rho[i];
      tr.treedepth = depth + 1;
      if (!no_uturn(sys_, rho, z_minus.p, z_plus.p)) break;
    }
    z = selected;
    tr.accept_stat = stats_.n_leaves > 0 ? stats_.sum_accept / stats_.n_leaves : 0.0;
    tr.mean_abs_denergy = stats_.n_leaves > 0 ? stats_.sum_abs_denergy / stats_.n_leaves : 0.0;
    return tr;
  }

 private:
  Subtree build_tree(int depth, State& z, int dir) {
    Subtree out;
    if (depth == 0) {
      sys_.leapfrog(z, dir * eps_);
      double h = sys_.hamiltonian(z);
      double de = h - h0_;  // +inf allowed
      stats_.n_leaves += 1;
      stats_.sum_accept += std::isfinite(de) ? std::min(1.0, std::exp(-de)) : 0.0;
      stats_.sum_abs_denergy += std::isfinite(de) ? std::fabs(de) : div_threshold_;
      if (!(de < div_threshold_)) {
        stats_.divergent = true;
        return out;
      }
      out.rho = z.p;
      out.p_begin = z.p;
      out.p_end = z.p;
      out.prop = z;
      out.lsw = -de;
      out.ok = true;
      return out;
    }

    Subtree first = build_tree(depth - 1, z, dir);
    if (!first.ok) return first;
    Subtree second = build_tree(depth - 1, z, dir);
    if (!second.ok) return second;

    Subtree merged;
    merged.lsw = log_sum_exp(first.lsw, second.lsw);
    // Uniform within-tree selection between the halves.
    merged.prop = (std::log(rng_.uniform()) < second.lsw - merged.lsw) ? std::move(second.prop)
                                                                       : std::move(first.prop);
    merged.rho.resize(first.rho.size());
    for (std::size_t i = 0; i < merged.rho.size(); ++i) merged.rho[i] = first.rho[i] + second.rho[i];
    merged.p_begin = std::move(first.p_begin);
    merged.p_end = std::move(second.p_end);
    merged.ok = no_uturn(sys_, merged.rho, merged.p_begin, merged.p_end);
    return merged;
  }

  const System& sys_;
  Rng& rng_;
  double div_threshold_;
  int max_depth_;
  double h0_ = 0.0;
  double eps_ = 1.0;
  TreeStats stats_;
};

/// Nesterov dual averaging on log step size, tuned as in standard NUTS
/// implementations (gamma 0.05, t0 10, kappa 0.75).
struct DualAveraging {
  double mu = 0.0, s_bar = 0.0, x_bar = 0.0;
  int counter = 0;
  double delta = 0.8;

  void restart(double eps) {
    mu = std::log(10.0 * eps);
    s_bar = 0.0;
    x_bar = 0.0;
    counter = 0;
  }
  double learn(double accept_stat) {
    ++counter;
    double eta = 1.0 / (counter + 10.0);
    s_bar = (1.0 - eta) * s_bar + eta * (delta - accept_stat);
    double x = mu - s_bar * std::sqrt(static_cast<double>(counter)) / 0.05;
    double w = std::pow(counter, -0.75);
    x_bar = (1.0 - w) * x_bar + w * x;
    return std::exp(x);
  }
  double frozen() const { return std::exp(x_bar); }
};

struct Welford {
  int n = 0;
  std::vector<double> mean, m2;

  explicit Welford(int dim) : mean(dim, 0.0), m2(dim, 0.0) {}
  void reset() {
    n = 0;
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(m2.begin(), m2.end(), 0.0);
  }
  void add(const std::vector<double>& x) {
    ++n;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      double d = x[i] - mean[i];
      mean[i] += d / n;
      m2[i] += d * (x[i] - mean[i]);
    }
  }
  /// Regularized diagonal variance, shrunk toward 1e-3 at small counts.
  std::vector<double> regularized_variance() const {
    std::vector<double> v(mean.size(), 1.0);
    if (n < 2) return v;
    double w = static_cast<double>(n) / (n + 5.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      double var = m2[i] / (n - 1);
      v[i] = w * var + 1e-3 * (1.0 - w);
      if (!(v[i] > 0.0) || !std::isfinite(v[i])) v[i] = 1.0;
    }
    return v;
  }
};

/// Step-size bracketing: double or halve until the one-step acceptance
/// probability crosses 1/2.
double find_reasonable_stepsize(const System& sys, const State& z0, Rng& rng) {
  double eps = 1.0;
  State z = z0;
  sys.sample_momentum(z, rng);
  State start = z;
  double h0 = sys.hamiltonian(z);
  sys.leapfrog(z, eps);
  double dh = h0 - sys.hamiltonian(z);  // log acceptance ratio
  if (!std::isfinite(dh)) dh = -kInf;
  double dir = dh > std::log(0.5) ? 1.0 : -1.0;
  for (int it = 0; it < 100; ++it) {
    z = start;
    sys.leapfrog(z, eps);
    dh = h0 - sys.hamiltonian(z);
    if (!std::isfinite(dh)) dh = -kInf;
    if (dir > 0.0 ? dh <= std::log(0.5) : dh >= std::log(0.5)) break;
    eps *= dir > 0.0 ? 2.0 : 0.5;
    if (eps > 1e7 || eps < 1e-10) break;
  }
  return eps;
}

struct WarmupSchedule {
  int init_end = 0;                // fast opening buffer [0, init_end)
  std::vector<int> window_ends;    // metric windows, each ends at these iters
  int term_start = 0;              // fast closing buffer [term_start, warmup)
};

WarmupSchedule plan_warmup(const SamplerConfig& cfg) {
  WarmupSchedule plan;
  const int warmup = cfg.warmup;
  double scale = warmup / 1000.0;
  auto scaled = [scale](int v) { return std::max(1, static_cast<int>(std::lround(v * scale))); };
  int ib = scaled(cfg.init_buffer), tb = scaled(cfg.term_buffer), bw = scaled(cfg.base_window);
  if (ib + tb + bw > warmup) {
    ib = std::max(1, static_cast<int>(0.15 * warmup));
    tb = std::max(1, static_cast<int>(0.10 * warmup));
    bw = warmup - ib - tb;
    if (bw < 1) {  // warmup too short for any metric window: stepsize only
      plan.init_end = warmup;
      plan.term_start = warmup;
      return plan;
    }
  }
  plan.init_end = ib;
  plan.term_start = warmup - tb;
  int pos = ib, size = bw;
  while (pos < plan.term_start) {
    int end = pos + size;
    if (end + 2 * size > plan.term_start) end = plan.term_start;  // absorb remainder
    plan.window_ends.push_back(std::min(end, plan.term_start));
    pos = plan.window_ends.back();
    size *= 2;
  }
  return plan;
}

State initialize_chain(const System& sys, const SamplerConfig& cfg, Rng& rng) {
  const int dim = sys.dim();
  State z;
  z.q.resize(dim);
  z.p.resize(dim);
  z.grad.resize(dim);
  if (!cfg.init_point.empty()) {
    if (static_cast<int>(cfg.init_point.size()) != dim)
      throw UsageError("sampler init point has dimension " + std::to_string(cfg.init_point.size()) +
                       ", expected " + std::to_string(dim));
    z.q = cfg.init_point;
    State probe = z;
    if (std::isfinite(sys.logp(probe))) return probe;
    throw DomainError("log density not finite at the supplied initial point");
  }
  for (int attempt = 0; attempt < cfg.init_retries; ++attempt) {
    for (int i = 0; i < dim; ++i) z.q[i] = rng.uniform(-cfg.init_radius, cfg.init_radius);
    if (!std::isfinite(sys.logp(z))) continue;
    bool grad_ok = true;
    for (int i = 0; i < dim && grad_ok; ++i) grad_ok = std::isfinite(z.grad[i]);
    if (grad_ok) return z;
  }
  throw DomainError("failed to find a finite initialization point after " +
                    std::to_string(cfg.init_retries) + " attempts");
}

ChainDraws run_chain(const TargetDensity& target, int dim, const SamplerConfig& cfg, int chain_index) {
  Rng rng(cfg.seed, static_cast<std::uint64_t>(chain_index));
  System sys(target, dim);
  if (!cfg.inv_metric.empty()) {
    if (static_cast<int>(cfg.inv_metric.size()) != dim)
      throw UsageError("inv_metric dimension mismatch");
    sys.set_inv_metric(cfg.inv_metric);
  }

  State z = initialize_chain(sys, cfg, rng);
  NutsChain nuts(sys, rng, cfg.divergence_threshold, cfg.max_treedepth);

  ChainDraws out;
  out.draws.reserve(static_cast<std::size_t>(cfg.samples) * dim);

  double eps = cfg.fixed_stepsize;
  DualAveraging da;
  da.delta = cfg.target_accept;
  WarmupSchedule plan = plan_warmup(cfg);
  Welford acc(dim);
  std::size_t next_window = 0;

  if (cfg.adapt) {
    eps = find_reasonable_stepsize(sys, z, rng);
    da.restart(eps);
  }

  for (int it = 0; it < cfg.warmup; ++it) {
    auto tr = nuts.transit(z, eps);
    if (tr.divergent) ++out.warmup_divergences;
    if (!cfg.adapt) continue;
    eps = da.learn(tr.accept_stat);
    bool in_window = it >= plan.init_end && it < plan.term_start;
    if (in_window) acc.add(z.q);
    if (next_window < plan.window_ends.size() && it + 1 == plan.window_ends[next_window]) {
      sys.set_inv_metric(acc.regularized_variance());
      acc.reset();
      ++next_window;
      eps = find_reasonable_stepsize(sys, z, rng);
      da.restart(eps);
    }
  }
  if (cfg.adapt && cfg.warmup > 0) eps = da.frozen();

  for (int it = 0; it < cfg.samples; ++it) {
    auto tr = nuts.transit(z, eps);
    out.draws.insert(out.draws.end(), z.q.begin(), z.q.end());
    out.lp.push_back(z.logp);
    out.treedepth.push_back(tr.treedepth);
    out.divergent.push_back(tr.divergent ? 1 : 0);
    out.stepsize.push_back(eps);
    out.energy_error.push_back(tr.mean_abs_denergy);
    if (tr.divergent) ++out.divergences;
    if (tr.treedepth >= cfg.max_treedepth) ++out.max_depth_hits;
  }
  out.final_stepsize = eps;
  out.inv_metric = sys.inv_metric();
  return out;
}

}  // namespace

PosteriorDraws sample(const TargetDensity& target, int dim, const SamplerConfig& cfg) {
  if (dim < 1) throw UsageError("sampler dimension must be positive");
  if (cfg.chains < 1 || cfg.samples < 1 || cfg.warmup < 0)
    throw UsageError("sampler configuration must have chains >= 1, samples >= 1, warmup >= 0");
  PosteriorDraws out;
  out.dim = dim;
  out.samples_per_chain = cfg.samples;
  out.chains.reserve(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) out.chains.push_back(run_chain(target, dim, cfg, c));
  return out;
}

}  // namespace varorder
