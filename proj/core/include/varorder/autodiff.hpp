#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace varorder::ad {

/// One recorded operation: up to two parents with the local partial
/// derivative of this node with respect to each. Parent index -1 marks a
/// constant (no propagation).
struct Node {
  std::int32_t p1;
  std::int32_t p2;
  double d1;
  double d2;
};

class Tape {
 public:
  std::int32_t record(std::int32_t p1, double d1, std::int32_t p2, double d2) {
    nodes_.push_back({p1, p2, d1, d2});
    return static_cast<std::int32_t>(nodes_.size()) - 1;
  }

  std::int32_t input() { return record(-1, 0.0, -1, 0.0); }

  void reset() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  /// Reverse sweep from `root`; adjoints of the first `n_inputs` nodes land in
  /// `grad` (inputs are recorded first, in order).
  void backward(std::int32_t root, std::span<double> grad, std::vector<double>& adj_buffer) const {
    adj_buffer.assign(nodes_.size(), 0.0);
    adj_buffer[root] = 1.0;
    for (std::int32_t i = root; i >= 0; --i) {
      double a = adj_buffer[i];
      if (a == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.p1 >= 0) adj_buffer[n.p1] += n.d1 * a;
      if (n.p2 >= 0) adj_buffer[n.p2] += n.d2 * a;
    }
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = adj_buffer[i];
  }

 private:
  std::vector<Node> nodes_;
};

inline Tape*& active_tape() {
  thread_local Tape* tape = nullptr;
  return tape;
}

/// Activates a tape for the current thread for the lifetime of the scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape) : prev_(active_tape()) { active_tape() = &tape; }
  ~TapeScope() { active_tape() = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

/// Scalar that records its operations on the thread's active tape. Without an
/// active tape it degrades to plain double arithmetic (value-tracking mode),
/// producing bit-identical values since the same double expressions run.
class Var {
 public:
  Var() : v_(0.0), i_(-1) {}
  Var(double v) : v_(v), i_(-1) {}  // NOLINT: implicit constants are the point
  Var(double v, std::int32_t i) : v_(v), i_(i) {}

  static Var input(double v) {
    Tape* t = active_tape();
    return Var(v, t ? t->input() : -1);
  }

  double value() const { return v_; }
  std::int32_t index() const { return i_; }

 private:
  double v_;
  std::int32_t i_;
};

inline double value_of(const Var& x) { return x.value(); }

namespace detail {
inline Var make(double v, std::int32_t p1, double d1, std::int32_t p2, double d2) {
  Tape* t = active_tape();
  if (t == nullptr || (p1 < 0 && p2 < 0)) return Var(v);
  return Var(v, t->record(p1, d1, p2, d2));
}
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::make(a.value() + b.value(), a.index(), 1.0, b.index(), 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::make(a.value() - b.value(), a.index(), 1.0, b.index(), -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::make(a.value() * b.value(), a.index(), b.value(), b.index(), a.value());
}
inline Var operator/(const Var& a, const Var& b) {
  double inv = 1.0 / b.value();
  double v = a.value() * inv;
  return detail::make(v, a.index(), inv, b.index(), -v * inv);
}
inline Var operator-(const Var& a) { return detail::make(-a.value(), a.index(), -1.0, -1, 0.0); }
inline Var operator+(const Var& a) { return a; }

inline Var operator+(const Var& a, double b) { return detail::make(a.value() + b, a.index(), 1.0, -1, 0.0); }
inline Var operator+(double a, const Var& b) { return b + a; }
inline Var operator-(const Var& a, double b) { return detail::make(a.value() - b, a.index(), 1.0, -1, 0.0); }
inline Var operator-(double a, const Var& b) { return detail::make(a - b.value(), b.index(), -1.0, -1, 0.0); }
inline Var operator*(const Var& a, double b) { return detail::make(a.value() * b, a.index(), b, -1, 0.0); }
inline Var operator*(double a, const Var& b) { return b * a; }
inline Var operator/(const Var& a, double b) { return a * (1.0 / b); }
inline Var operator/(double a, const Var& b) {
  double inv = 1.0 / b.value();
  return detail::make(a * inv, b.index(), -a * inv * inv, -1, 0.0);
}

inline Var log(const Var& a) { return detail::make(std::log(a.value()), a.index(), 1.0 / a.value(), -1, 0.0); }
inline Var exp(const Var& a) {
  double v = std::exp(a.value());
  return detail::make(v, a.index(), v, -1, 0.0);
}
inline Var sqrt(const Var& a) {
  double v = std::sqrt(a.value());
  return detail::make(v, a.index(), 0.5 / v, -1, 0.0);
}
inline Var fabs(const Var& a) {
  return detail::make(std::fabs(a.value()), a.index(), a.value() >= 0.0 ? 1.0 : -1.0, -1, 0.0);
}

inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }
inline bool operator<=(const Var& a, const Var& b) { return a.value() <= b.value(); }
inline bool operator>=(const Var& a, const Var& b) { return a.value() >= b.value(); }
inline bool operator<(const Var& a, double b) { return a.value() < b; }
inline bool operator>(const Var& a, double b) { return a.value() > b; }

struct GradientResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> gradient;
  bool gradient_valid = false;
};

/// Owns the tape buffers for repeated gradient evaluations. One context per
/// chain; a context must not be shared between threads.
class GradientContext {
 public:
  /// f maps std::span<const Var> to Var. Returns f's value; writes df/dx into
  /// grad. A non-finite value leaves grad filled with NaN.
  template <class F>
  double value_and_gradient(F&& f, std::span<const double> x, std::span<double> grad) {
    tape_.reset();
    TapeScope scope(tape_);
    inputs_.clear();
    inputs_.reserve(x.size());
    for (double xi : x) inputs_.push_back(Var::input(xi));
    Var y = f(std::span<const Var>(inputs_));
    if (!std::isfinite(y.value())) {
      for (double& g : grad) g = std::numeric_limits<double>::quiet_NaN();
      return y.value();
    }
    if (y.index() < 0) {
      for (double& g : grad) g = 0.0;
      return y.value();
    }
    tape_.backward(y.index(), grad, adjoints_);
    return y.value();
  }

  std::size_t last_tape_size() const { return tape_.size(); }

 private:
  Tape tape_;
  std::vector<Var> inputs_;
  std::vector<double> adjoints_;
};

/// One-shot convenience wrapper around GradientContext.
template <class F>
GradientResult gradient(F&& f, std::span<const double> x) {
  GradientContext ctx;
  GradientResult out;
  out.gradient.resize(x.size());
  out.value = ctx.value_and_gradient(f, x, out.gradient);
  out.gradient_valid = std::isfinite(out.value);
  return out;
}

}  // namespace varorder::ad
