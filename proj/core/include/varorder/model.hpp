#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "varorder/autodiff.hpp"
#include "varorder/distributions.hpp"
#include "varorder/errors.hpp"
#include "varorder/matrix.hpp"
#include "varorder/reparam.hpp"
#include "varorder/target.hpp"

namespace varorder {

/// Multiplicative gamma process hyperparameters. The precision of a_{s,ij} is
/// lambda_{s,ij} * tau_s with tau_s = prod_{k<=s} delta_k, so lags are shrunk
/// increasingly hard as long as a2 > 1.
struct MgpHyperParams {
  double a = 6.0;    // local precisions lambda ~ Gamma(a/2, a/2)
  double a1 = 2.5;   // delta_1 ~ Gamma(a1, 1)
  double a2 = 3.0;   // delta_s ~ Gamma(a2, 1), s >= 2
};

/// Inverse Wishart prior on the innovation variance. An empty scale matrix
/// means the identity; dof <= 0 means m + 4.
struct SigmaPrior {
  linalg::Matrix scale;
  double dof = 0.0;

  linalg::Matrix scale_for(int m) const {
    return scale.rows() == m ? scale : linalg::Matrix::identity(m);
  }
  double dof_for(int m) const { return dof > 0.0 ? dof : m + 4.0; }
};

struct Dataset {
  int n = 0;
  int m = 0;
  std::vector<double> y;  // row-major n x m
  double time_step = 1.0;
  std::vector<std::string> names;

  double at(int t, int j) const { return y[static_cast<std::size_t>(t) * m + j]; }
};

struct ModelConfig {
  int p_max = 8;
  MgpHyperParams mgp;
  SigmaPrior sigma_prior;
  bool likelihood_enabled = true;
};

/// Index map for the unconstrained parameter vector. Layout, in order:
///   a[s,i,j]          lag-major, then row, then column
///   log_lambda[s,i,j] same layout
///   log_delta[s]
///   L[i,j]            lower triangle of chol(Sigma), row-major, log diagonal
struct ParamLayout {
  int m = 0;
  int p_max = 0;

  int size_a() const { return p_max * m * m; }
  int delta_offset() const { return 2 * size_a(); }
  int chol_offset() const { return delta_offset() + p_max; }
  int dim() const { return chol_offset() + m * (m + 1) / 2; }

  int a_index(int s, int i, int j) const { return (s * m + i) * m + j; }
  int lambda_index(int s, int i, int j) const { return size_a() + (s * m + i) * m + j; }
  int delta_index(int s) const { return delta_offset() + s; }
  int chol_index(int i, int j) const { return chol_offset() + i * (i + 1) / 2 + j; }

  std::vector<std::string> parameter_names() const;
};

/// Structured view of one parameter vector. chol_sigma is the actual factor
/// (diagonal exponentiated), so Sigma = L L^T.
template <class T>
struct UnpackedParams {
  std::vector<Mat<T>> a;
  std::vector<Mat<T>> log_lambda;
  std::vector<T> log_delta;
  Mat<T> chol_sigma;
};

template <class T>
UnpackedParams<T> unpack_params(std::span<const T> theta, const ParamLayout& lay) {
  using std::exp;
  const int m = lay.m;
  UnpackedParams<T> out;
  out.a.assign(lay.p_max, Mat<T>(m, m));
  out.log_lambda.assign(lay.p_max, Mat<T>(m, m));
  out.log_delta.resize(lay.p_max);
  out.chol_sigma = Mat<T>(m, m);
  for (int s = 0; s < lay.p_max; ++s)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        out.a[s](i, j) = theta[lay.a_index(s, i, j)];
        out.log_lambda[s](i, j) = theta[lay.lambda_index(s, i, j)];
      }
  for (int s = 0; s < lay.p_max; ++s) out.log_delta[s] = theta[lay.delta_index(s)];
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      T v = theta[lay.chol_index(i, j)];
      out.chol_sigma(i, j) = (i == j) ? exp(v) : v;
    }
  return out;
}

std::vector<double> pack_params(const UnpackedParams<double>& params, const ParamLayout& lay);

/// Log density split by source. Jacobian terms account for sampling
/// log(lambda), log(delta) and the log-Cholesky factor of Sigma on
/// unconstrained scales.
template <class T>
struct LogDensityParts {
  T prior_a{0.0};
  T prior_lambda{0.0};
  T prior_delta{0.0};
  T prior_sigma{0.0};
  T jacobian{0.0};
  T likelihood{0.0};
  bool valid = true;

  T total() const {
    if (!valid) return T(-std::numeric_limits<double>::infinity());
    return prior_a + prior_lambda + prior_delta + prior_sigma + jacobian + likelihood;
  }
};

namespace model_detail {

template <class T>
void accumulate_prior(const UnpackedParams<T>& params, const ParamLayout& lay, const ModelConfig& cfg,
                      LogDensityParts<T>& parts) {
  using std::exp;
  using std::log;
  const int m = lay.m;
  const MgpHyperParams& h = cfg.mgp;

  T log_tau(0.0);
  for (int s = 0; s < lay.p_max; ++s) {
    log_tau = log_tau + params.log_delta[s];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const T& ll = params.log_lambda[s](i, j);
        T lambda = exp(ll);
        T prec = exp(ll + log_tau);
        parts.prior_a = parts.prior_a + normal_logpdf_prec(params.a[s](i, j), prec);
        parts.prior_lambda = parts.prior_lambda + gamma_logpdf(lambda, h.a / 2.0, h.a / 2.0);
        parts.jacobian = parts.jacobian + ll;
      }
    T delta = exp(params.log_delta[s]);
    parts.prior_delta = parts.prior_delta + gamma_logpdf(delta, s == 0 ? h.a1 : h.a2, 1.0);
    parts.jacobian = parts.jacobian + params.log_delta[s];
  }

  parts.prior_sigma = inv_wishart_logpdf_chol(params.chol_sigma, cfg.sigma_prior.scale_for(m),
                                              cfg.sigma_prior.dof_for(m));
  // |d Sigma / d theta_L| = 2^m prod L_ii^{m-i+1} times prod L_ii for the
  // logged diagonal, i counted from 1.
  parts.jacobian = parts.jacobian + m * std::log(2.0);
  for (int i = 0; i < m; ++i)
    parts.jacobian = parts.jacobian + (m - i + 1) * log(params.chol_sigma(i, i));
}

template <class T>
void accumulate_likelihood(const UnpackedParams<T>& params, const Dataset& data, const ParamLayout& lay,
                           LogDensityParts<T>& parts) {
  const int m = lay.m;
  const int p = lay.p_max;

  auto pacf = reparam_detail::a_to_pacf_impl(params.a);
  if (!pacf) {
    parts.valid = false;
    return;
  }
  Mat<T> sigma = symmetrize(params.chol_sigma * transpose(params.chol_sigma));
  auto map = reparam_detail::pacf_to_var_impl(sigma, *pacf);
  if (!map.ok()) {
    parts.valid = false;
    return;
  }

  // Joint Gaussian for the first p observations, stacked newest first.
  auto gamma_ext = reparam_detail::extend_autocovariances(map.phi, map.gamma, p - 1);
  Mat<T> g = reparam_detail::stacked_initial_variance(gamma_ext, p);
  auto chol_g = cholesky_lower(g);
  if (!chol_g) {
    parts.valid = false;
    return;
  }
  std::vector<T> z(static_cast<std::size_t>(m) * p);
  for (int b = 0; b < p; ++b)
    for (int j = 0; j < m; ++j) z[static_cast<std::size_t>(b) * m + j] = T(data.at(p - 1 - b, j));
  parts.likelihood = parts.likelihood + mvn_logpdf_chol(z, *chol_g);

  // Conditional one-step densities for the rest.
  std::vector<T> resid(m);
  for (int t = p; t < data.n; ++t) {
    for (int i = 0; i < m; ++i) resid[i] = T(data.at(t, i));
    for (int j = 0; j < p; ++j) {
      const Mat<T>& phi = map.phi[j];
      for (int i = 0; i < m; ++i) {
        T acc = resid[i];
        for (int k = 0; k < m; ++k) acc = acc - phi(i, k) * data.at(t - 1 - j, k);
        resid[i] = acc;
      }
    }
    parts.likelihood = parts.likelihood + mvn_logpdf_chol(resid, params.chol_sigma);
  }
}

}  // namespace model_detail

template <class T>
LogDensityParts<T> log_posterior_parts(std::span<const T> theta, const Dataset& data, const ModelConfig& cfg) {
  ParamLayout lay{data.m, cfg.p_max};
  LogDensityParts<T> parts;
  UnpackedParams<T> params = unpack_params(theta, lay);
  model_detail::accumulate_prior(params, lay, cfg, parts);
  if (cfg.likelihood_enabled) model_detail::accumulate_likelihood(params, data, lay, parts);
  return parts;
}

/// --- double-precision entry points ---

double log_prior_mgp(std::span<const double> theta, int m, int p_max, const MgpHyperParams& h);
double log_prior_sigma(std::span<const double> theta, int m, int p_max, const SigmaPrior& prior);
double log_likelihood(std::span<const double> theta, const Dataset& data, int p_max);
double log_posterior(std::span<const double> theta, const Dataset& data, const ModelConfig& cfg);

/// Log density with gradient, for the sampler. Non-finite values (invalid
/// intermediates) come back as -inf with the gradient zeroed.
TargetDensity make_target(const Dataset& data, const ModelConfig& cfg);

}  // namespace varorder
