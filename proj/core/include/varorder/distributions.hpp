#pragma once

#include <cmath>
#include <numbers>

#include "varorder/matrix.hpp"
#include "varorder/special.hpp"

namespace varorder {

inline constexpr double log_two_pi = 1.8378770664093454836;

/// log N(x | 0, 1/precision); precision may be a tape variable.
template <class T>
T normal_logpdf_prec(const T& x, const T& precision) {
  using std::log;
  return 0.5 * log(precision) - 0.5 * log_two_pi - 0.5 * precision * x * x;
}

template <class T>
T normal_logpdf(const T& x, const T& mean, const T& sd) {
  using std::log;
  T z = (x - mean) / sd;
  return -log(sd) - 0.5 * log_two_pi - 0.5 * z * z;
}

/// log Gamma(x | shape, rate), shape-rate parameterization (mean shape/rate).
template <class T>
T gamma_logpdf(const T& x, double shape, double rate) {
  using std::log;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * log(x) - rate * x;
}

/// log inverse-Wishart(Sigma | scale, dof) evaluated from Sigma's lower
/// Cholesky factor L (Sigma = L L^T). Using the factor directly avoids a
/// second factorization on the sampled path, where L is the parameter.
template <class T>
T inv_wishart_logpdf_chol(const Mat<T>& chol_sigma, const Mat<double>& scale, double dof) {
  using std::log;
  const int m = chol_sigma.rows();
  // log det Sigma and tr(scale * Sigma^{-1}) from the factor.
  T log_det = T(0);
  for (int i = 0; i < m; ++i) log_det = log_det + 2.0 * log(chol_sigma(i, i));
  // tr(scale * Sigma^{-1}) = sum_j scale_col_j . (Sigma^{-1} e_j)
  T trace_term = T(0);
  std::vector<T> col(m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) col[i] = T(scale(i, j));
    solve_lower_in_place(chol_sigma, col);
    solve_lower_transpose_in_place(chol_sigma, col);
    // row j of scale against Sigma^{-1} scale e_j contributes the diagonal
    trace_term = trace_term + col[j];
  }
  // normalizing constant needs log det(scale); scale is plain double data
  auto chol_scale = cholesky_lower(scale);
  double log_det_scale = 0.0;
  if (chol_scale)
    for (int i = 0; i < m; ++i) log_det_scale += 2.0 * std::log((*chol_scale)(i, i));
  double norm = 0.5 * dof * log_det_scale - 0.5 * dof * m * std::numbers::ln2 - log_multigamma(m, 0.5 * dof);
  return norm - 0.5 * (dof + m + 1.0) * log_det - 0.5 * trace_term;
}

/// log N(resid | 0, Sigma) given the lower Cholesky factor of Sigma.
template <class T>
T mvn_logpdf_chol(std::vector<T> resid, const Mat<T>& chol) {
  using std::log;
  const int n = chol.rows();
  solve_lower_in_place(chol, resid);
  T quad = T(0);
  for (const T& w : resid) quad = quad + w * w;
  T half_log_det = T(0);
  for (int i = 0; i < n; ++i) half_log_det = half_log_det + log(chol(i, i));
  return -0.5 * n * log_two_pi - half_log_det - 0.5 * quad;
}

}  // namespace varorder
