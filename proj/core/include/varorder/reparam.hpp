#pragma once

#include <optional>
#include <vector>

#include "varorder/linalg.hpp"
#include "varorder/matrix.hpp"

namespace varorder {

/// Stationary VAR in its original coordinates: error variance, coefficient
/// matrices phi_1..phi_p, and the autocovariances Gamma_0..Gamma_{p-1} with
/// the convention Gamma_h = E[y_t y_{t-h}^T].
struct VarModel {
  linalg::Matrix sigma;
  std::vector<linalg::Matrix> phi;
  std::vector<linalg::Matrix> gamma;

  int dim() const { return sigma.rows(); }
  int order() const { return static_cast<int>(phi.size()); }
};

/// Conditional variances produced alongside the coefficient recursion:
/// fwd[s] = Var(y_{t+1} | last s values), bwd[s] the time-reversed analogue.
struct StageVariances {
  std::vector<linalg::Matrix> fwd;  // Sigma_0..Sigma_p
  std::vector<linalg::Matrix> bwd;  // Sigma*_0..Sigma*_p
};

struct StationarityCheck {
  bool stable = false;
  double spectral_radius = 0.0;
};

namespace reparam_detail {

/// Everything the recursion produces, for any scalar type. failed_stage >= 0
/// flags a numerically failed intermediate (non-SPD stage); callers on the
/// sampled path turn that into a rejected proposal.
template <class T>
struct MappingResult {
  std::vector<Mat<T>> phi;        // final-stage coefficients phi_{p,1..p}
  std::vector<Mat<T>> gamma;      // Gamma_0..Gamma_{p-1}
  std::vector<Mat<T>> sigma_fwd;  // Sigma_0..Sigma_p
  std::vector<Mat<T>> sigma_bwd;  // Sigma*_0..Sigma*_p
  int failed_stage = -1;

  bool ok() const { return failed_stage < 0; }
};

/// P_s = (I + A_s A_s^T)^{-1/2} A_s per lag, by Denman-Beavers so the map
/// stays on the autodiff tape.
template <class T>
std::optional<std::vector<Mat<T>>> a_to_pacf_impl(const std::vector<Mat<T>>& a) {
  std::vector<Mat<T>> p;
  p.reserve(a.size());
  for (const Mat<T>& as : a) {
    const int m = as.rows();
    Mat<T> gram = symmetrize(Mat<T>::identity(m) + as * transpose(as));
    auto roots = denman_beavers(gram);
    if (!roots || !roots->converged) return std::nullopt;
    p.push_back(roots->inv_sqrt * as);
  }
  return p;
}

/// The recursive map from (Sigma, P_1..P_p) to coefficients, stage variances
/// and autocovariances.
///
/// Backward pass: with B = I - P_{s+1} P_{s+1}^T, the stage variance solves
/// Sigma_{s+1} = Sigma_s^{1/2} B Sigma_s^{1/2}; the closed form used is
/// Sigma_s^{1/2} = B^{-1/2} (B^{1/2} Sigma_{s+1} B^{1/2})^{1/2} B^{-1/2}.
/// Forward pass fills the reversed-process variances, and the coefficient
/// recursion is the multivariate Durbin-Levinson update driven by
/// phi_{s+1,s+1} = Sigma_s^{1/2} P_{s+1} (Sigma*_s)^{-1/2}.
template <class T>
MappingResult<T> pacf_to_var_impl(const Mat<T>& sigma, const std::vector<Mat<T>>& pacf,
                                  std::vector<std::vector<Mat<T>>>* stage_phi = nullptr) {
  const int p = static_cast<int>(pacf.size());
  const int m = sigma.rows();
  MappingResult<T> out;
  const Mat<T> eye = Mat<T>::identity(m);

  std::vector<Mat<T>> sig(p + 1), sig_half(p + 1), sig_half_inv(p + 1);
  sig[p] = symmetrize(sigma);
  for (int s = p - 1; s >= 0; --s) {
    Mat<T> b = symmetrize(eye - pacf[s] * transpose(pacf[s]));
    auto b_roots = denman_beavers(b);
    if (!b_roots || !b_roots->converged) {
      out.failed_stage = s;
      return out;
    }
    Mat<T> inner = symmetrize(b_roots->sqrt * sig[s + 1] * b_roots->sqrt);
    auto inner_roots = denman_beavers(inner);
    if (!inner_roots || !inner_roots->converged) {
      out.failed_stage = s;
      return out;
    }
    sig_half[s] = symmetrize(b_roots->inv_sqrt * inner_roots->sqrt * b_roots->inv_sqrt);
    sig_half_inv[s] = symmetrize(b_roots->sqrt * inner_roots->inv_sqrt * b_roots->sqrt);
    sig[s] = symmetrize(sig_half[s] * sig_half[s]);
  }

  std::vector<Mat<T>> sig_star(p + 1), star_half(p), star_half_inv(p);
  sig_star[0] = sig[0];
  for (int s = 0; s < p; ++s) {
    auto roots = denman_beavers(sig_star[s]);
    if (!roots || !roots->converged) {
      out.failed_stage = s;
      return out;
    }
    star_half[s] = roots->sqrt;
    star_half_inv[s] = roots->inv_sqrt;
    Mat<T> c = symmetrize(eye - transpose(pacf[s]) * pacf[s]);
    sig_star[s + 1] = symmetrize(star_half[s] * c * star_half[s]);
  }

  out.gamma.resize(std::max(p, 1));
  out.gamma[0] = sig[0];
  std::vector<Mat<T>> phi_prev, phis_prev;
  for (int s = 0; s < p; ++s) {
    std::vector<Mat<T>> phi_cur(s + 1), phis_cur(s + 1);
    phi_cur[s] = sig_half[s] * pacf[s] * star_half_inv[s];
    phis_cur[s] = star_half[s] * transpose(pacf[s]) * sig_half_inv[s];
    for (int j = 0; j < s; ++j) {
      phi_cur[j] = phi_prev[j] - phi_cur[s] * phis_prev[s - 1 - j];
      phis_cur[j] = phis_prev[j] - phis_cur[s] * phi_prev[s - 1 - j];
    }
    if (s + 1 < p) {
      // Gamma_{s+1} from the order-(s+1) Yule-Walker relation
      Mat<T> g(m, m);
      for (int j = 0; j <= s; ++j) {
        const Mat<T>& gj = out.gamma[s - j];  // Gamma_{s+1-(j+1)}
        g = g + phi_cur[j] * gj;
      }
      out.gamma[s + 1] = g;
    }
    phi_prev = phi_cur;
    phis_prev = phis_cur;
    if (stage_phi) stage_phi->push_back(phi_cur);
  }
  out.phi = std::move(phi_prev);
  out.sigma_fwd = std::move(sig);
  out.sigma_bwd = std::move(sig_star);
  return out;
}

/// Extends Gamma_0..Gamma_{p-1} to Gamma_0..Gamma_{h_max} via the Yule-Walker
/// relation Gamma_h = sum_j phi_j Gamma_{h-j} (with Gamma_{-k} = Gamma_k^T).
template <class T>
std::vector<Mat<T>> extend_autocovariances(const std::vector<Mat<T>>& phi, const std::vector<Mat<T>>& gamma,
                                           int h_max) {
  const int p = static_cast<int>(phi.size());
  const int m = gamma.empty() ? 0 : gamma[0].rows();
  std::vector<Mat<T>> out = gamma;
  for (int h = static_cast<int>(out.size()); h <= h_max; ++h) {
    Mat<T> g(m, m);
    for (int j = 1; j <= p; ++j) {
      int lag = h - j;
      if (lag >= 0)
        g = g + phi[j - 1] * out[lag];
      else
        g = g + phi[j - 1] * transpose(out[-lag]);
    }
    out.push_back(g);
  }
  return out;
}

/// Block-Toeplitz stationary variance of the stacked state
/// (y_t, y_{t-1}, ..., y_{t-k+1}): block (i, j) is Gamma_{j-i} above the
/// diagonal and Gamma_{i-j}^T below it.
template <class T>
Mat<T> stacked_initial_variance(const std::vector<Mat<T>>& gamma_ext, int k) {
  const int m = gamma_ext[0].rows();
  Mat<T> g(m * k, m * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (j >= i)
        g.set_block(i * m, j * m, gamma_ext[j - i]);
      else
        g.set_block(i * m, j * m, transpose(gamma_ext[i - j]));
    }
  return symmetrize(g);
}

}  // namespace reparam_detail

/// --- double-precision public surface ---

/// Maps unconstrained coefficient matrices to partial autocorrelation
/// matrices: P = (I + A A^T)^{-1/2} A. Singular values move from the positive
/// reals to [0, 1) while the singular vectors are preserved.
std::vector<linalg::Matrix> a_to_pacf(const std::vector<linalg::Matrix>& a);

/// Inverse of a_to_pacf: A = (I - P P^T)^{-1/2} P. Inputs with a singular
/// value at or above 1 - 1e-12 are rejected, not clamped.
std::vector<linalg::Matrix> pacf_to_a(const std::vector<linalg::Matrix>& pacf);

/// The recursive map (Sigma, P_1..P_p) -> stationary model with stage
/// variances. Throws DomainError with the failing stage index on numerically
/// invalid intermediates.
std::pair<VarModel, StageVariances> pacf_to_var(const linalg::Matrix& sigma,
                                                const std::vector<linalg::Matrix>& pacf);

/// As pacf_to_var, but also returns the coefficient matrices of every
/// intermediate stage: stage_phi[s] holds phi_{s+1,1..s+1}. The order-k
/// nested submodel of a draw is exactly stage k of this table.
std::pair<VarModel, StageVariances> pacf_to_var_stages(const linalg::Matrix& sigma,
                                                       const std::vector<linalg::Matrix>& pacf,
                                                       std::vector<std::vector<linalg::Matrix>>& stage_phi);

/// Inverse map: recovers (Sigma_p = model.sigma, P_1..P_p) from a stationary
/// model. Autocovariances come from the companion-form Lyapunov solve, then
/// the classical multivariate Durbin-Levinson recursion extracts each P_s.
std::pair<linalg::Matrix, std::vector<linalg::Matrix>> var_to_pacf(const VarModel& model);

/// Stationary variance G of the stacked state over p_max lags, built from the
/// model's autocovariances (Yule-Walker extended when p_max > p).
linalg::Matrix build_initial_variance(const VarModel& model, int p_max);

/// Companion matrix of phi_1..phi_p (newest component first).
linalg::Matrix companion_matrix(const std::vector<linalg::Matrix>& phi);

StationarityCheck check_stationary(const std::vector<linalg::Matrix>& phi);

}  // namespace varorder
