#include "varorder/reparam.hpp"

#include <cmath>
#include <string>

#include "varorder/errors.hpp"

namespace varorder {

using linalg::Matrix;

std::vector<Matrix> a_to_pacf(const std::vector<Matrix>& a) {
  auto p = reparam_detail::a_to_pacf_impl(a);
  if (!p) throw DomainError("a_to_pacf: matrix square root failed to converge");
  return *p;
}

std::vector<Matrix> pacf_to_a(const std::vector<Matrix>& pacf) {
  std::vector<Matrix> a;
  a.reserve(pacf.size());
  for (std::size_t s = 0; s < pacf.size(); ++s) {
    const Matrix& ps = pacf[s];
    auto svd = linalg::svd(ps);
    if (!svd.singular_values.empty() && svd.singular_values.front() >= 1.0 - 1e-12)
      throw DomainError("pacf_to_a: singular value of P_" + std::to_string(s + 1) + " is not below 1");
    const int m = ps.rows();
    Matrix gram = symmetrize(Matrix::identity(m) - ps * transpose(ps));
    a.push_back(linalg::sym_inv_sqrt(gram) * ps);
  }
  return a;
}

namespace {

std::pair<VarModel, StageVariances> run_forward_map(const Matrix& sigma, const std::vector<Matrix>& pacf,
                                                    std::vector<std::vector<Matrix>>* stage_phi) {
  if (!linalg::is_symmetric(sigma)) throw DomainError("pacf_to_var: sigma must be symmetric");
  auto res = reparam_detail::pacf_to_var_impl(sigma, pacf, stage_phi);
  if (!res.ok())
    throw DomainError("pacf_to_var: non-positive-definite intermediate at stage " +
                      std::to_string(res.failed_stage));
  VarModel model;
  model.sigma = symmetrize(sigma);
  model.phi = std::move(res.phi);
  model.gamma = std::move(res.gamma);
  StageVariances sv;
  sv.fwd = std::move(res.sigma_fwd);
  sv.bwd = std::move(res.sigma_bwd);
  return {std::move(model), std::move(sv)};
}

}  // namespace

std::pair<VarModel, StageVariances> pacf_to_var(const Matrix& sigma, const std::vector<Matrix>& pacf) {
  return run_forward_map(sigma, pacf, nullptr);
}

std::pair<VarModel, StageVariances> pacf_to_var_stages(const Matrix& sigma, const std::vector<Matrix>& pacf,
                                                       std::vector<std::vector<Matrix>>& stage_phi) {
  stage_phi.clear();
  return run_forward_map(sigma, pacf, &stage_phi);
}

Matrix companion_matrix(const std::vector<Matrix>& phi) {
  const int p = static_cast<int>(phi.size());
  const int m = phi.empty() ? 0 : phi[0].rows();
  Matrix f(m * p, m * p);
  for (int j = 0; j < p; ++j) f.set_block(0, j * m, phi[j]);
  for (int i = 1; i < p; ++i) f.set_block(i * m, (i - 1) * m, Matrix::identity(m));
  return f;
}

StationarityCheck check_stationary(const std::vector<Matrix>& phi) {
  StationarityCheck out;
  if (phi.empty()) {
    out.stable = true;
    return out;
  }
  out.spectral_radius = linalg::spectral_radius(companion_matrix(phi));
  out.stable = out.spectral_radius < 1.0;
  return out;
}

namespace {

/// Gamma_0..Gamma_{p-1} of a stationary model from the companion Lyapunov
/// equation: the stacked-state variance solves G = F G F' + E with E the
/// noise variance padded to the state dimension.
std::vector<Matrix> autocovariances_from_lyapunov(const VarModel& model) {
  const int p = model.order();
  const int m = model.dim();
  if (p == 0) return {symmetrize(model.sigma)};
  Matrix f = companion_matrix(model.phi);
  Matrix e(m * p, m * p);
  e.set_block(0, 0, model.sigma);
  Matrix g = linalg::solve_discrete_lyapunov(f, e);
  std::vector<Matrix> gamma(p);
  for (int h = 0; h < p; ++h) gamma[h] = g.block(0, h * m, m, m);
  gamma[0] = symmetrize(gamma[0]);
  return gamma;
}

}  // namespace

std::pair<Matrix, std::vector<Matrix>> var_to_pacf(const VarModel& model) {
  const int p = model.order();
  const int m = model.dim();
  std::vector<Matrix> gamma = autocovariances_from_lyapunov(model);
  gamma = reparam_detail::extend_autocovariances(model.phi, gamma, p);

  // Multivariate Durbin-Levinson, tracking both prediction variances. The
  // square roots here go through the eigendecomposition, deliberately a
  // different route than the forward map's iteration.
  std::vector<Matrix> pacf(p);
  Matrix sig = gamma[0], sig_star = gamma[0];
  std::vector<Matrix> phi_prev, phis_prev;
  for (int s = 0; s < p; ++s) {
    Matrix delta(m, m);
    delta = gamma[s + 1];
    for (int j = 0; j < s; ++j) delta = delta - phi_prev[j] * gamma[s - j];

    Matrix sig_half = linalg::sym_sqrt(sig);
    Matrix sig_half_inv = linalg::sym_inv_sqrt(sig);
    Matrix star_half = linalg::sym_sqrt(sig_star);
    Matrix star_half_inv = linalg::sym_inv_sqrt(sig_star);
    pacf[s] = sig_half_inv * delta * star_half_inv;

    std::vector<Matrix> phi_cur(s + 1), phis_cur(s + 1);
    phi_cur[s] = sig_half * pacf[s] * star_half_inv;
    phis_cur[s] = star_half * transpose(pacf[s]) * sig_half_inv;
    for (int j = 0; j < s; ++j) {
      phi_cur[j] = phi_prev[j] - phi_cur[s] * phis_prev[s - 1 - j];
      phis_cur[j] = phis_prev[j] - phis_cur[s] * phi_prev[s - 1 - j];
    }

    Matrix eye = Matrix::identity(m);
    sig = symmetrize(sig_half * symmetrize(eye - pacf[s] * transpose(pacf[s])) * sig_half);
    sig_star = symmetrize(star_half * symmetrize(eye - transpose(pacf[s]) * pacf[s]) * star_half);
    phi_prev = std::move(phi_cur);
    phis_prev = std::move(phis_cur);
  }
  return {sig, pacf};
}

Matrix build_initial_variance(const VarModel& model, int p_max) {
  if (p_max < 1) throw DomainError("build_initial_variance: p_max must be positive");
  std::vector<Matrix> gamma = model.gamma.empty() ? autocovariances_from_lyapunov(model) : model.gamma;
  gamma = reparam_detail::extend_autocovariances(model.phi, gamma, p_max - 1);
  return reparam_detail::stacked_initial_variance(gamma, p_max);
}

}  // namespace varorder
