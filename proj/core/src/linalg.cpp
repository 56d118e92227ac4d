#include "varorder/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "varorder/distributions.hpp"
#include "varorder/errors.hpp"

namespace varorder::linalg {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

Matrix from_eigen(const Eigen::MatrixXd& m) {
  Matrix out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

void require_spd_input(const Matrix& m, const char* op) {
  if (m.rows() != m.cols()) throw DomainError(std::string(op) + ": matrix must be square");
  if (!is_symmetric(m)) throw DomainError(std::string(op) + ": matrix is not symmetric");
}

}  // namespace

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  double scale = std::max(1.0, max_abs_value(m));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < i; ++j)
      if (std::fabs(m(i, j) - m(j, i)) > tol * scale) return false;
  return true;
}

Matrix sym_sqrt(const Matrix& m) {
  require_spd_input(m, "sym_sqrt");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
  if (es.info() != Eigen::Success) throw DomainError("sym_sqrt: eigendecomposition failed");
  if (es.eigenvalues().minCoeff() <= 0.0) throw DomainError("sym_sqrt: matrix is not positive definite");
  Eigen::MatrixXd s =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  return symmetrize(from_eigen(s));
}

Matrix sym_inv_sqrt(const Matrix& m) {
  require_spd_input(m, "sym_inv_sqrt");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
  if (es.info() != Eigen::Success) throw DomainError("sym_inv_sqrt: eigendecomposition failed");
  if (es.eigenvalues().minCoeff() <= 0.0) throw DomainError("sym_inv_sqrt: matrix is not positive definite");
  Eigen::MatrixXd s = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                      es.eigenvectors().transpose();
  return symmetrize(from_eigen(s));
}

SvdResult svd(const Matrix& m) {
  for (double v : m.data())
    if (!std::isfinite(v)) throw DomainError("svd: non-finite entry");
  Eigen::JacobiSVD<Eigen::MatrixXd> solver(to_eigen(m), Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdResult out;
  out.u = from_eigen(solver.matrixU());
  out.v = from_eigen(solver.matrixV());
  out.singular_values.assign(solver.singularValues().data(),
                             solver.singularValues().data() + solver.singularValues().size());
  return out;
}

Matrix solve_discrete_lyapunov(const Matrix& f, const Matrix& e) {
  const int n = f.rows();
  if (f.cols() != n || e.rows() != n || e.cols() != n)
    throw DomainError("solve_discrete_lyapunov: dimension mismatch");
  double radius = spectral_radius(f);
  if (!(radius < 1.0))
    throw DomainError("solve_discrete_lyapunov: spectral radius " + std::to_string(radius) + " is not < 1");
  Eigen::MatrixXd fe = to_eigen(f);
  // (I - F (x) F) vec(V) = vec(E), with vec stacking columns.
  const int n2 = n * n;
  Eigen::MatrixXd kron(n2, n2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = fe(i, j) * fe;
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n2, n2) - kron;
  Eigen::VectorXd rhs(n2);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) rhs(j * n + i) = e(i, j);
  Eigen::VectorXd sol = lhs.partialPivLu().solve(rhs);
  Matrix v(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) v(i, j) = sol(j * n + i);
  return symmetrize(v);
}

double mvn_logpdf(std::span<const double> x, std::span<const double> mean, const Matrix& cov) {
  const int n = cov.rows();
  if (static_cast<int>(x.size()) != n || static_cast<int>(mean.size()) != n)
    throw DomainError("mvn_logpdf: dimension mismatch");
  require_spd_input(cov, "mvn_logpdf");
  auto chol = cholesky_lower(cov);
  if (!chol) throw DomainError("mvn_logpdf: covariance is not positive definite");
  std::vector<double> resid(n);
  for (int i = 0; i < n; ++i) resid[i] = x[i] - mean[i];
  return mvn_logpdf_chol(std::move(resid), *chol);
}

double spectral_radius(const Matrix& m) {
  double radius = 0.0;
  for (const auto& ev : eigenvalues(m)) radius = std::max(radius, std::abs(ev));
  return radius;
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) throw DomainError("eigenvalues: matrix must be square");
  if (m.rows() == 0) return {};
  Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(m), /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw DomainError("eigenvalues: solver failed");
  std::vector<std::complex<double>> out(m.rows());
  for (int i = 0; i < m.rows(); ++i) out[i] = es.eigenvalues()(i);
  return out;
}

Matrix cholesky(const Matrix& m) {
  require_spd_input(m, "cholesky");
  auto chol = cholesky_lower(m);
  if (!chol) throw DomainError("cholesky: matrix is not positive definite");
  return *chol;
}

}  // namespace varorder::linalg
