#pragma once

#include <complex>
#include <span>
#include <vector>

#include "varorder/matrix.hpp"

namespace varorder::linalg {

using Matrix = Mat<double>;

/// Relative symmetry check: max |M - M^T| <= tol * max(1, max |M|).
bool is_symmetric(const Matrix& m, double tol = 1e-12);

/// Symmetric positive definite square root via eigendecomposition (the
/// reference path; the Denman-Beavers iterate in matrix.hpp is the
/// differentiable one). Throws DomainError on non-SPD input.
Matrix sym_sqrt(const Matrix& m);

/// T with T * M * T = I, also by eigendecomposition.
Matrix sym_inv_sqrt(const Matrix& m);

struct SvdResult {
  Matrix u;
  std::vector<double> singular_values;  // descending
  Matrix v;
};

SvdResult svd(const Matrix& m);

/// Solves V = F V F^T + E by the dense Kronecker vectorization
/// (I - F (x) F) vec(V) = vec(E). Test-oracle use only; dimensions stay small.
/// Throws DomainError when the spectral radius of F is >= 1.
Matrix solve_discrete_lyapunov(const Matrix& f, const Matrix& e);

/// Exact multivariate normal log density via Cholesky.
double mvn_logpdf(std::span<const double> x, std::span<const double> mean, const Matrix& cov);

double spectral_radius(const Matrix& m);

std::vector<std::complex<double>> eigenvalues(const Matrix& m);

/// Lower Cholesky factor; throws DomainError if the matrix is not SPD.
Matrix cholesky(const Matrix& m);

}  // namespace varorder::linalg
