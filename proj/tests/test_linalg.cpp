#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "varorder/errors.hpp"
#include "varorder/linalg.hpp"
#include "varorder/special.hpp"

using varorder::DomainError;
using varorder::linalg::Matrix;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = c;
  m(1, 1) = d;
  return m;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("cholesky of a known 2x2 SPD matrix") {
  Matrix a = mat2(4.0, 2.0, 2.0, 3.0);
  Matrix l = varorder::linalg::cholesky(a);
  CHECK(l(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(l(0, 1) == 0.0);
  CHECK(l(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(testutil::max_abs_diff(l * varorder::transpose(l), a) < 1e-14);
}

TEST_CASE("cholesky rejects indefinite input") {
  Matrix a = mat2(1.0, 2.0, 2.0, 1.0);  // det < 0
  CHECK(!varorder::cholesky_lower(a).has_value());
  CHECK_THROWS_AS(varorder::linalg::cholesky(a), DomainError);
}

TEST_CASE("triangular solves invert the factor") {
  std::mt19937_64 gen(11);
  Matrix a = testutil::random_spd(4, gen);
  auto l = varorder::cholesky_lower(a);
  REQUIRE(l.has_value());
  std::vector<double> b = {1.0, -2.0, 0.5, 3.0};
  std::vector<double> x = b;
  varorder::solve_lower_in_place(*l, x);
  varorder::solve_lower_transpose_in_place(*l, x);
  std::vector<double> back = a * x;
  for (int i = 0; i < 4; ++i) CHECK(back[i] == doctest::Approx(b[i]).epsilon(1e-11));
}

TEST_CASE("spd_inverse produces a two-sided inverse") {
  std::mt19937_64 gen(17);
  for (int n : {1, 2, 5}) {
    Matrix a = testutil::random_spd(n, gen);
    auto inv = varorder::spd_inverse(a);
    REQUIRE(inv.has_value());
    CHECK(testutil::max_abs_diff(a * *inv, Matrix::identity(n)) < 1e-10);
    CHECK(testutil::max_abs_diff(*inv * a, Matrix::identity(n)) < 1e-10);
  }
}

TEST_CASE("sym_sqrt squares back and pairs with sym_inv_sqrt") {
  Matrix g = mat2(4.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0);
  Matrix s = varorder::linalg::sym_sqrt(g);
  CHECK(testutil::max_abs_diff(s * s, g) < 1e-12);
  Matrix t = varorder::linalg::sym_inv_sqrt(g);
  Matrix stst = s * t * s * t;
  CHECK(testutil::max_abs_diff(stst, Matrix::identity(2)) < 1e-9);
  CHECK_THROWS_AS(varorder::linalg::sym_sqrt(mat2(1.0, 2.0, 2.0, 1.0)), DomainError);
}

TEST_CASE("denman_beavers agrees with the eigendecomposition square root") {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(gen() % 8);
    Matrix a = testutil::random_spd(n, gen);
    auto db = varorder::denman_beavers(a);
    REQUIRE(db.has_value());
    CHECK(db->converged);
    Matrix ref = varorder::linalg::sym_sqrt(a);
    double scale = std::max(1.0, varorder::frobenius_norm(ref));
    CHECK(varorder::frobenius_norm(db->sqrt - ref) < 1e-9 * scale);
    CHECK(testutil::max_abs_diff(db->sqrt * db->inv_sqrt, Matrix::identity(n)) < 1e-9);
  }
}

TEST_CASE("denman_beavers rejects indefinite input") {
  CHECK(!varorder::denman_beavers(mat2(1.0, 2.0, 2.0, 1.0)).has_value());
}

TEST_CASE("discrete lyapunov solve on scalar and matrix cases") {
  Matrix f1(1, 1), e1(1, 1);
  f1(0, 0) = 0.5;
  e1(0, 0) = 1.0;
  Matrix v = varorder::linalg::solve_discrete_lyapunov(f1, e1);
  CHECK(v(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  Matrix f0(2, 2);  // F = 0 leaves V = E
  std::mt19937_64 gen(31);
  Matrix e = testutil::random_spd(2, gen);
  Matrix v0 = varorder::linalg::solve_discrete_lyapunov(f0, e);
  CHECK(testutil::max_abs_diff(v0, e) < 1e-13);

  Matrix f = mat2(0.4, -0.3, 0.25, 0.1);
  Matrix sol = varorder::linalg::solve_discrete_lyapunov(f, e);
  Matrix resid = sol - f * sol * varorder::transpose(f) - e;
  CHECK(varorder::max_abs_value(resid) < 1e-12);

  CHECK_THROWS_AS(varorder::linalg::solve_discrete_lyapunov(Matrix::identity(2), e), DomainError);
}

TEST_CASE("mvn_logpdf reference values") {
  Matrix one = Matrix::identity(1);
  std::vector<double> x0 = {0.0}, mu = {0.0};
  CHECK(varorder::linalg::mvn_logpdf(x0, mu, one) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  std::vector<double> x1 = {1.0};
  CHECK(varorder::linalg::mvn_logpdf(x1, mu, one) ==
        doctest::Approx(-1.4189385332046727).epsilon(1e-14));
  Matrix eye2 = Matrix::identity(2);
  std::vector<double> z2 = {0.0, 0.0};
  CHECK(varorder::linalg::mvn_logpdf(z2, z2, eye2) ==
        doctest::Approx(-1.8378770664093453).epsilon(1e-14));
  // Correlated case against the explicit quadratic form.
  Matrix cov = mat2(2.0, 0.6, 0.6, 1.5);
  std::vector<double> x = {0.3, -0.8}, m = {0.1, 0.2};
  double det = 2.0 * 1.5 - 0.36;
  double dx = x[0] - m[0], dy = x[1] - m[1];
  double quad = (1.5 * dx * dx - 2 * 0.6 * dx * dy + 2.0 * dy * dy) / det;
  double expect = -std::log(2.0 * 3.14159265358979323846) - 0.5 * std::log(det) - 0.5 * quad;
  CHECK(varorder::linalg::mvn_logpdf(x, m, cov) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("spectral radius and eigenvalues handle complex spectra") {
  Matrix d(2, 2);
  d(0, 0) = 0.5;
  d(1, 1) = -0.8;
  CHECK(varorder::linalg::spectral_radius(d) == doctest::Approx(0.8).epsilon(1e-12));

  double theta = 0.7;
  Matrix rot = mat2(std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta));
  CHECK(varorder::linalg::spectral_radius(0.9 * rot) == doctest::Approx(0.9).epsilon(1e-10));

  Matrix skew = mat2(0.0, -1.0, 1.0, 0.0);
  auto eig = varorder::linalg::eigenvalues(skew);
  REQUIRE(eig.size() == 2);
  double im0 = std::fabs(eig[0].imag());
  CHECK(im0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::fabs(eig[0].real()) < 1e-12);
}

TEST_CASE("svd reconstructs the input and orders singular values") {
  std::mt19937_64 gen(41);
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix a(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = nd(gen);
  auto s = varorder::linalg::svd(a);
  REQUIRE(s.singular_values.size() == 3);
  CHECK(s.singular_values[0] >= s.singular_values[1]);
  CHECK(s.singular_values[1] >= s.singular_values[2]);
  Matrix d(3, 3);
  for (int i = 0; i < 3; ++i) d(i, i) = s.singular_values[i];
  Matrix rebuilt = s.u * d * varorder::transpose(s.v);
  CHECK(testutil::max_abs_diff(rebuilt, a) < 1e-12);
  CHECK(testutil::max_abs_diff(varorder::transpose(s.u) * s.u, Matrix::identity(3)) < 1e-12);
  CHECK(testutil::max_abs_diff(varorder::transpose(s.v) * s.v, Matrix::identity(3)) < 1e-12);
}

TEST_CASE("is_symmetric tolerates rounding but not structure") {
  Matrix a = mat2(1.0, 0.5, 0.5 + 1e-14, 2.0);
  CHECK(varorder::linalg::is_symmetric(a));
  CHECK(!varorder::linalg::is_symmetric(mat2(1.0, 0.5, -0.5, 2.0)));
}

TEST_CASE("normal quantile function reference values") {
  using varorder::inv_std_normal_cdf;
  CHECK(inv_std_normal_cdf(0.5) == 0.0);
  CHECK(inv_std_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
  CHECK(inv_std_normal_cdf(0.0001) == doctest::Approx(-3.7190164854556804).epsilon(1e-12));
  CHECK(inv_std_normal_cdf(0.9999999) == doctest::Approx(5.199337582290661).epsilon(1e-12));
  for (double p : {0.001, 0.1, 0.3, 0.77, 0.995}) {
    CHECK(varorder::std_normal_cdf(inv_std_normal_cdf(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS_AS(inv_std_normal_cdf(0.0), DomainError);
  CHECK_THROWS_AS(inv_std_normal_cdf(1.0), DomainError);
}

TEST_CASE("matrix block operations round-trip") {
  Matrix a(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = i * 4 + j;
  Matrix b = a.block(1, 2, 2, 2);
  CHECK(b(0, 0) == 6.0);
  CHECK(b(1, 1) == 11.0);
  Matrix c(4, 4);
  c.set_block(1, 2, b);
  CHECK(c(1, 2) == 6.0);
  CHECK(c(2, 3) == 11.0);
  CHECK(c(0, 0) == 0.0);
}

}  // TEST_SUITE
