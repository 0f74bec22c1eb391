#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>

#include "doctest.h"
#include "hqm/basis.hpp"

using namespace hqm;

namespace {

const BasisSpec unit_basis{64, 1.0};

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

// Reference values from a long-double recurrence evaluated separately.
TEST_CASE("hermite function values match extended-precision recurrence") {
  BasisSpec s1{8, 1.0};
  CHECK(hermite_function(0, 0.0, s1) == doctest::Approx(0.75112554446494249).epsilon(1e-15));
  CHECK(hermite_function(10, 1.3, s1) == doctest::Approx(-0.34999147167891236).epsilon(1e-14));
  CHECK(hermite_function(25, 0.7, s1) == doctest::Approx(-0.28769810365626295).epsilon(1e-14));
  CHECK(hermite_function(300, 5.0, s1) == doctest::Approx(-0.11338794309714731).epsilon(1e-13));
}

TEST_CASE("hermite function parity and scaling") {
  BasisSpec s1{8, 1.0};
  BasisSpec s2{8, 2.0};
  for (int n : {0, 1, 2, 7, 15}) {
    for (double x : {0.3, 1.7, 4.2}) {
      CHECK(hermite_function(n, -x, s1) ==
            doctest::Approx(std::pow(-1.0, n) * hermite_function(n, x, s1))
                .epsilon(1e-14));
      // u_n^{(s)}(x) = u_n(x/s) / sqrt(s)
      CHECK(hermite_function(n, x, s2) ==
            doctest::Approx(hermite_function(n, x / 2.0, s1) / std::sqrt(2.0))
                .epsilon(1e-14));
    }
  }
}

TEST_CASE("hermite function stays finite far outside the classical region") {
  BasisSpec s1{8, 1.0};
  double v = hermite_function(0, 60.0, s1);
  CHECK(std::isfinite(v));
  CHECK(v >= 0.0);
  CHECK(v < 1e-300);
  CHECK(std::isfinite(hermite_function(4096, 91.0, s1)));
  CHECK(std::isfinite(hermite_function(4096, 0.25, s1)));
}

TEST_CASE("hermite function rejects out-of-range order") {
  BasisSpec s1{8, 1.0};
  CHECK_THROWS_AS(hermite_function(-1, 0.0, s1), std::invalid_argument);
  CHECK_THROWS_AS(hermite_function(4097, 0.0, s1), std::invalid_argument);
  CHECK_THROWS_AS(hermite_function(0, 0.0, BasisSpec{0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(hermite_function(0, 0.0, BasisSpec{8, -1.0}), std::invalid_argument);
}

TEST_CASE("gauss-hermite low orders match closed forms") {
  const double sqrt_pi = std::sqrt(M_PI);

  auto r1 = gauss_hermite_rule(1);
  CHECK(r1.nodes[0] == 0.0);
  CHECK(r1.weights[0] == doctest::Approx(sqrt_pi).epsilon(1e-15));

  auto r2 = gauss_hermite_rule(2);
  CHECK(r2.nodes[0] == doctest::Approx(-0.70710678118654752).epsilon(1e-15));
  CHECK(r2.nodes[1] == doctest::Approx(0.70710678118654752).epsilon(1e-15));
  CHECK(r2.weights[0] == doctest::Approx(sqrt_pi / 2).epsilon(1e-15));
  CHECK(r2.weights[1] == doctest::Approx(sqrt_pi / 2).epsilon(1e-15));

  auto r3 = gauss_hermite_rule(3);
  CHECK(r3.nodes[1] == 0.0);
  CHECK(r3.nodes[2] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-15));
  CHECK(r3.weights[1] == doctest::Approx(2.0 * sqrt_pi / 3.0).epsilon(1e-14));
  CHECK(r3.weights[2] == doctest::Approx(sqrt_pi / 6.0).epsilon(1e-14));
}

TEST_CASE("gauss-hermite moments are exact within degree") {
  // integral x^{2k} e^{-x^2} dx = sqrt(pi) (2k-1)!! / 2^k
  for (int order : {5, 16, 33, 64}) {
    auto r = gauss_hermite_rule(order);
    double dfact = 1.0;
    for (int k = 0; 2 * k + 1 <= 2 * order - 1 && k <= 12; ++k) {
      if (k > 0) dfact *= (2.0 * k - 1.0) / 2.0;  // (2k-1)!! / 2^k
      double target = std::sqrt(M_PI) * dfact;
      double acc = 0.0;
      for (int i = 0; i < order; ++i)
        acc += r.weights[i] * std::pow(r.nodes[i], 2 * k);
      CHECK(acc == doctest::Approx(target).epsilon(1e-12));
    }
  }
}

TEST_CASE("gauss-hermite structure: symmetric ascending nodes, positive weights") {
  for (int order : {4, 7, 64, 129, 600, 1024}) {
    auto r = gauss_hermite_rule(order);
    REQUIRE(static_cast<int>(r.nodes.size()) == order);
    for (int i = 0; i + 1 < order; ++i) CHECK(r.nodes[i] < r.nodes[i + 1]);
    for (int i = 0; i < order; ++i) {
      CHECK(r.weights[i] > 0.0);
      CHECK(std::isfinite(r.scaled_weights[i]));
      CHECK(r.scaled_weights[i] > 0.0);
      CHECK(r.nodes[i] == -r.nodes[order - 1 - i]);
    }
    double sum = 0.0;
    for (double w : r.weights) sum += w;
    CHECK(sum == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
  }
}

TEST_CASE("scaled weights integrate basis products to orthonormality") {
  // sum_i sw_i u_m(x_i) u_n(x_i) = delta_mn once 2*order-1 >= m+n.
  auto check_at = [](int order, int nmax, double tol) {
    auto r = gauss_hermite_rule(order);
    BasisSpec spec{nmax + 1, 1.0};
    for (int m : {0, 1, nmax / 2, nmax}) {
      for (int n : {0, nmax / 3, nmax}) {
        double acc = 0.0;
        for (int i = 0; i < order; ++i)
          acc += r.scaled_weights[i] * hermite_function(m, r.nodes[i], spec) *
                 hermite_function(n, r.nodes[i], spec);
        double target = (m == n) ? 1.0 : 0.0;
        CHECK(std::abs(acc - target) <= tol);
      }
    }
  };
  check_at(64, 31, 1e-12);
  // Past the raw-weight underflow threshold the scaled weights carry it.
  check_at(600, 40, 1e-11);
}

TEST_CASE("position matrix has the analytic tridiagonal form") {
  for (double s : {1.0, 0.5, 3.0}) {
    BasisSpec spec{16, s};
    Matrix q = position_matrix(spec).matrix();
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) {
        Complex want = 0.0;
        if (j == i + 1) want = s * std::sqrt((i + 1) / 2.0);
        if (i == j + 1) want = s * std::sqrt((j + 1) / 2.0);
        CHECK(std::abs(q(i, j) - want) <= 1e-15);
      }
  }
}

TEST_CASE("momentum matrix is i-antisymmetric tridiagonal and Hermitian") {
  BasisSpec spec{12, 2.0};
  Matrix p = momentum_matrix(spec).matrix();
  CHECK(max_abs(p - p.adjoint()) == 0.0);
  for (int i = 0; i + 1 < 12; ++i) {
    CHECK(p(i, i + 1).real() == 0.0);
    CHECK(p(i, i + 1).imag() ==
          doctest::Approx(-std::sqrt((i + 1) / 2.0) / 2.0).epsilon(1e-15));
  }
  CHECK(p.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kinetic matrix entries and the identity kinetic + x^2 = diag(2n+1)") {
  BasisSpec spec{32, 1.0};
  Matrix t = kinetic_matrix(spec).matrix();
  for (int n = 0; n < 32; ++n)
    CHECK(t(n, n).real() == doctest::Approx(n + 0.5).epsilon(1e-15));
  for (int n = 0; n + 2 < 32; ++n)
    CHECK(t(n, n + 2).real() ==
          doctest::Approx(-std::sqrt((n + 1.0) * (n + 2.0)) / 2.0).epsilon(1e-15));

  auto rule = gauss_hermite_rule(64 + 2);
  Matrix v = potential_matrix(spec, PotentialSpec::polynomial({0, 0, 1}), rule)
                 .matrix();
  Matrix h = t + v;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      Complex want = (i == j) ? Complex(2.0 * i + 1.0, 0.0) : Complex(0.0, 0.0);
      CHECK(std::abs(h(i, j) - want) <= 1e-12);
    }
}

TEST_CASE("squared momentum differs from kinetic only in the last diagonal entry") {
  for (double s : {1.0, 1.7}) {
    BasisSpec spec{20, s};
    Matrix d = squared_momentum_matrix(spec).matrix() - kinetic_matrix(spec).matrix();
    double expected = -20.0 / (2.0 * s * s);
    CHECK(std::abs(d(19, 19) - expected) <= 1e-12);
    d(19, 19) = 0.0;
    CHECK(max_abs(d) <= 1e-12);
  }
}

TEST_CASE("potential matrix reproduces the analytic x and x^2 Galerkin forms") {
  BasisSpec spec{24, 1.5};
  auto rule = gauss_hermite_rule(2 * 24 + 8);

  Matrix vx = potential_matrix(spec, PotentialSpec::polynomial({0, 1}), rule).matrix();
  CHECK(max_abs(vx - position_matrix(spec).matrix()) <= 1e-12);

  Matrix vx2 =
      potential_matrix(spec, PotentialSpec::polynomial({0, 0, 1}), rule).matrix();
  Matrix want = Matrix::Zero(24, 24);
  double s2 = 1.5 * 1.5;
  for (int n = 0; n < 24; ++n) want(n, n) = s2 * (n + 0.5);
  for (int n = 0; n + 2 < 24; ++n) {
    want(n, n + 2) = s2 * std::sqrt((n + 1.0) * (n + 2.0)) / 2.0;
    want(n + 2, n) = want(n, n + 2);
  }
  CHECK(max_abs(vx2 - want) <= 1e-11);
}

TEST_CASE("potential specs reject non-finite inputs") {
  CHECK_THROWS_AS(
      PotentialSpec::polynomial({std::numeric_limits<double>::infinity()}),
      std::domain_error);
  CHECK_THROWS_AS(PotentialSpec::gaussian(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("gaussian potential evaluates and assembles symmetrically") {
  auto v = PotentialSpec::gaussian(-2.0, 0.7, 0.3);
  CHECK(v(0.3) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(v(0.3 + 0.7) == doctest::Approx(-2.0 * std::exp(-0.5)).epsilon(1e-15));
  CHECK(v(100.0) == doctest::Approx(0.0).scale(1).epsilon(1e-15));

  BasisSpec spec{16, 1.0};
  auto rule = gauss_hermite_rule(128);
  Matrix m = potential_matrix(spec, v, rule).matrix();
  CHECK(max_abs(m - m.adjoint()) == 0.0);
  CHECK(m.imag().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tabulated potential interpolates knots, clamps outside, stays monotone") {
  std::vector<double> x{-2.0, -1.0, 0.5, 2.0, 3.0};
  std::vector<double> y{0.0, 0.5, 2.0, 3.5, 4.0};
  auto v = PotentialSpec::tabulated(x, y);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(v(x[i]) == doctest::Approx(y[i]).epsilon(1e-15));
  CHECK(v(-10.0) == 0.0);
  CHECK(v(10.0) == 4.0);
  double prev = v(-2.0);
  for (double t = -2.0; t <= 3.0; t += 0.01) {
    double cur = v(t);
    CHECK(cur >= prev - 1e-12);
    prev = cur;
  }

  auto lin = PotentialSpec::tabulated({0.0, 1.0}, {1.0, 3.0});
  CHECK(lin(0.25) == doctest::Approx(1.5).epsilon(1e-14));

  CHECK_THROWS_AS(PotentialSpec::tabulated({1.0, 1.0}, {0.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PotentialSpec::tabulated({1.0}, {0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("matched-width packet at the origin is the ground basis function") {
  // width = scale / sqrt(2) makes psi identical to u_0, so the
  // coefficient vector must be e_0.
  for (double s : {1.0, 2.5}) {
    BasisSpec spec{32, s};
    PacketSpec pk{0.0, s / std::sqrt(2.0), 0.0};
    Vector c = packet_coefficients(spec, pk, 160);
    CHECK(std::abs(c(0) - 1.0) <= 1e-12);
    CHECK(c.tail(31).norm() <= 1e-12);
  }
}

TEST_CASE("moving packet is captured with unit norm and correct momentum mean") {
  BasisSpec spec{64, 1.0};
  PacketSpec pk{0.0, 1.0 / std::sqrt(2.0), 2.0};
  Vector c = packet_coefficients(spec, pk, 320);
  CHECK(std::abs(c.norm() - 1.0) <= 1e-10);

  Matrix p = momentum_matrix(spec).matrix();
  double pmean = c.dot(p * c).real() / c.squaredNorm();
  CHECK(pmean == doctest::Approx(2.0).epsilon(1e-9));

  Matrix q = position_matrix(spec).matrix();
  double qmean = c.dot(q * c).real() / c.squaredNorm();
  CHECK(std::abs(qmean) <= 1e-9);
}

TEST_CASE("off-center packet position mean matches the center") {
  BasisSpec spec{96, 1.0};
  PacketSpec pk{1.2, 0.8, 0.0};
  Vector c = packet_coefficients(spec, pk, 384);
  CHECK(std::abs(c.norm() - 1.0) <= 1e-8);
  Matrix q = position_matrix(spec).matrix();
  CHECK(c.dot(q * c).real() / c.squaredNorm() == doctest::Approx(1.2).epsilon(1e-8));
}
