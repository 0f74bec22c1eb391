// Acceptance gate: one pass/fail line per criterion, tolerances pinned
// below.  Empirical tolerances were frozen from convergence studies run
// before the tests were written; the reference constants are recorded
// next to the checks that consume them.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "hqm/basis.hpp"
#include "hqm/hermitian_operator.hpp"
#include "hqm/io.hpp"
#include "hqm/scattering.hpp"
#include "hqm/spectral.hpp"
#include "hqm/truncation.hpp"

using namespace hqm;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and frozen references.
constexpr double kOscillatorTol = 1e-10;       // |lambda_n - (2n+1)|
constexpr double kQuarticTol = 1e-8;           // ground-energy agreement
constexpr double kQuarticRef512 = 1.0603620904667175;  // N=512, quad 1026
constexpr double kProjectorTol = 1e-10;        // completeness/lattice/orthogonality
constexpr double kCalculusTol = 1e-9;          // homomorphism/composition/evolve
constexpr double kRoundtripTol = 1e-10;        // N = M compact round trip
constexpr double kLadderTol = 2e-9;            // frozen: worst 1.77e-10 at N=128
constexpr double kMollerGapTol = 1e-10;        // abel vs resolvent
constexpr double kFreeIdentityTol = 1e-12;     // V = 0 identities
constexpr double kDualGapTol = 1e-10;          // T-matrix dual evaluation

struct Gate {
  int id;
  double budget;  // seconds; <= 0 means no runtime requirement
  std::chrono::steady_clock::time_point t0;
  bool ok = true;

  Gate(int id_, double budget_)
      : id(id_), budget(budget_), t0(std::chrono::steady_clock::now()) {}

  void also(bool cond) { ok = ok && cond; }

  bool finish() {
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    bool in_budget = budget <= 0.0 || elapsed < budget;
    bool pass = ok && in_budget;
    std::printf("criterion %d: %s (%.2f s%s)\n", id, pass ? "PASS" : "FAIL",
                elapsed, in_budget ? "" : ", over budget");
    std::fflush(stdout);
    return pass;
  }
};

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

HermitianOperator random_hermitian(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = Complex(g(gen), g(gen));
  return HermitianOperator::symmetrized(0.5 * (a + a.adjoint()));
}

Vector random_state(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  Vector x(n);
  for (int r = 0; r < n; ++r) x(r) = Complex(g(gen), g(gen));
  return x;
}

// Hermitian matrix with a prescribed spectrum and Haar-like eigenbasis.
HermitianOperator with_spectrum(const RealVector& d, std::uint64_t seed) {
  int n = static_cast<int>(d.size());
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = Complex(g(gen), g(gen));
  Matrix q = Eigen::HouseholderQR<Matrix>(a).householderQ();
  return HermitianOperator::symmetrized(q * d.asDiagonal() * q.adjoint());
}

HermitianOperator oscillator(const BasisSpec& spec) {
  QuadratureRule rule = gauss_hermite_rule(2 * spec.dimension + 2);
  PotentialSpec v = PotentialSpec::polynomial({0.0, 0.0, 1.0});
  return HermitianOperator::symmetrized(
      kinetic_matrix(spec).matrix() + potential_matrix(spec, v, rule).matrix());
}

double quartic_ground(int n) {
  BasisSpec spec{n, 1.0};
  QuadratureRule rule = gauss_hermite_rule(2 * n + 2);
  PotentialSpec v = PotentialSpec::polynomial({0.0, 0.0, 0.0, 0.0, 1.0});
  HermitianOperator h = HermitianOperator::symmetrized(
      kinetic_matrix(spec).matrix() + potential_matrix(spec, v, rule).matrix());
  return diagonalize(h).eigenvalues(0);
}

ScatteringConfig config_eps(double eps) {
  ScatteringConfig sc;
  sc.epsilon = eps;
  return sc;
}

ScatteringPair random_pair(int n, std::uint64_t seed) {
  HermitianOperator free_op = random_hermitian(n, seed);
  HermitianOperator v = random_hermitian(n, seed + 0x9E3779B97F4A7C15ull);
  return ScatteringPair::make(
      free_op, HermitianOperator::symmetrized(0.3 * v.matrix()));
}

// Gaussian-well pair at truncation order n, shared by criteria 5 and 6.
ScatteringPair gaussian_pair(int n, double amplitude) {
  BasisSpec spec{n, 1.0};
  QuadratureRule rule = gauss_hermite_rule(std::max(2 * n, 64));
  PotentialSpec v = PotentialSpec::gaussian(amplitude, 1.0, 0.0);
  return ScatteringPair::make(kinetic_matrix(spec),
                              potential_matrix(spec, v, rule));
}

Matrix phase_matrix(const EigenSystem& eig, double t) {
  return apply_function(
      eig, [t](double lam) { return std::polar(1.0, -lam * t); });
}

}  // namespace

TEST_CASE("harmonic oscillator eigenvalues are exact at order 128") {
  Gate gate(1, 5.0);
  EigenSystem eig = diagonalize(oscillator(BasisSpec{128, 1.0}));
  double worst = 0.0;
  for (int n = 0; n < 128; ++n)
    worst = std::max(worst, std::abs(eig.eigenvalues(n) - (2.0 * n + 1.0)));
  gate.also(worst < kOscillatorTol);
  CHECK(worst < kOscillatorTol);
  CHECK(gate.finish());
}

TEST_CASE("quartic ground energy is converged against the frozen reference") {
  Gate gate(2, 60.0);
  double e64 = quartic_ground(64);
  double e128 = quartic_ground(128);
  gate.also(std::abs(e64 - e128) < kQuarticTol);
  gate.also(std::abs(e128 - kQuarticRef512) < kQuarticTol);
  CHECK(std::abs(e64 - e128) < kQuarticTol);
  CHECK(std::abs(e128 - kQuarticRef512) < kQuarticTol);
  CHECK(gate.finish());
}

TEST_CASE("spectral calculus identities hold on 200 random matrices") {
  Gate gate(3, 30.0);
  for (int i = 0; i < 200; ++i) {
    int n = 2 + (i % 31);  // dimensions 2..32
    EigenSystem eig = diagonalize(random_hermitian(n, 1000 + i));
    Matrix id = Matrix::Identity(n, n);

    double lo = eig.eigenvalues(0) - 1.0;
    double hi = eig.eigenvalues(n - 1) + 1.0;
    double cut[3];
    for (int k = 0; k < 3; ++k) {
      double c = lo + (hi - lo) * (k + 1) / 4.0;
      for (int j = 0; j < n; ++j)
        if (std::abs(eig.eigenvalues(j) - c) < 1e-6) c += 2e-6;
      cut[k] = c;
    }

    // Partition of [lo, hi] into four pieces sums to the identity.
    HermitianOperator p0 =
        spectral_projector(eig, SpectralWindow::interval(lo, cut[0], true, false));
    HermitianOperator p1 = spectral_projector(
        eig, SpectralWindow::interval(cut[0], cut[1], true, false));
    HermitianOperator p2 = spectral_projector(
        eig, SpectralWindow::interval(cut[1], cut[2], true, false));
    HermitianOperator p3 =
        spectral_projector(eig, SpectralWindow::closed(cut[2], hi));
    double completeness = max_abs(p0.matrix() + p1.matrix() + p2.matrix() +
                                  p3.matrix() - id);
    gate.also(completeness < kProjectorTol);

    // Product of overlapping windows projects onto the intersection.
    HermitianOperator pa =
        spectral_projector(eig, SpectralWindow::closed(lo, cut[1]));
    HermitianOperator pb =
        spectral_projector(eig, SpectralWindow::closed(cut[0], hi));
    HermitianOperator pab =
        spectral_projector(eig, SpectralWindow::closed(cut[0], cut[1]));
    double lattice = max_abs(pa.matrix() * pb.matrix() - pab.matrix());
    gate.also(lattice < kProjectorTol);

    // Disjoint windows give orthogonal projectors; projectors are idempotent.
    double orth = max_abs(p0.matrix() * p2.matrix());
    double idem = max_abs(pa.matrix() * pa.matrix() - pa.matrix());
    gate.also(orth < kProjectorTol && idem < kProjectorTol);

    // Pointwise products of functions map to operator products.
    Matrix fs = apply_function(eig, [](double r) { return Complex(std::sin(r)); });
    Matrix fc = apply_function(eig, [](double r) { return Complex(std::cos(r)); });
    Matrix fsc = apply_function(
        eig, [](double r) { return Complex(std::sin(r) * std::cos(r)); });
    gate.also(max_abs(fs * fc - fsc) < kCalculusTol);

    double comp = compose_functions_check(
        eig, [](double r) { return std::atan(r); },
        [](double r) { return std::sin(3.0 * r); });
    gate.also(comp < kCalculusTol);

    // Evolution is unitary and satisfies the group law.
    Matrix u1 = phase_matrix(eig, 0.7);
    Matrix u2 = phase_matrix(eig, 1.9);
    Matrix u12 = phase_matrix(eig, 2.6);
    gate.also(max_abs(u1.adjoint() * u1 - id) < kCalculusTol);
    gate.also(max_abs(u1 * u2 - u12) < kCalculusTol);
    Vector x = random_state(n, 5000 + i);
    gate.also((evolve(eig, 0.7, x) - u1 * x).cwiseAbs().maxCoeff() <
              kCalculusTol);
  }
  CHECK(gate.finish());
}

TEST_CASE("compactified extension round-trips and refines the oscillator") {
  Gate gate(4, 0.0);

  // N = M: the compact detour reproduces the operator.
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> spread(-50.0, 50.0);
  for (int n : {8, 16, 32}) {
    for (int rep = 0; rep < 3; ++rep) {
      RealVector d(n);
      for (int j = 0; j < n; ++j) d(j) = spread(gen);
      HermitianOperator a = with_spectrum(d, 77 * n + rep);
      TruncationPair pair{BasisSpec{n, 1.0}, BasisSpec{n, 1.0}};
      HermitianOperator back = compactified_extension(a, pair);
      gate.also(max_abs(back.matrix() - a.matrix()) < kRoundtripTol);
    }
  }

  // M = 2N oscillator: lowest N/2 eigenvalues match direct truncation
  // within the tolerance frozen from the convergence study (worst
  // observed 1.77e-10 at N = 128).
  const int n = 128;
  TruncationPair pair{BasisSpec{2 * n, 1.0}, BasisSpec{n, 1.0}};
  HermitianOperator large = oscillator(pair.large);
  RealVector via_compact =
      diagonalize(compactified_extension(large, pair)).eigenvalues;
  RealVector direct =
      diagonalize(truncate_operator(large, pair)).eigenvalues;
  double worst = 0.0;
  for (int j = 0; j < n / 2; ++j)
    worst = std::max(worst, std::abs(via_compact(j) - direct(j)));
  gate.also(worst < kLadderTol);
  CHECK(worst < kLadderTol);
  CHECK(gate.finish());
}

TEST_CASE("abel average and resolvent wave operators coincide") {
  Gate gate(5, 60.0);
  const double epsilons[] = {0.05, 0.1, 0.2};
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    ScatteringPair pair = random_pair(2 + (i % 15), 300 + i);
    for (double eps : epsilons)
      for (Direction dir : {Direction::plus, Direction::minus}) {
        ScatteringConfig sc = config_eps(eps);
        Matrix a = moller_abel_average(pair, sc, dir).matrix;
        Matrix r = moller_resolvent(pair, sc, dir).matrix;
        worst = std::max(worst, max_abs(a - r));
      }
  }
  ScatteringPair gauss = gaussian_pair(128, -1.0);
  for (double eps : epsilons)
    for (Direction dir : {Direction::plus, Direction::minus}) {
      ScatteringConfig sc = config_eps(eps);
      Matrix a = moller_abel_average(gauss, sc, dir).matrix;
      Matrix r = moller_resolvent(gauss, sc, dir).matrix;
      worst = std::max(worst, max_abs(a - r));
    }
  gate.also(worst < kMollerGapTol);
  CHECK(worst < kMollerGapTol);
  CHECK(gate.finish());
}

TEST_CASE("free dynamics scatter trivially and the t matrix is consistent") {
  Gate gate(6, 0.0);

  // V = 0: wave operators and S-matrix are the identity.
  BasisSpec spec{16, 1.0};
  ScatteringPair pair = ScatteringPair::make(
      oscillator(spec),
      HermitianOperator::symmetrized(Matrix::Zero(16, 16)));
  ScatteringConfig sc = config_eps(0.1);
  Matrix id = Matrix::Identity(16, 16);
  for (Direction dir : {Direction::plus, Direction::minus}) {
    gate.also(max_abs(moller_abel_average(pair, sc, dir).matrix - id) <
              kFreeIdentityTol);
    gate.also(max_abs(moller_resolvent(pair, sc, dir).matrix - id) <
              kFreeIdentityTol);
  }
  SMatrixResult s = s_matrix(pair, sc);
  gate.also(max_abs(s.born_like - id) < kFreeIdentityTol);
  gate.also(max_abs(s.direct - id) < kFreeIdentityTol);

  // Dual evaluation of the T-matrix agrees on every tested pair.
  double worst_dual = t_matrix(pair, sc).dual_gap;
  for (int i = 0; i < 50; ++i) {
    ScatteringPair rp = random_pair(2 + (i % 15), 300 + i);
    worst_dual = std::max(worst_dual, t_matrix(rp, config_eps(0.1)).dual_gap);
  }
  worst_dual = std::max(
      worst_dual, t_matrix(gaussian_pair(128, -1.0), config_eps(0.1)).dual_gap);
  gate.also(worst_dual < kDualGapTol);
  CHECK(worst_dual < kDualGapTol);
  CHECK(gate.finish());
}

TEST_CASE("s matrix agreement improves under refinement") {
  Gate gate(7, 300.0);

  // Pre-registered design: weak gaussian well, moving packet, epsilon
  // at the geometric mean of the validity window's ends, and both
  // metrics evaluated on the continuum band [E/2, 2E] of the free
  // spectrum.  Truncation-edge states sit outside that band and are
  // not controlled by this refinement.
  double disc[3], unit[3];
  int step = 0;
  for (int n : {64, 128, 256}) {
    ScatteringPair pair = gaussian_pair(n, -0.2);
    BasisSpec spec{n, 1.0};
    Vector packet =
        packet_coefficients(spec, PacketSpec{-5.0, 1.5, 2.0}, 4 * n);
    packet.normalize();
    EpsilonWindow win = epsilon_validity_window(pair, packet);
    double eps = std::sqrt(win.local_spacing * win.packet_energy);
    gate.also(win.contains(eps));

    std::vector<int> band;
    double lo = win.packet_energy / 2.0, hi = 2.0 * win.packet_energy;
    for (int j = 0; j < n; ++j)
      if (pair.eig_free.eigenvalues(j) >= lo &&
          pair.eig_free.eigenvalues(j) <= hi)
        band.push_back(j);
    gate.also(band.size() >= 4);

    SMatrixResult s = s_matrix(pair, config_eps(eps));
    Matrix diff = s.born_like - s.direct;
    Matrix gram = s.direct.adjoint() * s.direct;
    double d = 0.0, u = 0.0;
    for (int j : band)
      for (int k : band) {
        d = std::max(d, std::abs(diff(j, k)));
        u = std::max(u, std::abs(gram(j, k) - (j == k ? 1.0 : 0.0)));
      }
    disc[step] = d;
    unit[step] = u;
    ++step;
  }
  std::printf("  band discrepancy: %.4e -> %.4e -> %.4e\n", disc[0], disc[1],
              disc[2]);
  std::printf("  band unitarity:   %.4e -> %.4e -> %.4e\n", unit[0], unit[1],
              unit[2]);
  gate.also(disc[1] < disc[0] && disc[2] < disc[1]);
  gate.also(unit[1] < unit[0] && unit[2] < unit[1]);
  CHECK(disc[1] < disc[0]);
  CHECK(disc[2] < disc[1]);
  CHECK(unit[1] < unit[0]);
  CHECK(unit[2] < unit[1]);
  CHECK(gate.finish());
}

TEST_CASE("eigensystem persistence is exact and rejects corruption") {
  Gate gate(8, 0.0);
  fs::path dir = fs::temp_directory_path() / "hqm_acceptance_persist";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::path f = dir / "sys.hqev";

  EigenSystem eig = diagonalize(random_hermitian(12, 900));
  save_eigensystem(eig, f.string());
  EigenSystem back = load_eigensystem(f.string());
  gate.also((back.eigenvalues.array() == eig.eigenvalues.array()).all());
  gate.also((back.eigenvectors.array() == eig.eigenvectors.array()).all());

  std::ifstream in(f, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string good = ss.str();
  in.close();

  fs::path f2 = dir / "sys2.hqev";
  save_eigensystem(back, f2.string());
  std::ifstream in2(f2, std::ios::binary);
  std::ostringstream ss2;
  ss2 << in2.rdbuf();
  gate.also(ss2.str() == good);

  auto failure_kind = [&](const std::string& bytes) {
    std::ofstream out(f, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    try {
      load_eigensystem(f.string());
    } catch (const PersistenceError& e) {
      return e.kind();
    }
    return PersistErrorKind::io;  // no throw: wrong, caught below
  };

  std::string flipped = good;
  flipped[25] ^= 0x40;
  // Same bytes, same verdict, twice over.
  gate.also(failure_kind(flipped) == PersistErrorKind::corrupt);
  gate.also(failure_kind(flipped) == PersistErrorKind::corrupt);
  std::string magic = good;
  magic[1] = 'z';
  gate.also(failure_kind(magic) == PersistErrorKind::bad_magic);
  std::string version = good;
  version[4] = 9;
  gate.also(failure_kind(version) == PersistErrorKind::bad_version);
  gate.also(failure_kind(good.substr(0, 40)) == PersistErrorKind::corrupt);
  try {
    load_eigensystem((dir / "absent.hqev").string());
    gate.also(false);
  } catch (const PersistenceError& e) {
    gate.also(e.kind() == PersistErrorKind::io);
  }
  CHECK(gate.finish());
}
