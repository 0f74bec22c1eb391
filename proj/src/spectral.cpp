#include "hqm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hqm {

namespace {

void check_state(const EigenSystem& eig, const Vector& x, const char* who) {
  if (x.size() != eig.dimension()) {
    std::ostringstream os;
    os << who << ": state dimension " << x.size()
       << " does not match eigensystem dimension " << eig.dimension();
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

EigenSystem diagonalize(const HermitianOperator& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix());
  if (solver.info() != Eigen::Success)
    throw DiagonalizationError("eigensolver did not converge",
                               std::numeric_limits<double>::quiet_NaN());

  EigenSystem eig;
  eig.eigenvalues = solver.eigenvalues();
  eig.eigenvectors = solver.eigenvectors();
  const Eigen::Index n = eig.dimension();

  // Within a numerically degenerate cluster the eigenvector basis is an
  // arbitrary unitary mixture; replace it by the QR factor taken in index
  // order (diagonal of R made real positive) so repeated runs and nearby
  // inputs agree.
  double spread = eig.eigenvalues(n - 1) - eig.eigenvalues(0);
  double gap_tol = 1e-10 * spread;
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && eig.eigenvalues(j + 1) - eig.eigenvalues(j) <= gap_tol)
      ++j;
    if (j > i) {
      const Eigen::Index k = j - i + 1;
      Eigen::HouseholderQR<Matrix> qr(eig.eigenvectors.middleCols(i, k));
      Matrix q = qr.householderQ() * Matrix::Identity(n, k);
      Matrix r = qr.matrixQR()
                     .topRows(k)
                     .triangularView<Eigen::Upper>();
      for (Eigen::Index c = 0; c < k; ++c) {
        double m = std::abs(r(c, c));
        if (m > 0.0) q.col(c) *= r(c, c) / m;
      }
      eig.eigenvectors.middleCols(i, k) = q;
    }
    i = j + 1;
  }

  double orth = (eig.eigenvectors.adjoint() * eig.eigenvectors -
                 Matrix::Identity(n, n))
                    .cwiseAbs()
                    .maxCoeff();
  if (orth > 1e-10)
    throw DiagonalizationError("eigenvector basis lost orthonormality", orth);

  double lam_max = eig.eigenvalues.cwiseAbs().maxCoeff();
  double recon = (eig.eigenvectors *
                      eig.eigenvalues.cast<Complex>().asDiagonal() *
                      eig.eigenvectors.adjoint() -
                  a.matrix())
                     .cwiseAbs()
                     .maxCoeff();
  if (recon > 1e-9 * std::max(1.0, lam_max))
    throw DiagonalizationError("eigendecomposition residual too large", recon);

  return eig;
}

void SpectralInterval::validate() const {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw std::invalid_argument("interval needs lo <= hi, no NaN");
  if (std::isinf(lo) && lo_closed)
    throw std::invalid_argument("infinite left endpoint must be open");
  if (std::isinf(hi) && hi_closed)
    throw std::invalid_argument("infinite right endpoint must be open");
  if (lo == hi && !(lo_closed && hi_closed))
    throw std::invalid_argument("degenerate interval must be closed");
}

bool SpectralInterval::contains(double lambda) const {
  // Endpoint snap: roundoff-sized perturbations must not flip membership.
  if (std::isfinite(lo) && std::abs(lambda - lo) <= 1e-12) return lo_closed;
  if (std::isfinite(hi) && std::abs(lambda - hi) <= 1e-12) return hi_closed;
  return lambda > lo && lambda < hi;
}

SpectralWindow SpectralWindow::interval(double lo, double hi, bool lo_closed,
                                        bool hi_closed) {
  SpectralWindow w;
  w.intervals.push_back({lo, hi, lo_closed, hi_closed});
  w.validate();
  return w;
}

SpectralWindow SpectralWindow::closed(double lo, double hi) {
  return interval(lo, hi, true, true);
}

SpectralWindow SpectralWindow::open(double lo, double hi) {
  return interval(lo, hi, false, false);
}

SpectralWindow SpectralWindow::all() {
  return open(-std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity());
}

SpectralWindow SpectralWindow::none() { return SpectralWindow{}; }

SpectralWindow& SpectralWindow::join(const SpectralWindow& other) {
  intervals.insert(intervals.end(), other.intervals.begin(),
                   other.intervals.end());
  std::sort(intervals.begin(), intervals.end(),
            [](const SpectralInterval& a, const SpectralInterval& b) {
              return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
            });
  validate();
  return *this;
}

void SpectralWindow::validate() const {
  for (const auto& iv : intervals) iv.validate();
  for (std::size_t k = 0; k + 1 < intervals.size(); ++k) {
    const auto& a = intervals[k];
    const auto& b = intervals[k + 1];
    bool ordered = a.hi < b.lo || (a.hi == b.lo && !(a.hi_closed && b.lo_closed));
    if (!ordered)
      throw std::invalid_argument("window intervals must be disjoint and sorted");
  }
}

bool SpectralWindow::contains(double lambda) const {
  for (const auto& iv : intervals)
    if (iv.contains(lambda)) return true;
  return false;
}

HermitianOperator spectral_projector(const EigenSystem& eig,
                                     const SpectralWindow& window) {
  window.validate();
  const Eigen::Index n = eig.dimension();
  std::vector<Eigen::Index> sel;
  for (Eigen::Index i = 0; i < n; ++i)
    if (window.contains(eig.eigenvalues(i))) sel.push_back(i);

  Matrix cols(n, static_cast<Eigen::Index>(sel.size()));
  for (std::size_t k = 0; k < sel.size(); ++k)
    cols.col(static_cast<Eigen::Index>(k)) = eig.eigenvectors.col(sel[k]);
  if (sel.empty()) return HermitianOperator::symmetrized(Matrix::Zero(n, n));
  return HermitianOperator::symmetrized(cols * cols.adjoint());
}

HermitianOperator finite_part_projector(const EigenSystem& eig,
                                        double cutoff) {
  if (!std::isfinite(cutoff) || cutoff <= 0.0)
    throw std::invalid_argument("finite-part cutoff must be positive");
  return spectral_projector(eig, SpectralWindow::closed(-cutoff, cutoff));
}

double SpectralMeasure::mass_in(const SpectralWindow& window) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (window.contains(eigenvalues(i))) acc += weights(i);
  return acc;
}

Complex ComplexSpectralMeasure::mass_in(const SpectralWindow& window) const {
  Complex acc = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (window.contains(eigenvalues(i))) acc += weights(i);
  return acc;
}

SpectralMeasure spectral_measure(const EigenSystem& eig, const Vector& x) {
  check_state(eig, x, "spectral_measure");
  if (x.norm() == 0.0)
    throw std::invalid_argument("spectral_measure: zero state");
  SpectralMeasure mu;
  mu.eigenvalues = eig.eigenvalues;
  mu.weights = (eig.eigenvectors.adjoint() * x).cwiseAbs2();
  return mu;
}

ComplexSpectralMeasure complex_spectral_measure(const EigenSystem& eig,
                                                const Vector& x,
                                                const Vector& y) {
  check_state(eig, x, "complex_spectral_measure");
  check_state(eig, y, "complex_spectral_measure");
  ComplexSpectralMeasure mu;
  mu.eigenvalues = eig.eigenvalues;
  Vector cx = eig.eigenvectors.adjoint() * x;
  Vector cy = eig.eigenvectors.adjoint() * y;
  mu.weights = cx.conjugate().cwiseProduct(cy);
  return mu;
}

Matrix apply_function(const EigenSystem& eig, const ScalarFunction& f) {
  const Eigen::Index n = eig.dimension();
  Vector fv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Complex v = f(eig.eigenvalues(i));
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      std::ostringstream os;
      os << "apply_function: non-finite value at eigenvalue "
         << eig.eigenvalues(i);
      throw std::domain_error(os.str());
    }
    fv(i) = v;
  }
  return eig.eigenvectors * fv.asDiagonal() * eig.eigenvectors.adjoint();
}

HermitianOperator apply_real_function(const EigenSystem& eig,
                                      const RealFunction& f) {
  Matrix m = apply_function(
      eig, [&f](double lambda) { return Complex(f(lambda), 0.0); });
  return HermitianOperator::symmetrized(m);
}

double compose_functions_check(const EigenSystem& eig, const RealFunction& f,
                               const RealFunction& g) {
  HermitianOperator fa = apply_real_function(eig, f);
  EigenSystem eig_fa = diagonalize(fa);
  Matrix lhs = apply_function(
      eig_fa, [&g](double lambda) { return Complex(g(lambda), 0.0); });
  Matrix rhs = apply_function(
      eig, [&](double lambda) { return Complex(g(f(lambda)), 0.0); });
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

Vector evolve(const EigenSystem& eig, double t, const Vector& x) {
  check_state(eig, x, "evolve");
  if (!std::isfinite(t)) throw std::invalid_argument("evolve: non-finite time");
  Vector c = eig.eigenvectors.adjoint() * x;
  for (Eigen::Index i = 0; i < c.size(); ++i)
    c(i) *= std::polar(1.0, -eig.eigenvalues(i) * t);
  return eig.eigenvectors * c;
}

}  // namespace hqm
