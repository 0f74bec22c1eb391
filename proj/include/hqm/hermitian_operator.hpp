#pragma once

#include <Eigen/Dense>
#include <complex>

namespace hqm {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Dense Hermitian matrix with the Hermiticity invariant enforced at
// construction.  The stored matrix satisfies A == A.adjoint() exactly:
// the validating constructor rejects input whose asymmetry exceeds
// 1e-12 relative to the largest entry magnitude, then replaces A by
// (A + A^*)/2 so downstream code never sees roundoff-level asymmetry.
class HermitianOperator {
 public:
  // Validates ||A - A^*||_max <= 1e-12 * max|A_ij|, throws
  // std::invalid_argument otherwise.  Square input required.
  explicit HermitianOperator(const Matrix& a);

  // Skips the tolerance check and symmetrizes unconditionally.  For
  // results of internal computations (e.g. X f(D) X^*) that are
  // Hermitian up to roundoff by construction.
  static HermitianOperator symmetrized(const Matrix& a);

  const Matrix& matrix() const { return mat_; }
  Eigen::Index dimension() const { return mat_.rows(); }

 private:
  struct unchecked_t {};
  HermitianOperator(const Matrix& a, unchecked_t);
  Matrix mat_;
};

}  // namespace hqm
