#include "hqm/hermitian_operator.hpp"

#include <stdexcept>

namespace hqm {

namespace {

void check_shape(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw std::invalid_argument("operator matrix must be square and nonempty");
  if (!a.allFinite())
    throw std::invalid_argument("operator matrix has non-finite entries");
}

}  // namespace

HermitianOperator::HermitianOperator(const Matrix& a) {
  check_shape(a);
  double maxmag = a.cwiseAbs().maxCoeff();
  double defect = (a - a.adjoint()).cwiseAbs().maxCoeff();
  if (defect > 1e-12 * maxmag)
    throw std::invalid_argument("matrix is not Hermitian within tolerance");
  mat_ = 0.5 * (a + a.adjoint());
}

HermitianOperator::HermitianOperator(const Matrix& a, unchecked_t) {
  mat_ = 0.5 * (a + a.adjoint());
}

HermitianOperator HermitianOperator::symmetrized(const Matrix& a) {
  check_shape(a);
  return HermitianOperator(a, unchecked_t{});
}

}  // namespace hqm
