#include "hqm/truncation.hpp"

#include <cmath>
#include <stdexcept>

namespace hqm {

void TruncationPair::validate() const {
  large.validate();
  small.validate();
  if (small.dimension > large.dimension)
    throw std::invalid_argument("truncation target exceeds source dimension");
  if (small.scale != large.scale)
    throw std::invalid_argument("truncation requires matching basis scales");
}

Vector truncate_vector(const Vector& x, const TruncationPair& pair) {
  pair.validate();
  if (x.size() != pair.large.dimension)
    throw std::invalid_argument("truncate_vector: wrong source dimension");
  return x.head(pair.small.dimension);
}

HermitianOperator truncate_operator(const HermitianOperator& a,
                                    const TruncationPair& pair) {
  pair.validate();
  if (a.dimension() != pair.large.dimension)
    throw std::invalid_argument("truncate_operator: wrong source dimension");
  const int n = pair.small.dimension;
  return HermitianOperator::symmetrized(a.matrix().topLeftCorner(n, n));
}

double tg(double r) {
  if (!(std::abs(r) < M_PI_2)) return 0.0;
  return std::tan(r);
}

HermitianOperator compactified_extension(const HermitianOperator& a_large,
                                         const TruncationPair& pair) {
  pair.validate();
  if (a_large.dimension() != pair.large.dimension)
    throw std::invalid_argument("compactified_extension: wrong dimension");

  EigenSystem eig_large = diagonalize(a_large);
  HermitianOperator compact =
      apply_real_function(eig_large, [](double x) { return std::atan(x); });
  HermitianOperator block = truncate_operator(compact, pair);
  EigenSystem eig_block = diagonalize(block);

  // arctan maps into (-pi/2, pi/2) and truncation is a compression, so
  // block eigenvalues cannot leave [-pi/2, pi/2] except by roundoff.
  double top = eig_block.eigenvalues.cwiseAbs().maxCoeff();
  if (top > M_PI_2 + 1e-9)
    throw std::logic_error("compactified block spectrum left [-pi/2, pi/2]");

  // Within 1e-10 of the ends the value represents a point escaped to
  // infinity; tan would turn roundoff there into an arbitrary number.
  auto back = [](double r) {
    return (std::abs(r) >= M_PI_2 - 1e-10) ? 0.0 : std::tan(r);
  };
  return apply_real_function(eig_block, back);
}

}  // namespace hqm
