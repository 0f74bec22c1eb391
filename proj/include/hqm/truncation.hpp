#pragma once

#include "hqm/basis.hpp"
#include "hqm/spectral.hpp"

namespace hqm {

// Pair of nested bases with the same scale: the first `small.dimension`
// functions of `large` are exactly the functions of `small`, so
// truncation is literal leading-block extraction.
struct TruncationPair {
  BasisSpec large;
  BasisSpec small;

  // Both specs valid, equal scales, small.dimension <= large.dimension.
  void validate() const;
};

// Leading small.dimension entries of a large-basis coefficient vector.
Vector truncate_vector(const Vector& x, const TruncationPair& pair);

// Leading principal block of a large-basis operator.
HermitianOperator truncate_operator(const HermitianOperator& a,
                                    const TruncationPair& pair);

// tan on (-pi/2, pi/2), zero outside (including the endpoints).  The
// inverse-then-forward route below additionally snaps eigenvalues within
// 1e-10 of +-pi/2 to zero before applying tan, since tan amplifies
// roundoff near the poles without bound.
double tg(double r);

// Carry an operator through the compact picture:
//   A' = arctan(A_large)            (eigencalculus in the large basis)
//   B' = truncate_operator(A')      (the only step that loses information)
//   result = tg(B')                 (eigencalculus in the small basis)
// All eigenvalues of B' lie in [-pi/2, pi/2] up to roundoff; values
// within 1e-10 of the ends are treated as escaped to infinity and
// mapped to zero by tg.  With small == large the round trip is the
// identity up to eigensolver accuracy.
HermitianOperator compactified_extension(const HermitianOperator& a_large,
                                         const TruncationPair& pair);

}  // namespace hqm
