#pragma once

#include <string>
#include <vector>

#include "hqm/hermitian_operator.hpp"

namespace hqm {

// Highest Hermite index supported by the evaluator.  The scaled
// recurrence stays finite well beyond this, but quadrature node
// bracketing and the n^(1/6) asymptotics used for initial guesses are
// only validated up to here.
inline constexpr int kMaxHermiteOrder = 4096;

// Basis of scaled Hermite functions u_n(x/s)/sqrt(s), n = 0..dimension-1,
// orthonormal in L2(R).
struct BasisSpec {
  int dimension = 0;
  double scale = 1.0;

  // dimension in [1, kMaxHermiteOrder], scale > 0 and finite.
  void validate() const;
};

// Value of the n-th basis function at x.  Three-term recurrence on the
// normalized Hermite functions
//   u_{k+1}(t) = sqrt(2/(k+1)) t u_k(t) - sqrt(k/(k+1)) u_{k-1}(t),
//   u_0(t) = pi^{-1/4} exp(-t^2/2),
// carried with a separate power-of-two exponent so the Gaussian start
// never underflows and large orders never overflow.
double hermite_function(int n, double x, const BasisSpec& spec);

// Gauss-Hermite rule for weight exp(-x^2) on R.
//   integral f(x) exp(-x^2) dx  ~=  sum_i weights[i] * f(nodes[i])
// scaled_weights[i] = weights[i] * exp(nodes[i]^2) is the O(1) quantity
// actually used to integrate products of basis functions, where the
// Gaussian already lives inside the integrand:
//   integral g(x) dx  ~=  sum_i scaled_weights[i] * g(nodes[i]).
// Beyond order ~390 the raw tail weights fall below the smallest
// subnormal double; they are clamped to denorm_min to preserve
// positivity, while scaled_weights remain accurate.
struct QuadratureRule {
  int order = 0;
  std::vector<double> nodes;           // ascending, antisymmetric
  std::vector<double> weights;         // positive
  std::vector<double> scaled_weights;  // weights[i] * exp(nodes[i]^2)
};

QuadratureRule gauss_hermite_rule(int order);

// Real potential V(x).  Three shapes:
//   polynomial: V(x) = sum_k coeffs[k] x^k
//   gaussian:   V(x) = amplitude * exp(-(x-center)^2 / (2 width^2))
//   tabulated:  monotone (Fritsch-Carlson) cubic through sample points,
//               clamped to the endpoint values outside the table.
class PotentialSpec {
 public:
  static PotentialSpec polynomial(std::vector<double> coeffs);
  static PotentialSpec gaussian(double amplitude, double width,
                                double center = 0.0);
  static PotentialSpec tabulated(std::vector<double> x, std::vector<double> v);

  double operator()(double x) const;

  bool is_polynomial() const { return kind_ == Kind::polynomial; }
  // Degree after stripping trailing zero coefficients; -1 for V == 0.
  int polynomial_degree() const;

  // One-line description for run manifests.
  std::string describe() const;

 private:
  enum class Kind { polynomial, gaussian, tabulated };
  PotentialSpec() = default;

  Kind kind_ = Kind::polynomial;
  std::vector<double> coeffs_;
  double amplitude_ = 0.0, width_ = 1.0, center_ = 0.0;
  std::vector<double> tab_x_, tab_v_, tab_d_;  // nodes, values, derivatives
};

// Matrix of multiplication by x:  tridiagonal, (n, n+1) = s sqrt((n+1)/2).
HermitianOperator position_matrix(const BasisSpec& spec);

// Matrix of -i d/dx:  (n, n+1) = -(i/s) sqrt((n+1)/2).
HermitianOperator momentum_matrix(const BasisSpec& spec);

// Matrix of -d^2/dx^2 compressed to the basis (entries of the full
// operator, not the square of the compressed momentum):
//   (n, n)   =  (n + 1/2) / s^2
//   (n, n+2) = -sqrt((n+1)(n+2)) / (2 s^2).
HermitianOperator kinetic_matrix(const BasisSpec& spec);

// Square of the compressed momentum matrix.  Differs from
// kinetic_matrix only in the (N-1, N-1) entry, by N/(2 s^2); exposed so
// the two truncation choices can be compared.
HermitianOperator squared_momentum_matrix(const BasisSpec& spec);

// Galerkin matrix  M_mn = integral conj(u_m) V u_n dx  by Gauss-Hermite
// quadrature in the scaled variable.  Exact (up to roundoff) for
// polynomial V when 2 * rule.order - 1 >= 2 * (dimension - 1) + degree.
HermitianOperator potential_matrix(const BasisSpec& spec,
                                   const PotentialSpec& potential,
                                   const QuadratureRule& rule);

// Normalized Gaussian wave packet
//   psi(x) = (2 pi w^2)^{-1/4} exp(-(x-c)^2/(4 w^2)) exp(i k x).
struct PacketSpec {
  double center = 0.0;
  double width = 1.0;    // > 0
  double momentum = 0.0;
  void validate() const;
};

// Expansion coefficients <u_n, psi> by quadrature.  The returned vector
// is NOT renormalized; its norm is < 1 by the basis truncation and the
// shortfall measures how well the packet is represented.
Vector packet_coefficients(const BasisSpec& spec, const PacketSpec& packet,
                           int quad_order);

}  // namespace hqm
