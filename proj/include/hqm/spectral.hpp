#pragma once

#include <functional>
#include <vector>

#include "hqm/errors.hpp"
#include "hqm/hermitian_operator.hpp"

namespace hqm {

// Eigendecomposition A = X diag(lambda) X^* with lambda ascending and X
// unitary.  Within numerically degenerate clusters (gap below 1e-10
// times the spectral spread) the eigenvector block is re-orthonormalized
// by a Householder QR in index order, which pins down the basis of the
// cluster subspace deterministically.
struct EigenSystem {
  RealVector eigenvalues;  // ascending
  Matrix eigenvectors;     // columns, unitary

  Eigen::Index dimension() const { return eigenvalues.size(); }
};

// Throws DiagonalizationError if the solver fails or the result does not
// satisfy ||X^* X - I||_max <= 1e-10 and the reconstruction bound
// ||X diag(lambda) X^* - A||_max <= 1e-9 * max(1, max|lambda|).
EigenSystem diagonalize(const HermitianOperator& a);

// One real interval with independently open or closed endpoints.
// Membership testing snaps values to a finite endpoint when within 1e-12
// absolute, so roundoff-level perturbations cannot flip a boundary
// eigenvalue in or out.  Infinite endpoints are allowed and always open.
struct SpectralInterval {
  double lo = 0.0, hi = 0.0;
  bool lo_closed = true, hi_closed = true;

  // lo <= hi; an infinite endpoint must be open; equal endpoints
  // require both closed (a single point).
  void validate() const;
  bool contains(double lambda) const;
};

// Finite union of pairwise disjoint intervals, sorted by left endpoint.
struct SpectralWindow {
  std::vector<SpectralInterval> intervals;

  static SpectralWindow closed(double lo, double hi);
  static SpectralWindow open(double lo, double hi);
  static SpectralWindow interval(double lo, double hi, bool lo_closed,
                                 bool hi_closed);
  static SpectralWindow all();
  static SpectralWindow none();
  // Union with another disjoint piece; revalidates ordering.
  SpectralWindow& join(const SpectralWindow& other);

  void validate() const;
  bool contains(double lambda) const;
};

// Orthogonal projector onto the span of eigenvectors with eigenvalue in
// the window.  Exactly Hermitian; idempotent up to roundoff.
HermitianOperator spectral_projector(const EigenSystem& eig,
                                     const SpectralWindow& window);

// Projector onto eigenvalues in [-cutoff, cutoff]; cutoff > 0.
HermitianOperator finite_part_projector(const EigenSystem& eig,
                                        double cutoff);

// Atomic measure mu(S) = sum of weights at eigenvalues in S.
struct SpectralMeasure {
  RealVector eigenvalues;
  RealVector weights;  // |<x_i, x>|^2, nonnegative

  double total() const { return weights.sum(); }
  double mass_in(const SpectralWindow& window) const;
};

struct ComplexSpectralMeasure {
  RealVector eigenvalues;
  Vector weights;  // <x, x_i><x_i, y>

  Complex total() const { return weights.sum(); }
  Complex mass_in(const SpectralWindow& window) const;
};

// Scalar measure of A in state x:  weight_i = |<x_i, x>|^2.
// Requires x nonzero; total() == ||x||^2 up to roundoff.
SpectralMeasure spectral_measure(const EigenSystem& eig, const Vector& x);

// Sesquilinear measure:  weight_i = <x, x_i><x_i, y>  (antilinear in x).
ComplexSpectralMeasure complex_spectral_measure(const EigenSystem& eig,
                                                const Vector& x,
                                                const Vector& y);

using ScalarFunction = std::function<Complex(double)>;
using RealFunction = std::function<double(double)>;

// f(A) = X diag(f(lambda)) X^*.  Throws std::domain_error if any
// f(lambda_i) is non-finite, naming the eigenvalue.
Matrix apply_function(const EigenSystem& eig, const ScalarFunction& f);

// Hermitian f(A) for real f; result symmetrized.
HermitianOperator apply_real_function(const EigenSystem& eig,
                                      const RealFunction& f);

// Max-norm gap ||g(f(A)) - (g o f)(A)||_max, with g(f(A)) computed the
// slow way: form f(A), rediagonalize, apply g.  Exercises the spectral
// mapping identity end to end.
double compose_functions_check(const EigenSystem& eig, const RealFunction& f,
                               const RealFunction& g);

// exp(-i A t) x  via phase multiplication in the eigenbasis.
Vector evolve(const EigenSystem& eig, double t, const Vector& x);

}  // namespace hqm
