#pragma once

#include <vector>

#include "hqm/spectral.hpp"

namespace hqm {

// Free and perturbed Hamiltonians with their eigensystems computed once.
// full is assembled as free + interaction, and the stored interaction is
// then recomputed as full - free so that full - free - interaction
// vanishes exactly entry by entry.
struct ScatteringPair {
  HermitianOperator free_op;
  HermitianOperator interaction;
  HermitianOperator full_op;
  EigenSystem eig_free;
  EigenSystem eig_full;

  static ScatteringPair make(const HermitianOperator& free_op,
                             const HermitianOperator& interaction);
};

struct ScatteringConfig {
  double epsilon = 0.1;          // > 0, regularization width
  double t_max = 40.0;           // > 0, grid horizon
  std::vector<double> t_grid;    // strictly increasing, positive, <= t_max
  double tolerance = 1e-6;       // plateau residual threshold

  // Fills t_grid with `steps` uniform samples of (0, t_max].
  void fill_uniform_grid(int steps);
  void validate() const;
};

// plus: the t -> -infinity limit (incoming asymptotics)
// minus: the t -> +infinity limit
enum class Direction { plus, minus };

// e^{iBt} e^{-iB0 t} x, both factors applied by phase multiplication in
// the respective eigenbases.
Vector propagator_product(const ScatteringPair& pair, double t,
                          const Vector& x);

enum class WaveLimitVerdict { convergent, divergent };

struct WaveLimitResult {
  WaveLimitVerdict verdict = WaveLimitVerdict::divergent;
  std::vector<double> times;      // signed times actually sampled
  std::vector<double> residuals;  // ||y_k - y_{k-1}||, size times.size()-1
  Vector limit;                   // final sample if convergent, else empty
};

// Samples the propagator product along the configured time grid (negated
// for Direction::plus) and declares convergence when every residual in
// the last quarter of the grid is below config.tolerance.  Requires
// ||x|| == 1 within 1e-8.
WaveLimitResult detect_wave_limit(const ScatteringPair& pair, const Vector& x,
                                  const ScatteringConfig& config,
                                  Direction direction);

struct WaveOperatorResult {
  Matrix matrix;
  Direction direction = Direction::plus;
  const char* method = "";
  // ||e^{iBt} W - W e^{iB0 t}||_max at t = 1, 2, 5.  Exact intertwining
  // holds only in the epsilon -> 0 limit; these report the finite-epsilon
  // defect.
  std::vector<double> intertwining_defects;
};

// Abel-averaged wave operator.  With C = Xfull^* Xfree and
//   K_ij = eps / (eps + i sgn (lambda_full_i - lambda_free_j)),
// sgn = +1 for plus, -1 for minus:
//   W = Xfull (C o K) Xfree^*        (o = entrywise product)
// which is the closed form of  eps * integral_0^inf e^{-eps s} Y_{-+s} ds.
WaveOperatorResult moller_abel_average(const ScatteringPair& pair,
                                       const ScatteringConfig& config,
                                       Direction direction);

// Stationary form.  With G = Xfull^* V Xfree,
//   M_ij = G_ij / (lambda_free_j - lambda_full_i + i sgn eps),
//   W = I + Xfull M Xfree^*.
// Algebraically identical to the Abel average at equal eps; the two are
// computed through different intermediates and serve as mutual checks.
WaveOperatorResult moller_resolvent(const ScatteringPair& pair,
                                    const ScatteringConfig& config,
                                    Direction direction);

struct TMatrixResult {
  Matrix matrix;     // in the free eigenbasis, from the commutator form
  double dual_gap;   // max-norm gap to the eigenvalue-weighted form
};

// T_jk = <e_j, (W+ B0 - B0 W+) e_k>  in the free eigenbasis, with W+ in
// resolvent form.  Cross-checked against (lambda_free_k - lambda_free_j)
// times the compressed wave operator.
TMatrixResult t_matrix(const ScatteringPair& pair,
                       const ScatteringConfig& config);

// (1/pi) eps / (x^2 + eps^2); epsilon > 0.
double lorentzian_delta(double x, double epsilon);

struct SMatrixResult {
  Matrix born_like;    // delta_jk - 2 pi i delta_eps(lambda_j - lambda_k) T_jk
  Matrix direct;       // Xfree^* (W-)^* (W+) Xfree
  double discrepancy;  // max-norm difference; reported, not asserted
};

SMatrixResult s_matrix(const ScatteringPair& pair,
                       const ScatteringConfig& config);

// ||e^{iBt} W - W e^{iB0 t}||_max.
double intertwining_defect(const ScatteringPair& pair, const Matrix& w,
                           double t);

// The regularization width only resolves scattering structure when it
// sits between the local free-spectrum spacing and the packet energy.
struct EpsilonWindow {
  double local_spacing = 0.0;  // free-eigenvalue gap near the packet energy
  double packet_energy = 0.0;  // <x, B0 x> / ||x||^2
  bool contains(double epsilon) const {
    return epsilon > local_spacing && epsilon < packet_energy;
  }
};

EpsilonWindow epsilon_validity_window(const ScatteringPair& pair,
                                      const Vector& packet);

}  // namespace hqm
