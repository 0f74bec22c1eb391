#include "hqm/scattering.hpp"

#include <cmath>
#include <stdexcept>

namespace hqm {

namespace {

constexpr double kDefectTimes[] = {1.0, 2.0, 5.0};

std::vector<double> defect_profile(const ScatteringPair& pair,
                                   const Matrix& w) {
  std::vector<double> out;
  for (double t : kDefectTimes) out.push_back(intertwining_defect(pair, w, t));
  return out;
}

}  // namespace

ScatteringPair ScatteringPair::make(const HermitianOperator& free_op,
                                    const HermitianOperator& interaction) {
  if (free_op.dimension() != interaction.dimension())
    throw std::invalid_argument("free and interaction dimensions differ");
  HermitianOperator full =
      HermitianOperator::symmetrized(free_op.matrix() + interaction.matrix());
  // Re-derive V from the rounded sum so full - free - V is exactly zero.
  HermitianOperator stored_v =
      HermitianOperator::symmetrized(full.matrix() - free_op.matrix());
  ScatteringPair pair{free_op, stored_v, full, diagonalize(free_op),
                      diagonalize(full)};
  return pair;
}

void ScatteringConfig::fill_uniform_grid(int steps) {
  if (steps < 2) throw std::invalid_argument("time grid needs >= 2 steps");
  t_grid.clear();
  for (int k = 1; k <= steps; ++k) t_grid.push_back(t_max * k / steps);
}

void ScatteringConfig::validate() const {
  if (!std::isfinite(epsilon) || epsilon <= 0.0)
    throw std::invalid_argument("scattering epsilon must be positive");
  if (!std::isfinite(t_max) || t_max <= 0.0)
    throw std::invalid_argument("scattering t_max must be positive");
  if (!std::isfinite(tolerance) || tolerance <= 0.0)
    throw std::invalid_argument("scattering tolerance must be positive");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!std::isfinite(t_grid[k]) || t_grid[k] <= 0.0)
      throw std::invalid_argument("scattering time grid must be positive");
    if (k > 0 && t_grid[k] <= t_grid[k - 1])
      throw std::invalid_argument("scattering time grid must increase");
  }
}

Vector propagator_product(const ScatteringPair& pair, double t,
                          const Vector& x) {
  Vector y = evolve(pair.eig_free, t, x);
  return evolve(pair.eig_full, -t, y);
}

WaveLimitResult detect_wave_limit(const ScatteringPair& pair, const Vector& x,
                                  const ScatteringConfig& config,
                                  Direction direction) {
  config.validate();
  if (config.t_grid.size() < 2)
    throw std::invalid_argument("wave-limit detection needs >= 2 sample times");
  if (std::abs(x.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("wave-limit detection needs a unit state");

  const double sgn = (direction == Direction::plus) ? -1.0 : 1.0;
  WaveLimitResult res;
  Vector prev;
  for (double t : config.t_grid) {
    double st = sgn * t;
    Vector y = propagator_product(pair, st, x);
    res.times.push_back(st);
    if (prev.size() > 0) res.residuals.push_back((y - prev).norm());
    prev = std::move(y);
  }
  // Plateau rule: the last quarter of the residual sequence must sit
  // below tolerance; earlier transients are free to be large.
  const std::size_t r = res.residuals.size();
  const std::size_t q = std::max<std::size_t>(1, r / 4);
  bool ok = true;
  for (std::size_t k = r - q; k < r; ++k)
    ok = ok && (res.residuals[k] < config.tolerance);
  res.verdict = ok ? WaveLimitVerdict::convergent : WaveLimitVerdict::divergent;
  if (res.verdict == WaveLimitVerdict::convergent) res.limit = prev;
  return res;
}

WaveOperatorResult moller_abel_average(const ScatteringPair& pair,
                                       const ScatteringConfig& config,
                                       Direction direction) {
  config.validate();
  const auto& full_sys = pair.eig_full;
  const auto& free_sys = pair.eig_free;
  const double sgn = (direction == Direction::plus) ? 1.0 : -1.0;
  const double eps = config.epsilon;

  Matrix c = full_sys.eigenvectors.adjoint() * free_sys.eigenvectors;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j)
      c(i, j) *= eps / Complex(eps, sgn * (full_sys.eigenvalues(i) -
                                           free_sys.eigenvalues(j)));

  WaveOperatorResult res;
  res.matrix = full_sys.eigenvectors * c * free_sys.eigenvectors.adjoint();
  res.direction = direction;
  res.method = "abel_average";
  res.intertwining_defects = defect_profile(pair, res.matrix);
  return res;
}

WaveOperatorResult moller_resolvent(const ScatteringPair& pair,
                                    const ScatteringConfig& config,
                                    Direction direction) {
  config.validate();
  const auto& full_sys = pair.eig_full;
  const auto& free_sys = pair.eig_free;
  const double sgn = (direction == Direction::plus) ? 1.0 : -1.0;
  const double eps = config.epsilon;
  const Eigen::Index n = pair.free_op.dimension();

  Matrix g = full_sys.eigenvectors.adjoint() * pair.interaction.matrix() *
             free_sys.eigenvectors;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      g(i, j) /= Complex(free_sys.eigenvalues(j) - full_sys.eigenvalues(i), sgn * eps);

  WaveOperatorResult res;
  res.matrix = Matrix::Identity(n, n) +
               full_sys.eigenvectors * g * free_sys.eigenvectors.adjoint();
  res.direction = direction;
  res.method = "resolvent";
  res.intertwining_defects = defect_profile(pair, res.matrix);
  return res;
}

TMatrixResult t_matrix(const ScatteringPair& pair,
                       const ScatteringConfig& config) {
  Matrix w = moller_resolvent(pair, config, Direction::plus).matrix;
  const Matrix& b0 = pair.free_op.matrix();
  const Matrix& xf = pair.eig_free.eigenvectors;

  Matrix commutator_form = xf.adjoint() * (w * b0 - b0 * w) * xf;

  Matrix compressed = xf.adjoint() * w * xf;
  Matrix weighted_form = compressed;
  for (Eigen::Index j = 0; j < weighted_form.rows(); ++j)
    for (Eigen::Index k = 0; k < weighted_form.cols(); ++k)
      weighted_form(j, k) *=
          pair.eig_free.eigenvalues(k) - pair.eig_free.eigenvalues(j);

  TMatrixResult res;
  res.matrix = commutator_form;
  res.dual_gap = (commutator_form - weighted_form).cwiseAbs().maxCoeff();
  return res;
}

double lorentzian_delta(double x, double epsilon) {
  if (!std::isfinite(epsilon) || epsilon <= 0.0)
    throw std::invalid_argument("lorentzian_delta: epsilon must be positive");
  return epsilon / (M_PI * (x * x + epsilon * epsilon));
}

SMatrixResult s_matrix(const ScatteringPair& pair,
                       const ScatteringConfig& config) {
  TMatrixResult t = t_matrix(pair, config);
  const auto& free_sys = pair.eig_free;
  const Eigen::Index n = pair.free_op.dimension();

  SMatrixResult res;
  res.born_like = Matrix::Identity(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      double d = lorentzian_delta(free_sys.eigenvalues(j) - free_sys.eigenvalues(k),
                                  config.epsilon);
      res.born_like(j, k) -= Complex(0.0, 2.0 * M_PI * d) * t.matrix(j, k);
    }

  Matrix wp = moller_resolvent(pair, config, Direction::plus).matrix;
  Matrix wm = moller_resolvent(pair, config, Direction::minus).matrix;
  res.direct = free_sys.eigenvectors.adjoint() * (wm.adjoint() * wp) *
               free_sys.eigenvectors;
  res.discrepancy = (res.born_like - res.direct).cwiseAbs().maxCoeff();
  return res;
}

double intertwining_defect(const ScatteringPair& pair, const Matrix& w,
                           double t) {
  auto phase = [t](const EigenSystem& eig) {
    return apply_function(
        eig, [t](double lambda) { return std::polar(1.0, lambda * t); });
  };
  Matrix lhs = phase(pair.eig_full) * w;
  Matrix rhs = w * phase(pair.eig_free);
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

EpsilonWindow epsilon_validity_window(const ScatteringPair& pair,
                                      const Vector& packet) {
  if (packet.size() != pair.free_op.dimension() || packet.norm() == 0.0)
    throw std::invalid_argument("epsilon window needs a nonzero packet");
  EpsilonWindow win;
  Complex e = packet.dot(pair.free_op.matrix() * packet);
  win.packet_energy = e.real() / packet.squaredNorm();

  const auto& lam = pair.eig_free.eigenvalues;
  const Eigen::Index n = lam.size();
  if (n >= 2) {
    Eigen::Index idx = 0;
    while (idx + 1 < n && lam(idx + 1) <= win.packet_energy) ++idx;
    if (idx + 1 >= n) idx = n - 2;
    win.local_spacing = lam(idx + 1) - lam(idx);
  }
  return win;
}

}  // namespace hqm
