#include "hqm/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hqm {

namespace {

constexpr double kPiQuarterInv = 0.75112554446494248;  // pi^(-1/4)
constexpr double kLn2 = 0.69314718055994531;

// Recurrence state carrying (u_{k-1}, u_k) times 2^e2.  The split
// exponent keeps the Gaussian start representable at any argument and
// absorbs growth at high order; Newton ratios and logarithms never need
// the materialized value.
struct ScaledPair {
  double prev = 0.0;
  double cur = 0.0;
  long e2 = 0;
};

ScaledPair hermite_start(double t) {
  double log2_gauss = -0.5 * t * t / kLn2;
  long e2 = std::lround(std::max(log2_gauss, -1.0e9));
  ScaledPair s;
  s.e2 = e2;
  s.cur = kPiQuarterInv * std::exp2(log2_gauss - static_cast<double>(e2));
  return s;
}

void hermite_renorm(ScaledPair& s) {
  double m = std::max(std::abs(s.prev), std::abs(s.cur));
  if (m == 0.0) return;
  int e = 0;
  std::frexp(m, &e);
  if (e > 500 || e < -500) {
    s.prev = std::ldexp(s.prev, -e);
    s.cur = std::ldexp(s.cur, -e);
    s.e2 += e;
  }
}

// One step k -> k+1 of
//   u_{k+1} = sqrt(2/(k+1)) t u_k - sqrt(k/(k+1)) u_{k-1}.
void hermite_step(ScaledPair& s, int k, double t) {
  double next = std::sqrt(2.0 / (k + 1)) * t * s.cur -
                std::sqrt(static_cast<double>(k) / (k + 1)) * s.prev;
  s.prev = s.cur;
  s.cur = next;
  hermite_renorm(s);
}

// (u_{n-1}, u_n) at t, scaled.
ScaledPair hermite_pair(int n, double t) {
  ScaledPair s = hermite_start(t);
  for (int k = 0; k < n; ++k) hermite_step(s, k, t);
  return s;
}

double materialize(double v, long e2) {
  if (v == 0.0) return 0.0;
  if (e2 > 2000) throw std::overflow_error("hermite function overflow");
  if (e2 < -2000) return 0.0;
  return std::ldexp(v, static_cast<int>(e2));
}

void check_order(int n) {
  if (n < 0 || n > kMaxHermiteOrder)
    throw std::invalid_argument("hermite order outside [0, 4096]");
}

double require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << what << " is non-finite";
    throw std::domain_error(os.str());
  }
  return v;
}

}  // namespace

void BasisSpec::validate() const {
  if (dimension < 1 || dimension > kMaxHermiteOrder)
    throw std::invalid_argument("basis dimension outside [1, 4096]");
  if (!std::isfinite(scale) || scale <= 0.0)
    throw std::invalid_argument("basis scale must be positive and finite");
}

double hermite_function(int n, double x, const BasisSpec& spec) {
  spec.validate();
  check_order(n);
  double t = x / spec.scale;
  ScaledPair s = hermite_pair(n, t);
  return materialize(s.cur, s.e2) / std::sqrt(spec.scale);
}

QuadratureRule gauss_hermite_rule(int order) {
  if (order < 1 || order > kMaxHermiteOrder)
    throw std::invalid_argument("quadrature order outside [1, 4096]");

  QuadratureRule rule;
  rule.order = order;
  rule.nodes.assign(order, 0.0);
  rule.weights.assign(order, 0.0);
  rule.scaled_weights.assign(order, 0.0);

  const int m = (order + 1) / 2;
  const double anu = 2.0 * order + 1.0;
  std::vector<double> upper(m, 0.0);  // roots, largest first

  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    // Tracy-Widom edge guess for the largest root, then successive
    // extrapolation inward (standard Gauss-Hermite seeding).
    if (i == 0) {
      z = std::sqrt(anu) - 1.85575 * std::pow(anu, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(order), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * upper[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * upper[1];
    } else {
      z = 2.0 * z - upper[i - 2];
    }

    bool central = (order % 2 == 1) && (i == m - 1);
    if (central) z = 0.0;  // odd order: middle root is exact

    ScaledPair s{};
    bool converged = central;
    for (int it = 0; it < 200 && !converged; ++it) {
      s = hermite_pair(order, z);
      double deriv = std::sqrt(2.0 * order) * s.prev - z * s.cur;
      double dz = s.cur / deriv;
      z -= dz;
      converged = std::abs(dz) <= 1e-15 * (1.0 + std::abs(z));
    }
    if (!converged)
      throw std::runtime_error("gauss_hermite_rule: Newton did not converge");
    s = hermite_pair(order, z);

    // w = 1 / (order * htilde_{order-1}(z)^2) with htilde the orthonormal
    // polynomial; in function form log w = -log(order)
    //                                      - 2 log|u_{order-1}(z)| - z^2.
    double log_u = std::log(std::abs(s.prev)) + static_cast<double>(s.e2) * kLn2;
    double log_w = -std::log(static_cast<double>(order)) - 2.0 * log_u - z * z;
    double w = std::exp(log_w);
    if (w == 0.0) w = std::numeric_limits<double>::denorm_min();
    double sw = std::exp(log_w + z * z);

    upper[i] = z;
    rule.nodes[order - 1 - i] = z;
    rule.nodes[i] = central ? 0.0 : -z;
    rule.weights[order - 1 - i] = w;
    rule.weights[i] = w;
    rule.scaled_weights[order - 1 - i] = sw;
    rule.scaled_weights[i] = sw;
  }

  for (int i = 0; i + 1 < order; ++i) {
    if (!(rule.nodes[i] < rule.nodes[i + 1]))
      throw std::runtime_error("gauss_hermite_rule: nodes not increasing");
  }
  return rule;
}

PotentialSpec PotentialSpec::polynomial(std::vector<double> coeffs) {
  for (double c : coeffs) require_finite(c, "polynomial coefficient");
  PotentialSpec p;
  p.kind_ = Kind::polynomial;
  p.coeffs_ = std::move(coeffs);
  return p;
}

PotentialSpec PotentialSpec::gaussian(double amplitude, double width,
                                      double center) {
  require_finite(amplitude, "gaussian amplitude");
  require_finite(center, "gaussian center");
  if (!std::isfinite(width) || width <= 0.0)
    throw std::invalid_argument("gaussian width must be positive");
  PotentialSpec p;
  p.kind_ = Kind::gaussian;
  p.amplitude_ = amplitude;
  p.width_ = width;
  p.center_ = center;
  return p;
}

PotentialSpec PotentialSpec::tabulated(std::vector<double> x,
                                       std::vector<double> v) {
  if (x.size() != v.size() || x.empty())
    throw std::invalid_argument("table needs equal-length nonempty x and v");
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (!(x[i] < x[i + 1]))
      throw std::invalid_argument("table x must be strictly increasing");
  for (double t : x) require_finite(t, "table x");
  for (double t : v) require_finite(t, "table v");

  PotentialSpec p;
  p.kind_ = Kind::tabulated;
  p.tab_x_ = std::move(x);
  p.tab_v_ = std::move(v);

  // Fritsch-Carlson derivatives: harmonic-mean limiting in the interior,
  // clamped three-point estimates at the ends.  Keeps the interpolant
  // monotone wherever the data are.
  const std::size_t n = p.tab_x_.size();
  p.tab_d_.assign(n, 0.0);
  if (n >= 2) {
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = p.tab_x_[k + 1] - p.tab_x_[k];
      d[k] = (p.tab_v_[k + 1] - p.tab_v_[k]) / h[k];
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (d[k - 1] * d[k] <= 0.0) {
        p.tab_d_[k] = 0.0;
      } else {
        double w1 = 2.0 * h[k] + h[k - 1];
        double w2 = h[k] + 2.0 * h[k - 1];
        p.tab_d_[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
      }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (m * d0 <= 0.0) return 0.0;
      if (d0 * d1 < 0.0 && std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
      return m;
    };
    if (n == 2) {
      p.tab_d_[0] = p.tab_d_[1] = d[0];
    } else {
      p.tab_d_[0] = end_slope(h[0], h[1], d[0], d[1]);
      p.tab_d_[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    }
  }
  return p;
}

double PotentialSpec::operator()(double x) const {
  switch (kind_) {
    case Kind::polynomial: {
      double acc = 0.0;
      for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it)
        acc = acc * x + *it;
      return acc;
    }
    case Kind::gaussian: {
      double u = (x - center_) / width_;
      return amplitude_ * std::exp(-0.5 * u * u);
    }
    case Kind::tabulated: {
      if (x <= tab_x_.front()) return tab_v_.front();
      if (x >= tab_x_.back()) return tab_v_.back();
      auto it = std::upper_bound(tab_x_.begin(), tab_x_.end(), x);
      std::size_t k = static_cast<std::size_t>(it - tab_x_.begin()) - 1;
      double h = tab_x_[k + 1] - tab_x_[k];
      double s = (x - tab_x_[k]) / h;
      double s2 = s * s, s3 = s2 * s;
      return (2 * s3 - 3 * s2 + 1) * tab_v_[k] + (s3 - 2 * s2 + s) * h * tab_d_[k] +
             (-2 * s3 + 3 * s2) * tab_v_[k + 1] + (s3 - s2) * h * tab_d_[k + 1];
    }
  }
  return 0.0;
}

int PotentialSpec::polynomial_degree() const {
  if (kind_ != Kind::polynomial) return -1;
  for (std::size_t k = coeffs_.size(); k > 0; --k)
    if (coeffs_[k - 1] != 0.0) return static_cast<int>(k) - 1;
  return -1;
}

std::string PotentialSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::polynomial:
      os << "polynomial degree " << polynomial_degree();
      break;
    case Kind::gaussian:
      os << "gaussian amplitude " << amplitude_ << " width " << width_
         << " center " << center_;
      break;
    case Kind::tabulated:
      os << "tabulated " << tab_x_.size() << " points on [" << tab_x_.front()
         << ", " << tab_x_.back() << "]";
      break;
  }
  return os.str();
}

HermitianOperator position_matrix(const BasisSpec& spec) {
  spec.validate();
  const int n = spec.dimension;
  Matrix q = Matrix::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) {
    double v = spec.scale * std::sqrt((k + 1) / 2.0);
    q(k, k + 1) = v;
    q(k + 1, k) = v;
  }
  return HermitianOperator::symmetrized(q);
}

HermitianOperator momentum_matrix(const BasisSpec& spec) {
  spec.validate();
  const int n = spec.dimension;
  Matrix p = Matrix::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) {
    double v = std::sqrt((k + 1) / 2.0) / spec.scale;
    p(k, k + 1) = Complex(0.0, -v);
    p(k + 1, k) = Complex(0.0, v);
  }
  return HermitianOperator::symmetrized(p);
}

HermitianOperator kinetic_matrix(const BasisSpec& spec) {
  spec.validate();
  const int n = spec.dimension;
  const double s2 = spec.scale * spec.scale;
  Matrix t = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) t(k, k) = (k + 0.5) / s2;
  for (int k = 0; k + 2 < n; ++k) {
    double v = -std::sqrt((k + 1.0) * (k + 2.0)) / (2.0 * s2);
    t(k, k + 2) = v;
    t(k + 2, k) = v;
  }
  return HermitianOperator::symmetrized(t);
}

HermitianOperator squared_momentum_matrix(const BasisSpec& spec) {
  Matrix p = momentum_matrix(spec).matrix();
  return HermitianOperator::symmetrized(p * p);
}

namespace {

// Basis values u_k(nodes[i]) for k < dim as a dim x order matrix.
Eigen::MatrixXd basis_value_table(int dim, const std::vector<double>& nodes) {
  Eigen::MatrixXd u(dim, nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double t = nodes[i];
    ScaledPair s = hermite_start(t);
    u(0, static_cast<Eigen::Index>(i)) = materialize(s.cur, s.e2);
    for (int k = 1; k < dim; ++k) {
      hermite_step(s, k - 1, t);
      u(k, static_cast<Eigen::Index>(i)) = materialize(s.cur, s.e2);
    }
  }
  return u;
}

}  // namespace

HermitianOperator potential_matrix(const BasisSpec& spec,
                                   const PotentialSpec& potential,
                                   const QuadratureRule& rule) {
  spec.validate();
  if (rule.order < 1 || rule.nodes.size() != static_cast<std::size_t>(rule.order))
    throw std::invalid_argument("potential_matrix: malformed quadrature rule");

  Eigen::MatrixXd u = basis_value_table(spec.dimension, rule.nodes);
  Eigen::VectorXd w(rule.order);
  for (int i = 0; i < rule.order; ++i) {
    double v = potential(spec.scale * rule.nodes[i]);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "potential non-finite at x = " << spec.scale * rule.nodes[i];
      throw std::domain_error(os.str());
    }
    w(i) = rule.scaled_weights[i] * v;
  }
  Eigen::MatrixXd m = u * w.asDiagonal() * u.transpose();
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  return HermitianOperator::symmetrized(sym.cast<Complex>());
}

void PacketSpec::validate() const {
  require_finite(center, "packet center");
  require_finite(momentum, "packet momentum");
  if (!std::isfinite(width) || width <= 0.0)
    throw std::invalid_argument("packet width must be positive");
}

Vector packet_coefficients(const BasisSpec& spec, const PacketSpec& packet,
                           int quad_order) {
  spec.validate();
  packet.validate();
  QuadratureRule rule = gauss_hermite_rule(quad_order);

  Eigen::MatrixXd u = basis_value_table(spec.dimension, rule.nodes);
  const double norm = std::pow(2.0 * M_PI * packet.width * packet.width, -0.25);
  Vector f(rule.order);
  for (int i = 0; i < rule.order; ++i) {
    double x = spec.scale * rule.nodes[i];
    double g = (x - packet.center) / (2.0 * packet.width);
    Complex psi = norm * std::exp(-g * g) *
                  std::exp(Complex(0.0, packet.momentum * x));
    f(i) = rule.scaled_weights[i] * std::sqrt(spec.scale) * psi;
  }
  return u.cast<Complex>() * f;
}

}  // namespace hqm
