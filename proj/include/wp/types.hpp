#ifndef WP_TYPES_HPP
#define WP_TYPES_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace wp {

using complex = std::complex<double>;

/// Thrown when a quadrature, fit, or solve fails to reach its requested
/// accuracy. Domain violations use std::domain_error / std::invalid_argument.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Model metric near a boundary stratum with p node blocks and m flat
/// complex directions:
///
///   ds^2 = sum_i f_i(u_i) [ A_i du_i^2 + (A_i/4) u_i^6 dtheta_i^2 ]
///          + sum_j |dt_j|^2,        f_i(u) = 1 + pert_i u^4.
///
/// A_i are the block normalization constants; pert_i = 0 gives the exact
/// model, pert_i > 0 switches on the quartic correction factor.
struct ModelSpec {
  std::size_t p = 0;            ///< number of node blocks
  std::size_t m = 0;            ///< number of flat complex directions
  std::vector<double> A;        ///< block constants, size p, all > 0
  std::vector<double> pert;     ///< correction coefficients, size p, all >= 0

  ModelSpec() = default;
  ModelSpec(std::size_t p_, std::size_t m_, std::vector<double> A_ = {},
            std::vector<double> pert_ = {})
      : p(p_), m(m_), A(std::move(A_)), pert(std::move(pert_)) {
    if (A.empty()) A.assign(p, 1.0);
    if (pert.empty()) pert.assign(p, 0.0);
    validate();
  }

  /// Real dimension of the chart: (u_i, theta_i) per block plus Re/Im t_j.
  std::size_t dim() const { return 2 * p + 2 * m; }

  void validate() const {
    if (p + m < 1) throw std::invalid_argument("ModelSpec: p + m must be >= 1");
    if (A.size() != p || pert.size() != p)
      throw std::invalid_argument("ModelSpec: A and pert must have size p");
    for (double a : A)
      if (!(a > 0.0)) throw std::invalid_argument("ModelSpec: A_i must be positive");
    for (double c : pert)
      if (!(c >= 0.0)) throw std::invalid_argument("ModelSpec: pert_i must be >= 0");
  }

  bool operator==(const ModelSpec&) const = default;
};

/// A point of the chart: u_i >= 0 are square-root length coordinates,
/// theta_i twist angles (kept unwrapped on the whole real line), t_j the
/// flat stratum coordinates.
struct ChartPoint {
  std::vector<double> u;
  std::vector<double> theta;
  std::vector<complex> t;

  ChartPoint() = default;
  ChartPoint(std::vector<double> u_, std::vector<double> theta_, std::vector<complex> t_ = {})
      : u(std::move(u_)), theta(std::move(theta_)), t(std::move(t_)) {}

  bool compatible(const ModelSpec& spec) const {
    return u.size() == spec.p && theta.size() == spec.p && t.size() == spec.m;
  }

  void validate(const ModelSpec& spec) const {
    if (!compatible(spec)) throw std::invalid_argument("ChartPoint: shape mismatch with spec");
    for (double ui : u)
      if (!(ui >= 0.0) || !std::isfinite(ui))
        throw std::domain_error("ChartPoint: u_i must be finite and >= 0");
    for (double th : theta)
      if (!std::isfinite(th)) throw std::domain_error("ChartPoint: theta_i must be finite");
    for (const complex& tj : t)
      if (!std::isfinite(tj.real()) || !std::isfinite(tj.imag()))
        throw std::domain_error("ChartPoint: t_j must be finite");
  }
};

/// Tangent components paired with (du_i, dtheta_i, dt_j).
struct TangentVector {
  std::vector<double> du;
  std::vector<double> dtheta;
  std::vector<complex> dt;

  TangentVector() = default;
  explicit TangentVector(const ModelSpec& spec)
      : du(spec.p, 0.0), dtheta(spec.p, 0.0), dt(spec.m, 0.0) {}
  TangentVector(std::vector<double> du_, std::vector<double> dtheta_,
                std::vector<complex> dt_ = {})
      : du(std::move(du_)), dtheta(std::move(dtheta_)), dt(std::move(dt_)) {}
};

/// One plumbing modulus t_i, stored as (-log|t_i|, arg t_i) so that the
/// collar transform round-trips exactly even where |t| = exp(-2 pi^2/u^2)
/// underflows a double (u < 0.17 already puts |t| below 1e-308).
/// neg_log_mod = +infinity encodes t = 0, the node itself.
struct PlumbingModulus {
  double neg_log_mod = std::numeric_limits<double>::infinity();
  double arg = 0.0;

  double modulus() const { return std::exp(-neg_log_mod); }
  complex value() const {
    const double m = modulus();
    return m == 0.0 ? complex(0.0, 0.0) : std::polar(m, arg);
  }
};

/// Node moduli of the plumbing picture plus the untouched flat coordinates.
struct PlumbingPoint {
  std::vector<PlumbingModulus> w;
  std::vector<complex> t;
};

inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, two_pi);
  if (r < 0.0) r += two_pi;
  return r;
}

/// Point equality on the completed model: u and t agree exactly, and theta_i
/// agrees mod 2*pi wherever u_i > 0. Where u_i = 0 the angle carries no
/// information (the whole theta_i line is a single nodal point).
inline bool same_point(const ChartPoint& a, const ChartPoint& b, double tol = 0.0) {
  if (a.u.size() != b.u.size() || a.t.size() != b.t.size()) return false;
  for (std::size_t i = 0; i < a.u.size(); ++i) {
    if (std::abs(a.u[i] - b.u[i]) > tol) return false;
    if (a.u[i] > tol || b.u[i] > tol) {
      const double d = wrap_angle(a.theta[i] - b.theta[i]);
      const double gap = std::min(d, 2.0 * std::numbers::pi - d);
      if (gap > tol) return false;
    }
  }
  for (std::size_t j = 0; j < a.t.size(); ++j)
    if (std::abs(a.t[j] - b.t[j]) > tol) return false;
  return true;
}

// --- JSON wire formats ----------------------------------------------------

inline void to_json(nlohmann::json& j, const ModelSpec& s) {
  j = nlohmann::json{{"p", s.p}, {"m", s.m}, {"A", s.A}, {"pert", s.pert}};
}

inline void from_json(const nlohmann::json& j, ModelSpec& s) {
  s.p = j.at("p").get<std::size_t>();
  s.m = j.at("m").get<std::size_t>();
  s.A = j.value("A", std::vector<double>(s.p, 1.0));
  s.pert = j.value("pert", std::vector<double>(s.p, 0.0));
  s.validate();
}

inline void to_json(nlohmann::json& j, const ChartPoint& x) {
  nlohmann::json ts = nlohmann::json::array();
  for (const complex& t : x.t) ts.push_back({t.real(), t.imag()});
  j = nlohmann::json{{"u", x.u}, {"theta", x.theta}, {"t", ts}};
}

inline void from_json(const nlohmann::json& j, ChartPoint& x) {
  x.u = j.at("u").get<std::vector<double>>();
  x.theta = j.at("theta").get<std::vector<double>>();
  x.t.clear();
  for (const auto& e : j.value("t", nlohmann::json::array()))
    x.t.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
}

} // namespace wp

#endif
