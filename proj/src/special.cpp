#include "rcb/special.hpp"

#include <cmath>
#include <numbers>

#include "rcb/error.hpp"
#include "rcb/quadrature.hpp"

namespace rcb {
namespace {

bool same(double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(b)); }

double term_magnitude(double log_abs_x, int k, double arg) {
  // |x|^k / Gamma(arg) without overflow.
  if (arg < 170.0) return std::exp(k * log_abs_x) / std::tgamma(arg);
  return std::exp(k * log_abs_x - std::lgamma(arg));
}

double ml_series(double alpha, double beta, double x, const MlConfig& cfg) {
  // Kahan-compensated; terms alternate in sign for x < 0.
  const double log_abs_x = std::log(std::abs(x));
  double sum = rgamma(beta);
  double comp = 0.0;
  double prev = std::abs(sum);
  for (int k = 1; k <= cfg.series_terms_max; ++k) {
    double term = term_magnitude(log_abs_x, k, alpha * k + beta);
    const bool decreasing = term <= prev;
    prev = term;
    if (k % 2 == 1) term = -term;
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    if (decreasing && std::abs(term) <= 1e-17 * std::abs(sum)) return sum;
  }
  throw Error(ErrorCode::ConvergenceFailure, "Mittag-Leffler series did not converge");
}

// -sum_{k>=1} x^-k / Gamma(beta - alpha k), truncated at the smallest term.
bool ml_asymptotic(double alpha, double beta, double x, const MlConfig& cfg, double& out) {
  double sum = 0.0;
  double xk = 1.0;
  double last = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= cfg.asymptotic_terms; ++k) {
    xk /= x;
    const double r = rgamma(beta - alpha * k);
    const double term = -xk * r;
    const double mag = std::abs(term);
    if (r != 0.0 && mag > last) break;
    sum += term;
    if (r != 0.0) last = mag;
    if (r != 0.0 && mag <= cfg.tolerance * std::abs(sum)) {
      out = sum;
      return true;
    }
  }
  return false;
}

// E_alpha(-s^alpha) and -d/ds E_alpha(-s^alpha) by the real-line Laplace
// representation, with the substitution r = rho^(1/alpha) that removes the
// r^(alpha-1) endpoint singularity.
double ml_integral(double alpha, double s, bool derivative, double tol) {
  const double theta = alpha * std::numbers::pi;
  const double pref = std::sin(theta) / theta;
  const double cth = std::cos(theta);
  const double inv_alpha = 1.0 / alpha;
  const double rho_max = std::pow(60.0 / s, alpha);
  auto f = [&](double rho) {
    const double r = std::pow(rho, inv_alpha);
    const double base = std::exp(-s * r) / (rho * rho + 2.0 * rho * cth + 1.0);
    return derivative ? r * base : base;
  };
  double total = 0.0;
  // The denominator peaks near rho = 1 as alpha -> 1.
  const double split = std::min(1.0, rho_max);
  for (auto [a, b] : {std::pair{0.0, split}, std::pair{split, rho_max}}) {
    if (b <= a) continue;
    const quad::Result r = quad::adaptive(f, a, b, 0.0, tol, 2000);
    if (!r.converged && r.error > 1e3 * tol * std::abs(r.value))
      throw Error(ErrorCode::ConvergenceFailure, "Mittag-Leffler integral did not converge");
    total += r.value;
  }
  return pref * total;
}

}  // namespace

void validate(const MlConfig& cfg) {
  if (cfg.series_terms_max < 20)
    throw Error(ErrorCode::DomainError, "series_terms_max must be >= 20");
  if (cfg.asymptotic_terms < 2) throw Error(ErrorCode::DomainError, "asymptotic_terms must be >= 2");
  if (!(cfg.tolerance > 0.0)) throw Error(ErrorCode::DomainError, "tolerance must be positive");
}

double rgamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) return 0.0;
  if (x > 170.0) return std::exp(-std::lgamma(x));
  return 1.0 / std::tgamma(x);
}

double mittag_leffler(double alpha, double beta, double x, const MlConfig& cfg) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::AlphaOutOfRange, "Mittag-Leffler index must lie in (0,1)");
  if (!(same(beta, alpha) || same(beta, alpha + 1.0) || same(beta, 1.0)))
    throw Error(ErrorCode::DomainError, "second index must be alpha, alpha+1 or 1");
  if (!(x <= 0.0)) throw Error(ErrorCode::DomainError, "argument must be <= 0");
  if (x == 0.0) return rgamma(beta);

  const double mag = -x;
  const double radius = cfg.switch_radius > 0.0 ? cfg.switch_radius : std::pow(6.0, alpha);
  if (mag <= radius) return ml_series(alpha, beta, x, cfg);

  const double s = std::pow(mag, 1.0 / alpha);
  if (s >= cfg.asymptotic_scaled_radius) {
    double out = 0.0;
    if (ml_asymptotic(alpha, beta, x, cfg, out)) return out;
  }
  if (same(beta, 1.0)) return ml_integral(alpha, s, false, cfg.tolerance);
  if (same(beta, alpha)) return std::pow(s, 1.0 - alpha) * ml_integral(alpha, s, true, cfg.tolerance);
  return (1.0 - ml_integral(alpha, s, false, cfg.tolerance)) / mag;
}

ScaleFunction::ScaleFunction(const ModelParams& p, const MlConfig& cfg) : p_(p), cfg_(cfg) {
  validate(p_);
  validate(cfg_);
  ratio_ = p_.b / p_.c;
  inv_c_gamma_alpha_ = 1.0 / (p_.c * std::tgamma(p_.alpha));
  inv_c_gamma_alpha1_ = 1.0 / (p_.c * std::tgamma(1.0 + p_.alpha));
  k_coef_ = p_.c / std::tgamma(1.0 - p_.alpha);
  radius_ = cfg_.switch_radius > 0.0 ? cfg_.switch_radius : std::pow(6.0, p_.alpha);
  const int n = std::min(cfg_.series_terms_max, 256) + 1;
  coef_w_.resize(n);
  coef_wp_.resize(n);
  for (int k = 0; k < n; ++k) {
    coef_w_[k] = rgamma(p_.alpha * k + p_.alpha + 1.0);
    coef_wp_[k] = rgamma(p_.alpha * k + p_.alpha);
  }
}

// Power series with tabulated 1/Gamma; falls back to the general evaluator when
// the table is too short.
double ScaleFunction::series(const std::vector<double>& coef, double beta, double x) const {
  double sum = coef[0], comp = 0.0, xk = 1.0;
  for (std::size_t k = 1; k < coef.size(); ++k) {
    xk *= x;
    const double term = xk * coef[k];
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) return sum;
  }
  return mittag_leffler(p_.alpha, beta, x, cfg_);
}

double ScaleFunction::W(double t) const {
  if (t <= 0.0) return 0.0;
  const double ta = std::pow(t, p_.alpha);
  if (ratio_ == 0.0) return ta * inv_c_gamma_alpha1_;
  const double x = -ratio_ * ta;
  if (-x <= radius_) return ta / p_.c * series(coef_w_, p_.alpha + 1.0, x);
  return ta / p_.c * mittag_leffler(p_.alpha, p_.alpha + 1.0, x, cfg_);
}

double ScaleFunction::Wp_regular(double t) const {
  if (t < 0.0) throw Error(ErrorCode::DomainError, "W' requires t > 0");
  if (ratio_ == 0.0) return inv_c_gamma_alpha_;
  const double x = -ratio_ * std::pow(t, p_.alpha);
  if (-x <= radius_) return series(coef_wp_, p_.alpha, x) / p_.c;
  return mittag_leffler(p_.alpha, p_.alpha, x, cfg_) / p_.c;
}

double ScaleFunction::Wp(double t) const {
  if (!(t > 0.0)) throw Error(ErrorCode::DomainError, "W' is singular at t <= 0");
  return std::pow(t, p_.alpha - 1.0) * Wp_regular(t);
}

double ScaleFunction::K(double t) const {
  if (!(t > 0.0)) throw Error(ErrorCode::DomainError, "K requires t > 0");
  return k_coef_ * std::pow(t, -p_.alpha);
}

double ScaleFunction::LK(double t) const {
  if (!(t > 0.0)) throw Error(ErrorCode::DomainError, "L_K requires t > 0");
  return std::pow(t, p_.alpha - 1.0) * inv_c_gamma_alpha_;
}

double scale_W(double t, const ModelParams& p) {
  if (t < 0.0) throw Error(ErrorCode::DomainError, "W requires t >= 0");
  return ScaleFunction(p).W(t);
}
double scale_Wp(double t, const ModelParams& p) { return ScaleFunction(p).Wp(t); }
double kernel_K(double t, const ModelParams& p) { return ScaleFunction(p).K(t); }
double kernel_LK(double t, const ModelParams& p) { return ScaleFunction(p).LK(t); }

}  // namespace rcb
