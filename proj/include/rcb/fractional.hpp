#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Core>

#include "rcb/error.hpp"
#include "rcb/model.hpp"

namespace rcb {

/// Fractional operator of order rho modified by the constant a.
struct FracOpConfig {
  double rho = 0.5;
  double a = 1.0;
};

void validate(const FracOpConfig& cfg);

/// f(s) ~ coefficient * s^power as s -> 0+. Without a coefficient the power law is
/// pinned to f(t_1). The remainder f - coefficient * s^power is held constant on the
/// first cell unless remainder_power q is given, in which case it is fitted as
/// r(0) + B s^q through t_1 and t_2.
struct LeadingTerm {
  LeadingTerm(double p) : power(p) {}  // NOLINT(google-explicit-constructor)
  LeadingTerm(double p, double coef) : power(p), coefficient(coef) {}
  LeadingTerm(double p, double coef, double q) : power(p), coefficient(coef), remainder_power(q) {}
  double power;
  std::optional<double> coefficient;
  std::optional<double> remainder_power;
};

namespace detail {

/// Product-integration weights of (1/Gamma(rho)) int (t_k - s)^(rho-1) f(s) ds for
/// piecewise-linear f: a cell at distance m (kernel variable in [(m-1)h, mh])
/// contributes near[m] * f(right node) + far[m] * f(left node).
struct RlWeights {
  Eigen::VectorXd near;
  Eigen::VectorXd far;
};

RlWeights rl_weights(const TimeGrid& grid, double rho);

/// (1/Gamma(rho)) int_0^{t_1} (t_k - s)^(rho-1) (s/t_1)^q ds for every k.
Eigen::VectorXd rl_first_cell(const TimeGrid& grid, double rho, double q);

}  // namespace detail

/// Riemann-Liouville integral (1/Gamma(rho)) int_0^t (t-s)^(rho-1) f(s) ds at every node,
/// f piecewise linear between nodes. With a leading term the pure power is
/// integrated exactly and only the remainder (held constant on the first cell) is
/// interpolated; f(0) is then never read.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> rl_integral(
    const TimeGrid& grid, const Eigen::MatrixBase<Derived>& f, double rho,
    std::optional<LeadingTerm> lead_term = std::nullopt) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = static_cast<Eigen::Index>(grid.n_steps());
  if (f.size() != n + 1) throw Error(ErrorCode::GridMismatch, "function length does not match grid");
  if (lead_term && !(lead_term->power > -1.0))
    throw Error(ErrorCode::DomainError, "leading power must exceed -1");
  const detail::RlWeights w = detail::rl_weights(grid, rho);
  const double h = grid.step();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r = f;
  // lead is the coefficient of (s/h)^p.
  Scalar lead = Scalar(0);
  double p = 0.0;
  if (lead_term) {
    p = lead_term->power;
    lead = lead_term->coefficient ? Scalar(*lead_term->coefficient * std::pow(h, p)) : Scalar(f[1]);
    for (Eigen::Index k = 1; k <= n; ++k) r[k] -= lead * std::pow(static_cast<double>(k), p);
    r[0] = r[1];
  }
  const double exact = lead_term ? std::exp(std::lgamma(p + 1.0) - std::lgamma(p + 1.0 + rho)) : 0.0;
  const bool curved = lead_term && lead_term->remainder_power && n >= 2;
  Eigen::VectorXd first;
  Scalar bend = Scalar(0);
  if (curved) {
    const double q = *lead_term->remainder_power;
    first = detail::rl_first_cell(grid, rho, q);
    bend = (r[2] - r[1]) / (std::pow(2.0, q) - 1.0);
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n + 1);
  out[0] = Scalar(0);
  for (Eigen::Index k = 1; k <= n; ++k) {
    Scalar acc = w.far[k] * r[0] + w.near[k] * r[1];
    if (curved) acc += bend * (first[k] - w.far[k] - w.near[k]);
    for (Eigen::Index j = 1; j < k; ++j) acc += w.far[k - j] * r[j] + w.near[k - j] * r[j + 1];
    if (lead_term) acc += lead * (exact * std::pow(h, -p) * std::pow(grid[k], p + rho));
    out[k] = acc;
  }
  return out;
}

/// I_a^rho f = (1/a) RL^rho f.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> frac_integral(
    const TimeGrid& grid, const Eigen::MatrixBase<Derived>& f, const FracOpConfig& cfg,
    std::optional<LeadingTerm> lead_term = std::nullopt) {
  validate(cfg);
  return rl_integral(grid, f, cfg.rho, lead_term) / cfg.a;
}

template <typename Scalar>
struct FracDerivative {
  /// Undefined (NaN) at t = 0.
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
  /// Set when 1 - rho is so small that the inner integral is nearly the identity
  /// and the difference quotient amplifies round-off.
  bool loss_of_accuracy = false;
};

/// Differentiate node values by central differences (one-sided second order at t_max).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> grid_derivative(
    const TimeGrid& grid, const Eigen::MatrixBase<Derived>& j) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = static_cast<Eigen::Index>(grid.n_steps());
  const double h = grid.step();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d(n + 1);
  d[0] = Scalar(std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index k = 1; k < n; ++k) d[k] = (j[k + 1] - j[k - 1]) / (2.0 * h);
  d[n] = (3.0 * j[n] - 4.0 * j[n - 1] + j[n - 2]) / (2.0 * h);
  return d;
}

/// D_a^rho f = a d/dt RL^(1-rho) f; for rho = 1 this is a d/dt int_0^t f.
template <typename Derived>
FracDerivative<typename Derived::Scalar> frac_derivative(
    const TimeGrid& grid, const Eigen::MatrixBase<Derived>& f, const FracOpConfig& cfg,
    std::optional<LeadingTerm> lead_term = std::nullopt) {
  validate(cfg);
  const double order = cfg.rho == 1.0 ? 1.0 : 1.0 - cfg.rho;
  FracDerivative<typename Derived::Scalar> out;
  out.values = cfg.a * grid_derivative(grid, rl_integral(grid, f, order, lead_term));
  out.loss_of_accuracy = cfg.rho < 1.0 && 1.0 - cfg.rho < 0.05;
  return out;
}

struct VolterraSolution;

struct RiccatiResidual {
  double residual_norm = 0.0;
  double initial_gap = 0.0;
};

/// Checks v against D_c^alpha v = -b v + g + V v, weighted by t^(1-alpha) over (t_1, t_max],
/// and the initial condition K*v(0+) = lambda.
RiccatiResidual riccati_residual(const VolterraSolution& sol, const ModelParams& p);

}  // namespace rcb
