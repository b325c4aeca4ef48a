#include "rcb/fractional.hpp"

#include <cmath>
#include <limits>

#include "rcb/quadrature.hpp"
#include "rcb/special.hpp"
#include "rcb/volterra.hpp"

namespace rcb {
namespace {

// m^q - (m-1)^q without cancellation for large m.
double power_step(double m, double q) {
  if (m == 1.0) return 1.0;
  return -std::pow(m, q) * std::expm1(q * std::log1p(-1.0 / m));
}

}  // namespace

void validate(const FracOpConfig& cfg) {
  if (!(cfg.rho > 0.0 && cfg.rho <= 1.0)) throw Error(ErrorCode::DomainError, "rho must lie in (0,1]");
  if (!(cfg.a > 0.0)) throw Error(ErrorCode::DomainError, "modifying constant must be positive");
}

namespace detail {

RlWeights rl_weights(const TimeGrid& grid, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw Error(ErrorCode::DomainError, "rho must lie in (0,1]");
  const Eigen::Index n = static_cast<Eigen::Index>(grid.n_steps());
  const double scale = std::pow(grid.step(), rho) / std::tgamma(rho);
  RlWeights w;
  w.near.setZero(n + 1);
  w.far.setZero(n + 1);
  for (Eigen::Index m = 1; m <= n; ++m) {
    const double md = static_cast<double>(m);
    const double d1 = power_step(md, rho) / rho;
    const double d2 = power_step(md, rho + 1.0) / (rho + 1.0);
    w.far[m] = scale * (d2 - (md - 1.0) * d1);
    w.near[m] = scale * (md * d1 - d2);
  }
  return w;
}

Eigen::VectorXd rl_first_cell(const TimeGrid& grid, double rho, double q) {
  if (!(q > -1.0)) throw Error(ErrorCode::DomainError, "remainder power must exceed -1");
  const Eigen::Index n = static_cast<Eigen::Index>(grid.n_steps());
  const double scale = std::pow(grid.step(), rho) / std::tgamma(rho);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n + 1);
  if (n < 1) return out;
  out[1] = scale * std::exp(std::lgamma(rho) + std::lgamma(q + 1.0) - std::lgamma(rho + q + 1.0));
  const quad::Rule rule = quad::gauss_jacobi(24, 0.0, q);
  for (Eigen::Index k = 2; k <= n; ++k) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i)
      acc += rule.weights[i] * std::pow(static_cast<double>(k) - rule.nodes[i], rho - 1.0);
    out[k] = scale * acc;
  }
  return out;
}

}  // namespace detail

RiccatiResidual riccati_residual(const VolterraSolution& sol, const ModelParams& p) {
  validate(p);
  const TimeGrid& grid = sol.grid;
  const Eigen::Index n = static_cast<Eigen::Index>(grid.n_steps());
  const double h = grid.step();
  // v = lambda W' + u; each part carries its own power law on the first cell.
  const ScaleFunction sf(p);
  Eigen::VectorXd wp(n + 1);
  wp[0] = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index k = 1; k <= n; ++k) wp[k] = sf.Wp(grid[k]);
  const FracOpConfig op{p.alpha, p.c};
  // W' = s^(alpha-1) (A + B s^alpha + ...)
  const LeadingTerm wp_lead(p.alpha - 1.0, 1.0 / (p.c * std::tgamma(p.alpha)), p.alpha);
  const Eigen::VectorXcd d = sol.lambda * frac_derivative(grid, wp, op, wp_lead).values +
                             frac_derivative(grid, sol.u, op, sol.u_power).values;

  RiccatiResidual r;
  for (Eigen::Index k = 2; k <= n; ++k) {
    const cplx res = d[k] + p.b * sol.v[k] - sol.g_cells[k - 1] - sol.Vv[k];
    r.residual_norm += h * std::pow(grid[k], 1.0 - p.alpha) * std::abs(res);
  }
  const Eigen::VectorXcd kv = p.c * (sol.lambda * rl_integral(grid, wp, 1.0 - p.alpha, wp_lead) +
                                     rl_integral(grid, sol.u, 1.0 - p.alpha, sol.u_power));
  r.initial_gap = std::abs(extrapolate_origin(grid, kv, p.alpha) - sol.lambda);
  return r;
}

}  // namespace rcb
