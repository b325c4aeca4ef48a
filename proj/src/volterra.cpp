#include "rcb/volterra.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rcb/error.hpp"
#include "rcb/fractional.hpp"
#include "rcb/measures.hpp"
#include "rcb/quadrature.hpp"

namespace rcb {
namespace {

// Gauss-Legendre in log y over (y_min, t); weights include the Levy density.
struct MarkRule {
  Eigen::VectorXd y;
  Eigen::VectorXd w;
};

MarkRule mark_rule(double t, double y_min, const LevyMeasure& nu, const QuadConfig& q) {
  MarkRule r;
  if (!(t > y_min)) return r;
  const quad::Rule& gl = quad::gauss_legendre_cached(q.y_nodes);
  const double lo = std::log(y_min);
  const double span = std::log(t) - lo;
  r.y.resize(q.y_nodes);
  r.w.resize(q.y_nodes);
  for (int i = 0; i < q.y_nodes; ++i) {
    const double y = std::exp(lo + span * gl.nodes[i]);
    r.y[i] = y;
    r.w[i] = gl.weights[i] * span * y * nu.density(y);
  }
  return r;
}

// P(t) = int_0^t s^(alpha-1) W'(t-s) ds = Gamma(alpha) t^(2 alpha - 1) E_{alpha,2 alpha}(-x) / c
// with x = (b/c) t^alpha; uses L_K - W' = b (L_K * W') once x is not small.
double power_conv_Wp(double t, const ScaleFunction& sf) {
  const ModelParams& p = sf.params();
  const double x = p.b / p.c * std::pow(t, p.alpha);
  if (x > 0.1) return std::tgamma(p.alpha) * p.c * (sf.LK(t) - sf.Wp(t)) / p.b;
  double sum = 0.0, xk = 1.0;
  for (int k = 0; k < 40; ++k) {
    const double term = xk * rgamma(p.alpha * (k + 2.0));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    xk *= -x;
  }
  return std::tgamma(p.alpha) * std::pow(t, 2.0 * p.alpha - 1.0) / p.c * sum;
}

// int_0^ym y^3 nu(dy)
double third_moment(const LevyMeasure& nu, double alpha, double ym) {
  return nu.normalizer() * std::pow(ym, 2.0 - alpha) / (2.0 - alpha);
}

// Marks below y_min: I(t,y) = y f(t) - y^2 f'(t)/2 + ..., and e^I - 1 - I = I^2/2 + I^3/6 + ...
cplx small_mark_cap(cplx f, cplx f_slope, double m2, double m3) {
  return 0.5 * f * f * m2 + (f * f * f / 6.0 - 0.5 * f * f_slope) * m3;
}

cplx finite_or_throw(cplx z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw Error(ErrorCode::QuadratureFailure, "non-finite value in the mark integral");
  return z;
}

}  // namespace

ConvWeights conv_weights(const TimeGrid& grid, const ModelParams& p) {
  validate(p);
  const ScaleFunction sf(p);
  const Eigen::Index n = static_cast<Eigen::Index>(grid.n_steps());
  ConvWeights cw{grid, Eigen::VectorXd::Zero(n + 1)};
  double prev = 0.0;
  for (Eigen::Index m = 1; m <= n; ++m) {
    const double cur = sf.W(static_cast<double>(m) * grid.step());
    cw.increments[m] = cur - prev;
    prev = cur;
  }
  return cw;
}

void validate(const QuadConfig& q) {
  if (q.y_nodes < 16) throw Error(ErrorCode::DomainError, "y_nodes must be at least 16");
  if (!(q.y_min_factor > 0.0)) throw Error(ErrorCode::DomainError, "y_min_factor must be positive");
  if (!(q.picard_tol > 0.0)) throw Error(ErrorCode::DomainError, "picard_tol must be positive");
  if (q.picard_max_iter < 1) throw Error(ErrorCode::DomainError, "picard_max_iter must be positive");
}

double pareto_tail(double alpha, double t) { return std::pow(1.0 + t, -alpha - 1.0); }

Eigen::VectorXd resolvent_solve(double gamma, double alpha, const TimeGrid& grid) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::AlphaOutOfRange, "alpha not in (0,1)");
  if (!(gamma > 0.0 && gamma <= alpha))
    throw Error(ErrorCode::DomainError, "resolvent rate must lie in (0, alpha]");
  const Eigen::Index n = static_cast<Eigen::Index>(grid.n_steps());
  const double h = grid.step();
  const double diag = 1.0 - 0.5 * gamma * h;
  if (!(diag > 0.0)) throw Error(ErrorCode::SingularStep, "step too large for the trapezoid resolvent");
  Eigen::VectorXd lbar(n + 1);
  for (Eigen::Index m = 0; m <= n; ++m) lbar[m] = pareto_tail(alpha, static_cast<double>(m) * h);
  Eigen::VectorXd r(n + 1);
  r[0] = gamma;
  for (Eigen::Index k = 1; k <= n; ++k) {
    double conv = 0.5 * lbar[k] * r[0];
    for (Eigen::Index j = 1; j < k; ++j) conv += lbar[k - j] * r[j];
    r[k] = gamma * (lbar[k] + h * conv) / diag;
  }
  return r;
}

Eigen::VectorXd resolvent_solve_kernel(const std::function<double(double)>& kernel,
                                       const std::function<double(double)>& primitive,
                                       const TimeGrid& grid) {
  const Eigen::Index n = static_cast<Eigen::Index>(grid.n_steps());
  const double h = grid.step();
  Eigen::VectorXd inc(n + 1);
  inc[0] = 0.0;
  double prev = 0.0;
  for (Eigen::Index m = 1; m <= n; ++m) {
    const double cur = primitive(static_cast<double>(m) * h);
    inc[m] = cur - prev;
    prev = cur;
  }
  const double diag = 1.0 + inc[1];
  if (!(diag > 0.0)) throw Error(ErrorCode::SingularStep, "kernel mass on the first cell too negative");
  Eigen::VectorXd r(n + 1);
  r[0] = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index k = 1; k <= n; ++k) {
    double conv = 0.0;
    for (Eigen::Index j = 1; j < k; ++j) conv += inc[k - j + 1] * r[j];
    r[k] = (kernel(grid[k]) - conv) / diag;
  }
  return r;
}

cplx exp_remainder(cplx z) {
  if (std::abs(z) < 0.1) {
    cplx term = z * z / 2.0;
    cplx sum = term;
    for (int k = 3; k <= 12; ++k) {
      term *= z / static_cast<double>(k);
      sum += term;
    }
    return sum;
  }
  return std::exp(z) - 1.0 - z;
}

cplx v_alpha_apply(const std::function<cplx(double)>& cum, cplx f_t, double t, double y_min,
                   const ModelParams& p, const QuadConfig& q, cplx f_slope) {
  validate(p);
  validate(q);
  if (!(t > 0.0) || !(y_min > 0.0)) throw Error(ErrorCode::DomainError, "need t > 0 and y_min > 0");
  const LevyMeasure nu(p);
  const cplx top = cum(t);
  const MarkRule rule = mark_rule(t, y_min, nu, q);
  cplx acc = exp_remainder(top - cum(0.0)) * nu.tail(t);
  for (Eigen::Index i = 0; i < rule.y.size(); ++i)
    acc += rule.w[i] * exp_remainder(top - cum(t - rule.y[i]));
  const double ym = std::min(y_min, t);
  acc += small_mark_cap(f_t, f_slope, nu.small_jump_second_moment(ym), third_moment(nu, p.alpha, ym));
  return finite_or_throw(acc);
}

VolterraSolution solve_v(cplx lambda, const GFunction& g, const TimeGrid& grid, const ModelParams& p,
                         const QuadConfig& q) {
  validate(p);
  validate(q);
  if (lambda.real() > 0.0) throw Error(ErrorCode::DomainError, "lambda must have Re <= 0");
  const Eigen::Index n = static_cast<Eigen::Index>(grid.n_steps());
  const double h = grid.step();
  const double y_min = q.y_min_factor * h;
  const ScaleFunction sf(p);
  const LevyMeasure nu(p);
  const ConvWeights cw = conv_weights(grid, p);
  const double small_moment = nu.small_jump_second_moment(y_min);
  const double small_third = third_moment(nu, p.alpha, y_min);

  VolterraSolution s{grid, p, lambda, {}, {}, {}, 0.0, {}, {}, {}, {}, 0};
  s.g_cells.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    s.g_cells[j] = g ? g(grid[j] + 0.5 * h) : cplx(0.0);
    if (s.g_cells[j].real() > 0.0) throw Error(ErrorCode::DomainError, "g must have Re <= 0");
  }
  Eigen::VectorXd W(n + 1), Wp(n + 1);
  W[0] = 0.0;
  Wp[0] = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index k = 1; k <= n; ++k) {
    W[k] = sf.W(grid[k]);
    Wp[k] = sf.Wp(grid[k]);
  }

  // Near 0, V v ~ t^(alpha-1) and u ~ t^(2 alpha - 1) (or t^alpha when lambda = 0);
  // the first cell is integrated against these powers instead of linearly.
  const double u_power = lambda == cplx(0.0) ? p.alpha : 2.0 * p.alpha - 1.0;
  s.u_power = u_power;
  // V v = C s^(alpha-1) + r(s): the power part is convolved with W' exactly and
  // only the remainder r (zero on the first cell) is averaged per cell.
  Eigen::VectorXd P(n + 1), pw(n + 1);
  P[0] = 0.0;
  pw[0] = 0.0;
  for (Eigen::Index k = 1; k <= n; ++k) {
    P[k] = power_conv_Wp(grid[k], sf);
    pw[k] = std::pow(static_cast<double>(k), p.alpha - 1.0);
  }
  cplx lead = 0.0;

  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(n + 1);
  Eigen::VectorXcd U = Eigen::VectorXcd::Zero(n + 1);
  Eigen::VectorXcd Vv = Eigen::VectorXcd::Zero(n + 1);
  Eigen::VectorXcd Fbar = Eigen::VectorXcd::Zero(n);
  const bool trivial = lambda == cplx(0.0) && s.g_cells.isZero(0.0);
  auto cumulative = [&](Eigen::Index k, cplx uk) {
    return k == 1 ? h * uk / (u_power + 1.0) : U[k - 1] + 0.5 * h * (u[k - 1] + uk);
  };

  for (Eigen::Index k = 1; k <= n && !trivial; ++k) {
    const double t = grid[k];
    const MarkRule rule = mark_rule(t, y_min, nu, q);
    const Eigen::Index m = rule.y.size();
    // Positions t - y_i split into a grid cell and the exact lambda W part.
    Eigen::VectorXcd lw(m);
    Eigen::VectorXi cell(m);
    Eigen::VectorXd frac(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double x = t - rule.y[i];
      lw[i] = lambda * sf.W(x);
      const Eigen::Index c = std::min<Eigen::Index>(static_cast<Eigen::Index>(x / h), k - 1);
      cell[i] = static_cast<int>(c);
      frac[i] = x / h - static_cast<double>(c);
      if (c == 0) frac[i] = std::pow(frac[i], u_power + 1.0);
    }
    const double tail = nu.tail(t);
    cplx base = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) base += s.g_cells[j] * cw.increments[k - j];
    for (Eigen::Index j = 1; j + 1 < k; ++j) base += Fbar[j] * cw.increments[k - j];
    if (k >= 2) base += lead * P[k];

    cplx uk = k >= 2 ? u[k - 1] : cplx(0.0);
    bool converged = false;
    int it = 0;
    while (it < q.picard_max_iter) {
      ++it;
      U[k] = cumulative(k, uk);
      const cplx top = lambda * W[k] + U[k];
      const cplx vk = lambda * Wp[k] + uk;
      // v ~ t^(alpha-1) sets the slope used below y_min.
      cplx acc = exp_remainder(top) * tail +
                 small_mark_cap(vk, (p.alpha - 1.0) * vk / t, small_moment, small_third);
      for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index c = cell[i];
        const cplx cum = lw[i] + U[c] + frac[i] * (U[c + 1] - U[c]);
        acc += rule.w[i] * exp_remainder(top - cum);
      }
      Vv[k] = finite_or_throw(acc);
      cplx next = base;
      if (k == 1) {
        lead = Vv[1] * std::pow(h, 1.0 - p.alpha);
        next += lead * P[1];
      } else {
        Fbar[k - 1] = 0.5 * (Vv[k - 1] - Vv[1] * pw[k - 1] + Vv[k] - Vv[1] * pw[k]);
        next += Fbar[k - 1] * cw.increments[1];
      }
      const double diff = std::abs(next - uk);
      uk = next;
      if (!std::isfinite(diff)) break;
      if (diff <= q.picard_tol * std::max(1.0, std::abs(uk))) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream msg;
      msg << "Picard iteration failed at t=" << t << " after " << it << " iterations";
      throw Error(ErrorCode::PicardDivergence, msg.str());
    }
    u[k] = uk;
    U[k] = cumulative(k, uk);
    s.max_picard_iterations = std::max(s.max_picard_iterations, it);
  }
  u[0] = std::numeric_limits<double>::quiet_NaN();

  s.v.resize(n + 1);
  s.V_cum.resize(n + 1);
  s.v[0] = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
  s.V_cum[0] = 0.0;
  for (Eigen::Index k = 1; k <= n; ++k) {
    s.v[k] = lambda * Wp[k] + u[k];
    s.V_cum[k] = lambda * W[k] + U[k];
  }
  s.u = u;
  s.Vv = Vv;
  const Eigen::VectorXcd ku = p.c * rl_integral(grid, u, 1.0 - p.alpha, u_power);
  s.Kv.resize(n + 1);
  for (Eigen::Index k = 1; k <= n; ++k) s.Kv[k] = lambda * (1.0 - p.b * W[k]) + ku[k];
  s.Kv[0] = lambda;
  s.Kv0_extrapolated = n >= 2 ? extrapolate_origin(grid, s.Kv, p.alpha) : lambda;
  return s;
}

cplx extrapolate_origin(const TimeGrid& grid, const Eigen::VectorXcd& x, double alpha) {
  const double a1 = std::pow(grid[1], alpha);
  const double a2 = std::pow(grid[2], alpha);
  return (x[1] * a2 - x[2] * a1) / (a2 - a1);
}

cplx characteristic_functional(const VolterraSolution& sol, double T, const InitialState& init) {
  validate(init);
  const double h = sol.grid.step();
  const double kf = std::round(T / h);
  if (kf < 0.0 || kf > static_cast<double>(sol.grid.n_steps()) ||
      std::abs(kf * h - T) > 1e-9 * std::max(1.0, T))
    throw Error(ErrorCode::GridMismatch, "T is not a grid node");
  const cplx kv = sol.Kv[static_cast<Eigen::Index>(kf)];
  if (const auto* f = std::get_if<FixedInitial>(&init)) return std::exp(f->zeta * kv);
  const double m = std::get<ExponentialInitial>(init).mean;
  const cplx den = 1.0 - m * kv;
  if (std::abs(den) == 0.0) throw Error(ErrorCode::PoleError, "exponential mixture has a pole at this lambda");
  return 1.0 / den;
}

}  // namespace rcb
