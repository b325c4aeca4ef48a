#pragma once

#include <complex>
#include <functional>

#include <Eigen/Core>

#include "rcb/model.hpp"
#include "rcb/special.hpp"

namespace rcb {

using cplx = std::complex<double>;

/// Convolution weights against W': w[k][j] = W(t_k - t_j) - W(t_k - t_{j+1}).
/// They depend on k - j only and are stored as increments d[m] = W(m h) - W((m-1) h).
struct ConvWeights {
  TimeGrid grid;
  Eigen::VectorXd increments;  // index 1..n, increments[0] = 0

  double operator()(std::size_t k, std::size_t j) const { return increments[k - j]; }
};

ConvWeights conv_weights(const TimeGrid& grid, const ModelParams& p);

/// Mark-integral controls for the nonlinear operator.
struct QuadConfig {
  int y_nodes = 48;
  /// Marks below y_min_factor * h are handled by the second-order expansion.
  double y_min_factor = 0.125;
  double picard_tol = 1e-12;
  int picard_max_iter = 200;
};

void validate(const QuadConfig& q);

/// Pareto tail (1+t)^(-alpha-1).
double pareto_tail(double alpha, double t);

/// R = gamma Lbar + gamma Lbar * R with Lbar(t) = (1+t)^(-alpha-1), trapezoid rule.
Eigen::VectorXd resolvent_solve(double gamma, double alpha, const TimeGrid& grid);

/// R = k - k * R for a kernel k singular at 0 with known primitive; R(t_j) is
/// attached to the cell ending at t_j. Entry 0 is NaN.
Eigen::VectorXd resolvent_solve_kernel(const std::function<double(double)>& kernel,
                                       const std::function<double(double)>& primitive,
                                       const TimeGrid& grid);

/// phi(z) = e^z - 1 - z, accurate for small |z|.
cplx exp_remainder(cplx z);

/// int_0^inf (e^I - 1 - I) nu(dy) with I(y) = cum(t) - cum((t-y)^+), cum the
/// running integral of f. Marks below y_min use I ~ y f(t) - y^2 f'(t)/2 with
/// f_t = f(t) and f_slope = f'(t).
cplx v_alpha_apply(const std::function<cplx(double)>& cum, cplx f_t, double t, double y_min,
                   const ModelParams& p, const QuadConfig& q = {}, cplx f_slope = 0.0);

/// g as a function of time, sampled at cell midpoints by the solver.
/// An empty function stands for g = 0.
using GFunction = std::function<cplx(double)>;

struct VolterraSolution {
  TimeGrid grid;
  ModelParams params;
  cplx lambda;
  /// g at the cell midpoints, index j for (t_j, t_{j+1}).
  Eigen::VectorXcd g_cells;
  /// v(t_k) for k >= 1; v[0] is unused (the solution is singular at 0).
  Eigen::VectorXcd v;
  /// u = (g + V v) * W', so v = lambda W' + u; u[0] is unused.
  Eigen::VectorXcd u;
  /// Power p with u(s) ~ u(t_1)(s/t_1)^p on the first cell.
  double u_power = 0.0;
  /// int_0^{t_k} v, first cell through lambda W exactly.
  Eigen::VectorXcd V_cum;
  /// (V v)(t_k), k >= 1.
  Eigen::VectorXcd Vv;
  /// K*v(t_k); Kv[0] = lambda, the exact limit at 0+.
  Eigen::VectorXcd Kv;
  /// Limit of Kv at 0+ extrapolated from t_1, t_2 (a consistency diagnostic).
  cplx Kv0_extrapolated;
  int max_picard_iterations = 0;
};

VolterraSolution solve_v(cplx lambda, const GFunction& g, const TimeGrid& grid,
                         const ModelParams& p, const QuadConfig& q = {});

/// E exp{lambda X(T) + g*X(T)}: exp{zeta Kv(T)} or, for an exponential initial
/// mass with mean m, 1/(1 - m Kv(T)). T must be a grid node.
cplx characteristic_functional(const VolterraSolution& sol, double T, const InitialState& init);

/// Linear extrapolation of node values 1, 2 to t = 0+ in the variable t^alpha.
cplx extrapolate_origin(const TimeGrid& grid, const Eigen::VectorXcd& x, double alpha);

}  // namespace rcb
