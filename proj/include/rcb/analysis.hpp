#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rcb/model.hpp"
#include "rcb/simulate.hpp"
#include "rcb/volterra.hpp"

namespace rcb {

/// |estimate - oracle| <= n_se * SE + allowance.
struct TolerancePolicy {
  double n_se = 3.0;
  double allowance = 0.0;
};

bool within(double estimate, double oracle, double se, const TolerancePolicy& tol);
/// (estimate - oracle) / se; 0 when both the gap and se vanish.
double z_score(double estimate, double oracle, double se);

struct CfEstimate {
  cplx value;
  double se_re = 0.0;
  double se_im = 0.0;
};

/// int_0^T g(T - s) X(s) ds by the trapezoid rule on the path's grid.
cplx g_convolution(const PathSample& path, const GFunction& g);

/// Sample mean of exp{i lambda_im X(T) + g*X(T)} with componentwise SE.
CfEstimate mc_char_fn(const Eigen::VectorXd& x_T, const Eigen::VectorXcd& gx_T, double lambda_im);
CfEstimate mc_char_fn(const Eigen::VectorXd& x_T, double lambda_im);

/// exp{zeta int_0^inf nu_bar(y) (e^{V(T)-V((T-y)^+)} - 1) dy} with V the running
/// integral of v: the law of the rescaled CMJ when the ancestors' residual lives
/// are kept at their macroscopic scale. Its linearisation in V is exp{zeta Kv(T)}.
/// Requires g = 0; T must be a grid node.
cplx ancestral_limit_cf(const VolterraSolution& sol, double T, double zeta);

struct McReport {
  std::size_t n_paths = 0;
  Eigen::VectorXd times;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Eigen::VectorXd se;
  std::vector<CfEstimate> cf;
  std::vector<cplx> cf_oracle;
  Eigen::VectorXd oracle_mean;
  /// Largest |mean - oracle| / SE over the grid.
  double max_mean_z = 0.0;
  bool pass = true;
};

/// Per-time moments over equally gridded paths, summed in the given order.
McReport summarize_paths(const std::vector<PathSample>& paths);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct Roughness {
  double hurst = 0.0;
  double slope = 0.0;
  Eigen::VectorXd log2_qv;  // by fineness level j = 1..J
};

/// log2 of the quadratic variation at scale 2^(J-j) h regressed on j, mapped to
/// H = (1 - slope) / 2. Levels with fewer than min_increments are skipped.
Roughness roughness_exponent(const Eigen::Ref<const Eigen::VectorXd>& path, int min_increments = 8);
/// Average of the per-path estimates; constant paths are skipped.
double roughness_exponent(const std::vector<Eigen::VectorXd>& paths, int min_increments = 8);

struct ResolventRow {
  int n = 0;
  double gamma = 0.0;
  double sup_error = 0.0;
};

/// sup_t |n^(-alpha) int_0^(n t) R(u) du - W0(t)| with R the resolvent of gamma_n times
/// the Pareto tail and W0 the scale function of (alpha, beta, Gamma(1-alpha)).
/// The unscaled clock uses steps of at most max_step.
std::vector<ResolventRow> resolvent_convergence_study(const std::vector<int>& n_list, double beta,
                                                      double alpha, const TimeGrid& grid,
                                                      double max_step = 0.05);

}  // namespace rcb
