#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rcb/model.hpp"
#include "rcb/special.hpp"

namespace rcb {

struct JumpRecord {
  double s = 0.0;
  double y = 0.0;
};

enum class Scheme { SveEuler, CmjPrelimit, CpLocaltime };

const char* to_string(Scheme s);

struct RngContract {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/// One trajectory. For the local-time scheme the grid is a level grid.
struct PathSample {
  TimeGrid grid{1.0, 2};
  Eigen::VectorXd values;
  std::vector<JumpRecord> jumps;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  Scheme scheme = Scheme::SveEuler;
  std::size_t clamp_events = 0;
  std::size_t n_jumps = 0;
};

/// Treatment of marks below the truncation level.
enum class SmallJumps { Drop, Gaussian };

struct SveOptions {
  bool record_jumps = false;
  SmallJumps small_jumps = SmallJumps::Gaussian;
  /// Warn when the dropped small-jump variance exceeds this share of Var X(T).
  double truncation_warning_fraction = 0.1;
  /// Lagrange degree used to aggregate jumps that are at least near_cells old.
  int interp_degree = 4;
  int near_cells = 2;
};

/// Var X(t) from the compensated-integral isometry, by nested adaptive quadrature.
double sve_variance(const ModelParams& p, double zeta, double t);

/// G_eps(u) = int_eps^inf (W(u) - W(u-y)) nu(dy).
double sve_compensator(const ScaleFunction& sf, double eps, double u);

/// Jump-truncated explicit scheme. The grid-dependent tables are built once and
/// shared by every path, so one instance can serve many threads.
class SveSimulator {
 public:
  SveSimulator(const ModelParams& p, double zeta, const TimeGrid& grid, double eps,
               const SveOptions& opts = {});

  PathSample run(const RngContract& rng) const;

  const TimeGrid& grid() const noexcept { return grid_; }
  double eps() const noexcept { return eps_; }
  double predicted_variance() const noexcept { return predicted_var_; }
  /// int_0^eps y^2 nu(dy) * t_max
  double dropped_variance_bound() const noexcept { return dropped_bound_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  /// Cell-averaged compensator, entry d for the cell d steps back.
  const Eigen::VectorXd& compensator() const noexcept { return comp_; }

 private:
  ModelParams p_;
  double zeta_;
  TimeGrid grid_;
  double eps_;
  SveOptions opts_;
  ScaleFunction sf_;
  void build_small_jump_tables();

  double rate_;
  double m2_ = 0.0;
  double resid1_ = 0.0;
  Eigen::VectorXd proj_;
  double predicted_var_ = 0.0;
  double dropped_bound_ = 0.0;
  std::vector<std::string> warnings_;
  Eigen::VectorXd base_;  // zeta (1 - b W(t_m))
  Eigen::VectorXd comp_;  // h * averaged G_eps, by lag
  Eigen::VectorXd nodes_;  // interpolation nodes in [0,1]
  Eigen::VectorXd bary_;   // barycentric weights
  // By lag: W((d - node_i) h) for each node, then -comp_, then proj_.
  Eigen::MatrixXd history_;
};

PathSample simulate_sve(const ModelParams& p, double zeta, const TimeGrid& grid, double eps,
                        const RngContract& rng, const SveOptions& opts = {});

struct CmjOptions {
  std::size_t population_cap = 5'000'000;
};

/// Population Z(t_k) of the CMJ process with k0 ancestors, birth rate gamma and
/// Pareto lifetimes, on the unscaled clock.
Eigen::VectorXd cmj_population(std::size_t k0, double gamma, double alpha, const TimeGrid& grid,
                               const RngContract& rng, const CmjOptions& opts = {});

double cmj_rate(int n, double alpha, double beta);

/// Rescaled prelimit X^(n)(t) = n^-alpha Z(n t) on the grid.
PathSample simulate_cmj(int n, double zeta, double alpha, double beta, const TimeGrid& grid,
                        const RngContract& rng, const CmjOptions& opts = {});

struct CpOptions {
  std::size_t event_cap = 50'000'000;
};

/// Downward passage counts of the slope -1 compound Poisson path, started from
/// the residual-life law and stopped at 0, on the level grid.
PathSample simulate_cp_localtime(double gamma, double alpha, const TimeGrid& levels,
                                 const RngContract& rng, const CpOptions& opts = {});

/// The same counts for an explicit start height and jump list (s_i, y_i), with
/// jump times on the path clock. Jumps after the hit of 0 are ignored.
Eigen::VectorXd cp_passages(double start, const std::vector<JumpRecord>& jumps,
                            const TimeGrid& levels);

}  // namespace rcb
