#include "rcb/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <queue>
#include <random>

#include "rcb/error.hpp"
#include "rcb/measures.hpp"
#include "rcb/quadrature.hpp"
#include "rcb/rng.hpp"

namespace rcb {
namespace {

double integrate(const std::function<double(double)>& f, double a, double b, double rel) {
  if (!(b > a)) return 0.0;
  const quad::Result r = quad::adaptive(f, a, b, 1e-300, rel, 4000);
  if (!r.converged && r.error > 1e3 * rel * std::abs(r.value))
    throw Error(ErrorCode::QuadratureFailure, "simulation table quadrature did not converge");
  return r.value;
}

// W(u) - W(u-y) without cancellation for small y.
double increment(const ScaleFunction& sf, double u, double y) {
  if (y < 1e-3 * u) return y * sf.Wp(u - 0.5 * y);
  return sf.W(u) - sf.W(u - y);
}

// int_0^u (W(u) - W(u-y))^2 nu(dy) + W(u)^2 nu((u,inf)); y = u w^(1/(1-alpha)) removes
// the y^-alpha endpoint behaviour.
double isometry_density(const ScaleFunction& sf, const LevyMeasure& nu, double alpha, double u) {
  if (u <= 0.0) return 0.0;
  const double wu = sf.W(u);
  const double k = 1.0 / (1.0 - alpha);
  auto f = [&](double w) {
    if (w <= 0.0) return 0.0;
    const double y = u * std::pow(w, k);
    const double d = increment(sf, u, y);
    return d * d * nu.density(y) * u * k * std::pow(w, k - 1.0);
  };
  return integrate(f, 0.0, 1.0, 1e-10) + wu * wu * nu.tail(u);
}

struct Event {
  double a;
  double w;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Workspace {
  std::vector<std::vector<Event>> cells;
  RowMatrix moments;
  Eigen::VectorXd ell;
  Eigen::VectorXd xi;
  Eigen::VectorXd acc;
  Eigen::VectorXd coef;
};

}  // namespace

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::SveEuler: return "sve_euler";
    case Scheme::CmjPrelimit: return "cmj_prelimit";
    case Scheme::CpLocaltime: return "cp_localtime";
  }
  return "unknown";
}

double sve_variance(const ModelParams& p, double zeta, double t) {
  validate(p);
  if (!(t > 0.0)) return 0.0;
  const ScaleFunction sf(p);
  const LevyMeasure nu(p);
  // u = t v^(1/alpha) flattens the u^(alpha-1) behaviour of the inner density.
  const double k = 1.0 / p.alpha;
  auto f = [&](double v) {
    if (v <= 0.0) return 0.0;
    const double u = t * std::pow(v, k);
    const double mean = 1.0 - p.b * sf.W(t - u);
    return mean * isometry_density(sf, nu, p.alpha, u) * t * k * std::pow(v, k - 1.0);
  };
  return zeta * integrate(f, 0.0, 1.0, 1e-9);
}

double sve_compensator(const ScaleFunction& sf, double eps, double u) {
  if (u <= 0.0) return 0.0;
  const LevyMeasure nu(sf.params());
  const double wu = sf.W(u);
  double g = wu * nu.tail(std::max(eps, u));
  if (u > eps) {
    auto f = [&](double y) { return increment(sf, u, y) * nu.density(y); };
    g += integrate(f, eps, u, 1e-11);
  }
  return g;
}

SveSimulator::SveSimulator(const ModelParams& p, double zeta, const TimeGrid& grid, double eps,
                           const SveOptions& opts)
    : p_(p), zeta_(zeta), grid_(grid), eps_(eps), opts_(opts), sf_(p) {
  if (!(zeta >= 0.0) || !std::isfinite(zeta))
    throw Error(ErrorCode::InvalidInitialState, "initial mass must be >= 0");
  if (!(eps > 0.0)) throw Error(ErrorCode::DomainError, "truncation level must be positive");
  if (opts.interp_degree < 1 || opts.near_cells < 2)
    throw Error(ErrorCode::DomainError, "interp_degree >= 1 and near_cells >= 2 required");
  const LevyMeasure nu(p);
  rate_ = nu.tail(eps);
  const std::size_t n = grid.n_steps();
  const double h = grid.step();

  base_.resize(static_cast<Eigen::Index>(n + 1));
  for (std::size_t m = 0; m <= n; ++m) base_[m] = zeta * (1.0 - p.b * sf_.W(grid[m]));

  // Cell averages of G_eps; the kink at u = eps gets its own breakpoint.
  comp_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + 1));
  auto g = [&](double u) { return sve_compensator(sf_, eps, u); };
  for (std::size_t d = 1; d <= n; ++d) {
    const double lo = (d - 1) * h, hi = d * h;
    if (eps > lo && eps < hi)
      comp_[d] = integrate(g, lo, eps, 1e-10) + integrate(g, eps, hi, 1e-10);
    else
      comp_[d] = integrate(g, lo, hi, 1e-10);
  }

  const int q = opts.interp_degree;
  nodes_.resize(q + 1);
  bary_.resize(q + 1);
  for (int i = 0; i <= q; ++i) {
    nodes_[i] = 0.5 * (1.0 - std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * (q + 1))));
    bary_[i] = ((i % 2) ? -1.0 : 1.0) * std::sin((2.0 * i + 1.0) * std::numbers::pi / (2.0 * (q + 1)));
  }
  history_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), q + 3);
  for (std::size_t d = static_cast<std::size_t>(opts.near_cells); d <= n; ++d)
    for (int i = 0; i <= q; ++i) history_(d, i) = sf_.W((d - nodes_[i]) * h);
  history_.col(q + 1) = -comp_;

  m2_ = nu.small_jump_second_moment(eps);
  dropped_bound_ = m2_ * grid.t_max();
  if (opts.small_jumps == SmallJumps::Gaussian) build_small_jump_tables();
  if (zeta > 0.0) {
    predicted_var_ = sve_variance(p, zeta, grid.t_max());
    if (dropped_bound_ > opts.truncation_warning_fraction * predicted_var_)
      warnings_.push_back("TruncationTooCoarse: dropped small-jump variance bound " +
                          std::to_string(dropped_bound_) + " exceeds " +
                          std::to_string(opts.truncation_warning_fraction) +
                          " of the predicted variance " + std::to_string(predicted_var_));
  }
}

// Small marks in a cell are replaced by one Gaussian increment with variance
// h X m2(eps). Its effect at lag d is the regression of the compensated
// small-jump contribution on that increment; the unexplained variance at lag 1 is
// added as independent noise.
void SveSimulator::build_small_jump_tables() {
  const std::size_t n = grid_.n_steps();
  const double h = grid_.step();
  const LevyMeasure nu(p_);
  const double k = 1.0 / (1.0 - p_.alpha);
  // int_0^top y^j (W(u) - W(u-y))^r nu(dy), with y = top w^k.
  auto inner = [&](double u, double top, int j, int r) {
    auto f = [&](double w) {
      if (w <= 0.0) return 0.0;
      const double y = top * std::pow(w, k);
      const double d = increment(sf_, u, y);
      return std::pow(y, j) * std::pow(d, r) * nu.density(y) * top * k * std::pow(w, k - 1.0);
    };
    return integrate(f, 0.0, 1.0, 1e-10);
  };
  auto moment = [&](double u, int j, int r) {
    if (u <= 0.0) return 0.0;
    if (u >= eps_) return inner(u, eps_, j, r);
    // For y > u the increment is W(u) itself.
    const double wu = sf_.W(u);
    const double above = j == 1 ? nu.normalizer() * (std::pow(u, -p_.alpha) - std::pow(eps_, -p_.alpha)) / p_.alpha
                                : 0.0;
    return inner(u, u, j, r) + std::pow(wu, r) * above;
  };
  proj_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + 1));
  for (std::size_t d = 1; d <= n; ++d) {
    const double lo = (d - 1) * h, hi = d * h;
    auto f = [&](double u) { return moment(u, 1, 1); };
    double v = (eps_ > lo && eps_ < hi) ? integrate(f, lo, eps_, 1e-9) + integrate(f, eps_, hi, 1e-9)
                                        : integrate(f, lo, hi, 1e-9);
    proj_[d] = v / (h * m2_);
  }
  auto f2 = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double top = std::min(u, eps_);
    const double wu = sf_.W(u);
    double v = inner(u, top, 0, 2);
    if (u < eps_) v += wu * wu * (nu.tail(u) - nu.tail(eps_));
    return v;
  };
  const double lag1 = (eps_ < h ? integrate(f2, 0.0, eps_, 1e-9) + integrate(f2, eps_, h, 1e-9)
                                : integrate(f2, 0.0, h, 1e-9)) / h;
  resid1_ = std::max(0.0, lag1 - proj_[1] * proj_[1] * m2_);
  history_.col(opts_.interp_degree + 2) = proj_;
}

PathSample SveSimulator::run(const RngContract& rng) const {
  const std::size_t n = grid_.n_steps();
  const double h = grid_.step();
  const int q = opts_.interp_degree;
  const std::size_t near = static_cast<std::size_t>(opts_.near_cells);
  const LevyMeasure nu(p_);

  thread_local Workspace ws;
  ws.cells.resize(n);
  for (auto& c : ws.cells) c.clear();
  ws.moments.setZero(static_cast<Eigen::Index>(n), q + 1);
  ws.ell.resize(q + 1);

  PathSample out;
  out.grid = grid_;
  out.seed = rng.seed;
  out.stream_id = rng.stream_id;
  out.scheme = Scheme::SveEuler;
  out.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + 1));
  Eigen::VectorXd& x = out.values;
  x[0] = zeta_;

  Philox gen(rng.seed, rng.stream_id);

  auto add_event = [&](double a, double w) {
    const auto k = static_cast<std::size_t>(a / h);
    if (k >= n) return;
    ws.cells[k].push_back({a, w});
    // Barycentric Lagrange weights at the event's position in its cell.
    const double xi = a / h - static_cast<double>(k);
    double denom = 0.0;
    int hit = -1;
    for (int i = 0; i <= q; ++i) {
      const double diff = xi - nodes_[i];
      if (diff == 0.0) {
        hit = i;
        break;
      }
      ws.ell[i] = bary_[i] / diff;
      denom += ws.ell[i];
    }
    if (hit >= 0) {
      ws.moments(static_cast<Eigen::Index>(k), hit) += w;
      return;
    }
    ws.moments.row(static_cast<Eigen::Index>(k)) += (w / denom) * ws.ell.transpose();
  };

  auto spawn = [&](std::size_t k) {
    const double mean = h * x[k] * rate_;
    if (!(mean > 0.0)) return;
    std::poisson_distribution<long> pois(mean);
    const long count = pois(gen);
    for (long j = 0; j < count; ++j) {
      const double s = grid_[k] + h * gen.uniform();
      const double y = nu.sample_jump(eps_, gen.uniform());
      add_event(s, 1.0);
      add_event(s + y, -1.0);
      if (opts_.record_jumps) out.jumps.push_back({s, y});
      ++out.n_jumps;
    }
  };

  const bool gaussian = opts_.small_jumps == SmallJumps::Gaussian;
  std::normal_distribution<double> normal;
  ws.xi.setZero(static_cast<Eigen::Index>(n + 1));
  auto spawn_small = [&](std::size_t k) {
    if (gaussian && x[k] > 0.0) ws.xi[k] = std::sqrt(h * x[k] * m2_) * normal(gen);
  };

  // Each settled cell pushes its drag, Gaussian term and aggregated far-field
  // jumps onto all later grid values.
  ws.acc.setZero(static_cast<Eigen::Index>(n + 1));
  ws.coef.resize(q + 3);
  auto settle = [&](std::size_t k) {
    const auto len = static_cast<Eigen::Index>(n - k);
    ws.coef.head(q + 1) = ws.moments.row(static_cast<Eigen::Index>(k)).transpose();
    ws.coef[q + 1] = x[k];
    ws.coef[q + 2] = gaussian ? ws.xi[k] : 0.0;
    ws.acc.segment(static_cast<Eigen::Index>(k + 1), len).noalias() += history_.topRows(len + 1).bottomRows(len) * ws.coef;
  };

  spawn(0);
  spawn_small(0);
  settle(0);
  for (std::size_t m = 1; m <= n; ++m) {
    double val = base_[m] + ws.acc[m];
    if (gaussian && x[m - 1] > 0.0) val += std::sqrt(h * x[m - 1] * resid1_) * normal(gen);
    const double tm = grid_[m];
    for (std::size_t k = (m >= near ? m - near + 1 : 0); k < m; ++k)
      for (const Event& e : ws.cells[k]) val += e.w * sf_.W(tm - e.a);
    if (val < 0.0) {
      val = 0.0;
      ++out.clamp_events;
    }
    x[m] = val;
    if (m < n) {
      spawn(m);
      spawn_small(m);
      settle(m);
    }
  }
  if (opts_.record_jumps)
    std::stable_sort(out.jumps.begin(), out.jumps.end(),
                     [](const JumpRecord& a, const JumpRecord& b) { return a.s < b.s; });
  return out;
}

PathSample simulate_sve(const ModelParams& p, double zeta, const TimeGrid& grid, double eps,
                        const RngContract& rng, const SveOptions& opts) {
  return SveSimulator(p, zeta, grid, eps, opts).run(rng);
}

double cmj_rate(int n, double alpha, double beta) {
  if (n < 1) throw Error(ErrorCode::DomainError, "n must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::AlphaOutOfRange, "alpha not in (0,1)");
  if (!(beta >= 0.0)) throw Error(ErrorCode::NegativeDrift, "beta must be >= 0");
  const double gamma = alpha * (1.0 - beta * std::pow(static_cast<double>(n), -alpha));
  if (!(gamma > 0.0))
    throw Error(ErrorCode::SubcriticalRateError,
                "birth rate " + std::to_string(gamma) + " is not positive for n=" + std::to_string(n));
  return gamma;
}

Eigen::VectorXd cmj_population(std::size_t k0, double gamma, double alpha, const TimeGrid& grid,
                               const RngContract& rng, const CmjOptions& opts) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::SubcriticalRateError, "birth rate must be positive");
  const ParetoLaw law(alpha);
  const double horizon = grid.t_max();
  Philox gen(rng.seed, rng.stream_id);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));

  // Individuals outliving the horizon are only counted.
  std::priority_queue<double, std::vector<double>, std::greater<>> deaths;
  std::size_t alive = 0;
  auto add = [&](double death) {
    ++alive;
    if (alive > opts.population_cap)
      throw Error(ErrorCode::MemoryBudgetExceeded,
                  "live population exceeds " + std::to_string(opts.population_cap));
    if (death <= horizon) deaths.push(death);
  };
  for (std::size_t i = 0; i < k0; ++i) add(law.sample_residual_life(gen.uniform()));

  double t = 0.0;
  std::size_t next = 0;  // first grid index not yet recorded
  while (next < grid.size()) {
    if (alive == 0) break;
    const double birth = t - std::log(gen.uniform()) / (gamma * static_cast<double>(alive));
    const double death = deaths.empty() ? std::numeric_limits<double>::infinity() : deaths.top();
    const double te = std::min(birth, death);
    while (next < grid.size() && grid[next] < te) z[static_cast<Eigen::Index>(next++)] = static_cast<double>(alive);
    if (next >= grid.size()) break;
    t = te;
    if (death <= birth) {
      deaths.pop();
      --alive;
    } else {
      add(t + law.sample_lifetime(gen.uniform()));
    }
  }
  return z;
}

PathSample simulate_cmj(int n, double zeta, double alpha, double beta, const TimeGrid& grid,
                        const RngContract& rng, const CmjOptions& opts) {
  const double gamma = cmj_rate(n, alpha, beta);
  if (!(zeta >= 0.0) || !std::isfinite(zeta))
    throw Error(ErrorCode::InvalidInitialState, "initial mass must be >= 0");
  const double scale = std::pow(static_cast<double>(n), alpha);
  const auto k0 = static_cast<std::size_t>(std::floor(zeta * scale * (1.0 + 1e-12)));
  const TimeGrid clock(grid.t_max() * n, grid.n_steps());
  PathSample out;
  out.grid = grid;
  out.seed = rng.seed;
  out.stream_id = rng.stream_id;
  out.scheme = Scheme::CmjPrelimit;
  out.values = cmj_population(k0, gamma, alpha, clock, rng, opts) / scale;
  return out;
}

namespace {

// Adds one downward sweep over [lo, hi) to the passage counts.
void sweep(Eigen::VectorXd& diff, const TimeGrid& levels, double lo, double hi) {
  const double d = levels.step();
  const auto n = static_cast<Eigen::Index>(levels.n_steps());
  const auto first = static_cast<Eigen::Index>(std::ceil(lo / d - 1e-12));
  const auto last = std::min(static_cast<Eigen::Index>(std::ceil(hi / d - 1e-12)) - 1, n);
  if (first > last || first > n) return;
  diff[std::max<Eigen::Index>(first, 0)] += 1.0;
  diff[last + 1] -= 1.0;
}

Eigen::VectorXd cumulate(const Eigen::VectorXd& diff) {
  Eigen::VectorXd out(diff.size() - 1);
  double run = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = run += diff[i];
  return out;
}

}  // namespace

PathSample simulate_cp_localtime(double gamma, double alpha, const TimeGrid& levels,
                                 const RngContract& rng, const CpOptions& opts) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::AlphaOutOfRange, "alpha not in (0,1)");
  if (!(gamma > 0.0) || gamma > alpha)
    throw Error(ErrorCode::DomainError, "jump rate must lie in (0, alpha]");
  const ParetoLaw law(alpha);
  const double top = levels.t_max();
  Philox gen(rng.seed, rng.stream_id);
  Eigen::VectorXd diff = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(levels.size() + 1));
  const auto top_index = static_cast<Eigen::Index>(levels.n_steps());

  // An excursion above the top level ends with exactly one passage through it,
  // since the path only moves down continuously; it is replaced by that passage.
  auto enter = [&](double height) {
    if (height <= top) return height;
    diff[top_index] += 1.0;
    diff[top_index + 1] -= 1.0;
    return top;
  };
  double x = enter(law.sample_residual_life(gen.uniform()));
  for (std::size_t events = 0;; ++events) {
    if (events >= opts.event_cap)
      throw Error(ErrorCode::PathBudgetExceeded,
                  "no hit of 0 within " + std::to_string(opts.event_cap) + " jumps");
    const double wait = -std::log(gen.uniform()) / gamma;
    if (wait >= x) {
      sweep(diff, levels, 0.0, x);
      break;
    }
    sweep(diff, levels, x - wait, x);
    x = enter(x - wait + law.sample_lifetime(gen.uniform()));
  }

  PathSample out;
  out.grid = levels;
  out.seed = rng.seed;
  out.stream_id = rng.stream_id;
  out.scheme = Scheme::CpLocaltime;
  out.values = cumulate(diff);
  return out;
}

Eigen::VectorXd cp_passages(double start, const std::vector<JumpRecord>& jumps,
                            const TimeGrid& levels) {
  if (!(start >= 0.0)) throw Error(ErrorCode::DomainError, "start height must be >= 0");
  Eigen::VectorXd diff = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(levels.size() + 1));
  double x = start, t = 0.0;
  for (const JumpRecord& j : jumps) {
    if (j.s < t) throw Error(ErrorCode::DomainError, "jump times must be nondecreasing");
    if (j.s - t >= x) break;
    sweep(diff, levels, x - (j.s - t), x);
    x = x - (j.s - t) + j.y;
    t = j.s;
  }
  sweep(diff, levels, 0.0, x);
  return cumulate(diff);
}

}  // namespace rcb
