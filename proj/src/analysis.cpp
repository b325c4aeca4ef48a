#include "rcb/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "rcb/error.hpp"
#include "rcb/measures.hpp"
#include "rcb/quadrature.hpp"
#include "rcb/special.hpp"

namespace rcb {

bool within(double estimate, double oracle, double se, const TolerancePolicy& tol) {
  return std::abs(estimate - oracle) <= tol.n_se * se + tol.allowance;
}

double z_score(double estimate, double oracle, double se) {
  const double gap = estimate - oracle;
  if (se > 0.0) return gap / se;
  if (gap == 0.0) return 0.0;
  return gap > 0.0 ? std::numeric_limits<double>::max() : -std::numeric_limits<double>::max();
}

cplx g_convolution(const PathSample& path, const GFunction& g) {
  if (!g) return 0.0;
  const TimeGrid& grid = path.grid;
  const std::size_t n = grid.n_steps();
  if (static_cast<std::size_t>(path.values.size()) != n + 1)
    throw Error(ErrorCode::GridMismatch, "path length does not match its grid");
  const double T = grid.t_max();
  cplx sum = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    sum += w * g(T - grid[k]) * path.values[static_cast<Eigen::Index>(k)];
  }
  return sum * grid.step();
}

CfEstimate mc_char_fn(const Eigen::VectorXd& x_T, const Eigen::VectorXcd& gx_T, double lambda_im) {
  const Eigen::Index n = x_T.size();
  if (gx_T.size() != 0 && gx_T.size() != n)
    throw Error(ErrorCode::GridMismatch, "g*X samples do not match X(T) samples");
  if (n == 0) throw Error(ErrorCode::EmptySample, "no paths");
  double sr = 0.0, si = 0.0, qr = 0.0, qi = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx e = std::exp(cplx(0.0, lambda_im * x_T[i]) + (gx_T.size() ? gx_T[i] : cplx(0.0)));
    sr += e.real();
    si += e.imag();
    qr += e.real() * e.real();
    qi += e.imag() * e.imag();
  }
  const double dn = static_cast<double>(n);
  const double mr = sr / dn, mi = si / dn;
  CfEstimate out{cplx(mr, mi), 0.0, 0.0};
  if (n > 1) {
    out.se_re = std::sqrt(std::max(0.0, (qr - dn * mr * mr) / (dn - 1.0)) / dn);
    out.se_im = std::sqrt(std::max(0.0, (qi - dn * mi * mi) / (dn - 1.0)) / dn);
  }
  return out;
}

CfEstimate mc_char_fn(const Eigen::VectorXd& x_T, double lambda_im) {
  return mc_char_fn(x_T, Eigen::VectorXcd(), lambda_im);
}

cplx ancestral_limit_cf(const VolterraSolution& sol, double T, double zeta) {
  const TimeGrid& grid = sol.grid;
  const double h = grid.step();
  const auto m = static_cast<Eigen::Index>(std::llround(T / h));
  if (m < 1 || m > static_cast<Eigen::Index>(grid.n_steps()) || std::abs(m * h - T) > 1e-9 * T)
    throw Error(ErrorCode::GridMismatch, "T is not a grid node");
  if (sol.g_cells.size() && (sol.g_cells.array() != cplx(0.0)).any())
    throw Error(ErrorCode::DomainError, "ancestral limit needs g = 0");
  const ModelParams& p = sol.params;
  const double alpha = p.alpha;
  const Eigen::VectorXcd& V = sol.V_cum;
  auto V_at = [&](double t) -> cplx {
    if (t <= 0.0) return 0.0;
    if (t < h) return V[1] * std::pow(t / h, alpha);
    const double x = t / h;
    const auto k = std::min(static_cast<Eigen::Index>(x), m - 1);
    const double f = x - static_cast<double>(k);
    return (1.0 - f) * V[k] + f * V[k + 1];
  };
  const cplx VT = V[m];
  auto body = [&](double y) { return nu_tail(y, p) * (std::exp(VT - V_at(T - y)) - 1.0); };
  // y < h: I(y) = y s to second order.
  const cplx s = (VT - V[m - 1]) / h;
  const double a = nu_tail(1.0, p);
  cplx total = a * (s * std::pow(h, 1.0 - alpha) / (1.0 - alpha) +
                    s * s * std::pow(h, 2.0 - alpha) / (2.0 * (2.0 - alpha)));
  if (m > 1) {
    const auto re = quad::adaptive([&](double y) { return body(y).real(); }, h, T, 1e-10, 1e-9);
    const auto im = quad::adaptive([&](double y) { return body(y).imag(); }, h, T, 1e-10, 1e-9);
    total += cplx(re.value, im.value);
  }
  total += kernel_K(T, p) * (std::exp(VT) - 1.0);
  return std::exp(zeta * total);
}

McReport summarize_paths(const std::vector<PathSample>& paths) {
  if (paths.empty()) throw Error(ErrorCode::EmptySample, "no paths");
  const Eigen::Index m = paths.front().values.size();
  McReport r;
  r.n_paths = paths.size();
  r.times = paths.front().grid.nodes();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(m), q = Eigen::VectorXd::Zero(m);
  for (const PathSample& p : paths) {
    if (p.values.size() != m) throw Error(ErrorCode::GridMismatch, "paths on different grids");
    s += p.values;
    q += p.values.cwiseAbs2();
  }
  const double n = static_cast<double>(paths.size());
  r.mean = s / n;
  r.variance = Eigen::VectorXd::Zero(m);
  if (paths.size() > 1)
    r.variance = ((q - n * r.mean.cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0);
  r.se = (r.variance / n).cwiseSqrt();
  return r;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySample, "KS distance needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

Roughness roughness_exponent(const Eigen::Ref<const Eigen::VectorXd>& path, int min_increments) {
  const Eigen::Index len = path.size();
  if (len < 3 || ((len - 1) & (len - 2)) != 0)
    throw Error(ErrorCode::InvalidGrid, "path length must be 2^J + 1");
  int J = 0;
  while ((Eigen::Index{1} << J) < len - 1) ++J;
  if ((path.array() == path[0]).all()) throw Error(ErrorCode::DegeneratePath, "constant path");

  Roughness r;
  r.log2_qv = Eigen::VectorXd::Constant(J, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> js, ys;
  for (int j = 1; j <= J; ++j) {
    const Eigen::Index stride = Eigen::Index{1} << (J - j);
    if ((Eigen::Index{1} << j) < min_increments) continue;
    double qv = 0.0;
    for (Eigen::Index i = 0; i + stride < len; i += stride) {
      const double d = path[i + stride] - path[i];
      qv += d * d;
    }
    if (!(qv > 0.0)) continue;
    r.log2_qv[j - 1] = std::log2(qv);
    js.push_back(j);
    ys.push_back(std::log2(qv));
  }
  if (js.size() < 2) throw Error(ErrorCode::DegeneratePath, "too few nonzero scales");
  const double n = static_cast<double>(js.size());
  double mj = 0.0, my = 0.0;
  for (std::size_t i = 0; i < js.size(); ++i) {
    mj += js[i] / n;
    my += ys[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < js.size(); ++i) {
    sxy += (js[i] - mj) * (ys[i] - my);
    sxx += (js[i] - mj) * (js[i] - mj);
  }
  r.slope = sxy / sxx;
  r.hurst = 0.5 * (1.0 - r.slope);
  return r;
}

double roughness_exponent(const std::vector<Eigen::VectorXd>& paths, int min_increments) {
  double sum = 0.0;
  std::size_t used = 0;
  for (const Eigen::VectorXd& p : paths) {
    try {
      sum += roughness_exponent(p, min_increments).hurst;
      ++used;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegeneratePath) throw;
    }
  }
  if (used == 0) throw Error(ErrorCode::DegeneratePath, "every path is constant");
  return sum / static_cast<double>(used);
}

std::vector<ResolventRow> resolvent_convergence_study(const std::vector<int>& n_list, double beta,
                                                      double alpha, const TimeGrid& grid,
                                                      double max_step) {
  if (!(max_step > 0.0)) throw Error(ErrorCode::DomainError, "max_step must be positive");
  const ScaleFunction w0(canonical_params(alpha, beta));
  std::vector<ResolventRow> rows;
  for (int n : n_list) {
    const double gamma = cmj_rate(n, alpha, beta);
    const double dn = static_cast<double>(n);
    // Refine each output cell so the unscaled step is at most max_step.
    const auto sub = static_cast<std::size_t>(std::ceil(dn * grid.step() / max_step));
    const TimeGrid clock(dn * grid.t_max(), grid.n_steps() * sub);
    const Eigen::VectorXd R = resolvent_solve(gamma, alpha, clock);
    const double h = clock.step(), scale = std::pow(dn, -alpha);
    double integral = 0.0, sup = 0.0;
    for (std::size_t k = 1; k < clock.size(); ++k) {
      integral += 0.5 * h * (R[k - 1] + R[k]);
      if (k % sub == 0) sup = std::max(sup, std::abs(scale * integral - w0.W(grid[k / sub])));
    }
    rows.push_back({n, gamma, sup});
  }
  return rows;
}

}  // namespace rcb
