#include "rcb/model.hpp"

#include <cmath>
#include <string>

#include "rcb/error.hpp"

namespace rcb {

TimeGrid::TimeGrid(double t_max, std::size_t n_steps) : t_max_(t_max), n_steps_(n_steps) {
  if (!(t_max > 0.0) || !std::isfinite(t_max))
    throw Error(ErrorCode::InvalidGrid, "t_max must be positive and finite");
  if (n_steps < 2) throw Error(ErrorCode::InvalidGrid, "n_steps must be at least 2");
  h_ = t_max / static_cast<double>(n_steps);
}

Eigen::VectorXd TimeGrid::nodes() const {
  Eigen::VectorXd t(size());
  for (std::size_t k = 0; k < size(); ++k) t[static_cast<Eigen::Index>(k)] = (*this)[k];
  return t;
}

ModelParams validate(double alpha, double b, double c) {
  ModelParams p{alpha, b, c};
  validate(p);
  return p;
}

void validate(const ModelParams& p) {
  // 1+alpha must lie strictly inside (1,2); the endpoints are not supported.
  if (!(p.alpha > 0.0 && p.alpha < 1.0))
    throw Error(ErrorCode::AlphaOutOfRange, "alpha=" + std::to_string(p.alpha) + " not in (0,1)");
  if (!(p.b >= 0.0) || !std::isfinite(p.b))
    throw Error(ErrorCode::NegativeDrift, "b=" + std::to_string(p.b) + " must be >= 0");
  if (!(p.c > 0.0) || !std::isfinite(p.c))
    throw Error(ErrorCode::NonPositiveScale, "c=" + std::to_string(p.c) + " must be > 0");
}

void validate(const InitialState& init) {
  const double v = std::visit(
      [](const auto& s) {
        if constexpr (requires { s.zeta; })
          return s.zeta;
        else
          return s.mean;
      },
      init);
  if (!(v > 0.0) || !std::isfinite(v))
    throw Error(ErrorCode::InvalidInitialState, "initial mass must be positive");
}

double laplace_exponent(const ModelParams& p, double lambda) {
  return p.b * lambda + p.c * std::pow(lambda, 1.0 + p.alpha);
}

Standardization standardize(const ModelParams& p) {
  validate(p);
  const double c0 = std::pow(p.c / std::tgamma(1.0 - p.alpha), 1.0 / (1.0 + p.alpha));
  return {c0, p.b / c0};
}

ModelParams destandardize(double alpha, const Standardization& s) {
  return {alpha, s.beta * s.c0, std::pow(s.c0, 1.0 + alpha) * std::tgamma(1.0 - alpha)};
}

ModelParams canonical_params(double alpha, double beta) {
  return validate(alpha, beta, std::tgamma(1.0 - alpha));
}

RescaledPath rescale_path(const TimeGrid& standard_grid, const Eigen::Ref<const Eigen::VectorXd>& x0,
                          double c0) {
  if (static_cast<std::size_t>(x0.size()) != standard_grid.size())
    throw Error(ErrorCode::GridMismatch, "path length does not match grid");
  if (!(c0 > 0.0)) throw Error(ErrorCode::DomainError, "c0 must be positive");
  return {TimeGrid(standard_grid.t_max() * c0, standard_grid.n_steps()), x0 / c0};
}

Eigen::VectorXd rescale_path_at(const TimeGrid& standard_grid,
                                const Eigen::Ref<const Eigen::VectorXd>& x0, double c0,
                                const Eigen::Ref<const Eigen::VectorXd>& times) {
  if (static_cast<std::size_t>(x0.size()) != standard_grid.size())
    throw Error(ErrorCode::GridMismatch, "path length does not match grid");
  const double h = standard_grid.step();
  const double n = static_cast<double>(standard_grid.n_steps());
  Eigen::VectorXd out(times.size());
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    const double s = times[i] / c0 / h;
    if (s < 0.0 || s > n * (1.0 + 1e-12))
      throw Error(ErrorCode::GridMismatch,
                  "time " + std::to_string(times[i]) + " outside the simulated range");
    const auto k = std::min(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(n) - 1);
    const double frac = std::min(s - static_cast<double>(k), 1.0);
    out[i] = ((1.0 - frac) * x0[k] + frac * x0[k + 1]) / c0;
  }
  return out;
}

}  // namespace rcb
