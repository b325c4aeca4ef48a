#pragma once

#include <cstddef>
#include <optional>
#include <variant>

#include <Eigen/Core>

namespace rcb {

/// Stable triple: Laplace exponent b*lambda + c*lambda^(1+alpha).
struct ModelParams {
  double alpha = 0.5;
  double b = 0.0;
  double c = 1.0;
};

/// Map to the canonical process with scale Gamma(1-alpha) and drift beta.
struct Standardization {
  double c0 = 1.0;
  double beta = 0.0;
};

struct FixedInitial {
  double zeta = 1.0;
};

/// Random initial mass, exponential with the given mean.
struct ExponentialInitial {
  double mean = 1.0;
};

using InitialState = std::variant<FixedInitial, ExponentialInitial>;

/// Uniform grid t_k = k*h, k = 0..n_steps.
class TimeGrid {
 public:
  TimeGrid(double t_max, std::size_t n_steps);

  double t_max() const noexcept { return t_max_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  std::size_t size() const noexcept { return n_steps_ + 1; }
  double step() const noexcept { return h_; }
  double operator[](std::size_t k) const noexcept {
    return k == n_steps_ ? t_max_ : static_cast<double>(k) * h_;
  }
  Eigen::VectorXd nodes() const;

 private:
  double t_max_;
  std::size_t n_steps_;
  double h_;
};

ModelParams validate(double alpha, double b, double c);
void validate(const ModelParams& p);
void validate(const InitialState& init);

double laplace_exponent(const ModelParams& p, double lambda);

Standardization standardize(const ModelParams& p);

/// Inverse of standardize: (c0, beta) back to (b, c) for a given alpha.
ModelParams destandardize(double alpha, const Standardization& s);

/// Parameters of the canonical process (alpha, beta, Gamma(1-alpha)).
ModelParams canonical_params(double alpha, double beta);

/// Path in general coordinates X(t) = X0(t/c0)/c0 on the grid t_k = c0*s_k.
struct RescaledPath {
  TimeGrid grid;
  Eigen::VectorXd values;
};

RescaledPath rescale_path(const TimeGrid& standard_grid, const Eigen::Ref<const Eigen::VectorXd>& x0,
                          double c0);

/// Sample X(t) = X0(t/c0)/c0 at arbitrary times by linear interpolation of X0.
Eigen::VectorXd rescale_path_at(const TimeGrid& standard_grid,
                                const Eigen::Ref<const Eigen::VectorXd>& x0, double c0,
                                const Eigen::Ref<const Eigen::VectorXd>& times);

}  // namespace rcb
