#pragma once

#include "rcb/model.hpp"

namespace rcb {

/// Stable Levy measure nu(dy) = c alpha (alpha+1) / Gamma(1-alpha) y^(-alpha-2) dy on y > 0.
class LevyMeasure {
 public:
  explicit LevyMeasure(const ModelParams& p);

  double normalizer() const noexcept { return c_nu_; }
  double density(double y) const;
  /// nu((s, inf))
  double tail(double s) const;
  /// int_0^eps y^2 nu(dy)
  double small_jump_second_moment(double eps) const;
  /// Inverse-CDF draw from nu restricted to (eps, inf), normalized.
  double sample_jump(double eps, double u) const;

 private:
  double alpha_;
  double c_nu_;
};

double nu_tail(double s, const ModelParams& p);
double nu_small_jump_second_moment(double eps, const ModelParams& p);
double sample_jump_size(double eps, double u, const ModelParams& p);

/// Pareto II offspring law with tail (1+x)^(-alpha-1) and its size-biased
/// version with tail (1+x)^(-alpha).
class ParetoLaw {
 public:
  explicit ParetoLaw(double alpha);

  double alpha() const noexcept { return alpha_; }
  double tail(double x) const;
  double size_biased_tail(double x) const;
  double sample_lifetime(double u) const;
  double sample_residual_life(double u) const;

 private:
  double alpha_;
};

}  // namespace rcb
