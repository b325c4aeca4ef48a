#pragma once

#include <vector>

#include "rcb/model.hpp"

namespace rcb {

/// Evaluation controls for the Mittag-Leffler function on the negative half-line.
struct MlConfig {
  int series_terms_max = 1000;
  /// Power series is used for |x| <= switch_radius; a non-positive value selects
  /// the default radius 6^alpha (the series then never cancels more than ~e^6).
  double switch_radius = 0.0;
  /// Upper bound on terms of the large-argument expansion.
  int asymptotic_terms = 120;
  /// Large-argument expansion is used once |x|^(1/alpha) exceeds this.
  double asymptotic_scaled_radius = 50.0;
  double tolerance = 1e-14;
};

void validate(const MlConfig& cfg);

/// E_{alpha,beta}(x) = sum_k x^k / Gamma(alpha k + beta) for x <= 0 and
/// beta in {alpha, alpha+1, 1}.
double mittag_leffler(double alpha, double beta, double x, const MlConfig& cfg = {});

/// 1/Gamma(x), zero at the poles.
double rgamma(double x);

/// Scale function W and friends for fixed parameters. Immutable after construction.
class ScaleFunction {
 public:
  explicit ScaleFunction(const ModelParams& p, const MlConfig& cfg = {});

  const ModelParams& params() const noexcept { return p_; }

  /// W(t) for t >= 0, and 0 for t < 0.
  double W(double t) const;
  /// W'(t), t > 0.
  double Wp(double t) const;
  /// K(t) = c t^-alpha / Gamma(1-alpha), t > 0.
  double K(double t) const;
  /// L_K(t) = t^(alpha-1) / (c Gamma(alpha)), t > 0.
  double LK(double t) const;

  /// W'(t) t^(1-alpha): the bounded factor of W'.
  double Wp_regular(double t) const;

 private:
  double series(const std::vector<double>& coef, double beta, double x) const;

  ModelParams p_;
  MlConfig cfg_;
  double radius_;
  std::vector<double> coef_w_;
  std::vector<double> coef_wp_;
  double ratio_;  // b/c
  double inv_c_gamma_alpha_;
  double inv_c_gamma_alpha1_;
  double k_coef_;
};

double scale_W(double t, const ModelParams& p);
double scale_Wp(double t, const ModelParams& p);
double kernel_K(double t, const ModelParams& p);
double kernel_LK(double t, const ModelParams& p);

}  // namespace rcb
