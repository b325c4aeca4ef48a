#include "rcb/measures.hpp"

#include <cmath>

#include "rcb/error.hpp"

namespace rcb {
namespace {
void check_uniform(double u) {
  if (!(u > 0.0 && u < 1.0)) throw Error(ErrorCode::DomainError, "uniform input must lie in (0,1)");
}
}  // namespace

LevyMeasure::LevyMeasure(const ModelParams& p) : alpha_(p.alpha) {
  validate(p);
  c_nu_ = p.c * p.alpha * (p.alpha + 1.0) / std::tgamma(1.0 - p.alpha);
}

double LevyMeasure::density(double y) const {
  if (!(y > 0.0)) throw Error(ErrorCode::DomainError, "Levy density needs y > 0");
  return c_nu_ * std::pow(y, -alpha_ - 2.0);
}

double LevyMeasure::tail(double s) const {
  if (!(s > 0.0)) throw Error(ErrorCode::DomainError, "Levy tail needs s > 0");
  return c_nu_ / (alpha_ + 1.0) * std::pow(s, -alpha_ - 1.0);
}

double LevyMeasure::small_jump_second_moment(double eps) const {
  if (!(eps > 0.0)) throw Error(ErrorCode::DomainError, "truncation level must be positive");
  return c_nu_ * std::pow(eps, 1.0 - alpha_) / (1.0 - alpha_);
}

double LevyMeasure::sample_jump(double eps, double u) const {
  if (!(eps > 0.0)) throw Error(ErrorCode::DomainError, "truncation level must be positive");
  check_uniform(u);
  return eps * std::pow(u, -1.0 / (alpha_ + 1.0));
}

double nu_tail(double s, const ModelParams& p) { return LevyMeasure(p).tail(s); }
double nu_small_jump_second_moment(double eps, const ModelParams& p) {
  return LevyMeasure(p).small_jump_second_moment(eps);
}
double sample_jump_size(double eps, double u, const ModelParams& p) {
  return LevyMeasure(p).sample_jump(eps, u);
}

ParetoLaw::ParetoLaw(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::AlphaOutOfRange, "alpha not in (0,1)");
}

double ParetoLaw::tail(double x) const { return x <= 0.0 ? 1.0 : std::pow(1.0 + x, -alpha_ - 1.0); }

double ParetoLaw::size_biased_tail(double x) const {
  return x <= 0.0 ? 1.0 : std::pow(1.0 + x, -alpha_);
}

double ParetoLaw::sample_lifetime(double u) const {
  check_uniform(u);
  return std::pow(u, -1.0 / (alpha_ + 1.0)) - 1.0;
}

double ParetoLaw::sample_residual_life(double u) const {
  check_uniform(u);
  return std::pow(u, -1.0 / alpha_) - 1.0;
}

}  // namespace rcb
