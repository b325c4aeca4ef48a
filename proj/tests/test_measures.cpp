#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rcb/error.hpp"
#include "rcb/measures.hpp"
#include "rcb/rng.hpp"

using namespace rcb;

TEST_CASE("Levy tail and truncated second moment") {
  const ModelParams p{0.5, 0.0, 1.0};
  CHECK(nu_tail(1.0, p) == doctest::Approx(0.28209479177387814).epsilon(1e-14));
  double prev = nu_tail(1.0, p);
  for (double s : {2.0, 4.0, 8.0}) {
    CHECK(nu_tail(s, p) < prev);
    prev = nu_tail(s, p);
  }
  CHECK(nu_small_jump_second_moment(0.01, p) ==
        doctest::Approx(0.08462843753216344).epsilon(1e-14));
  CHECK(nu_small_jump_second_moment(1e-12, p) < 1e-5);
  CHECK(nu_small_jump_second_moment(0.01, {0.5, 0.0, 3.0}) ==
        doctest::Approx(3.0 * nu_small_jump_second_moment(0.01, p)).epsilon(1e-14));
  CHECK_THROWS_AS(nu_tail(0.0, p), Error);
  CHECK_THROWS_AS(nu_small_jump_second_moment(-1.0, p), Error);
}

TEST_CASE("Levy tail and moment agree with quadrature of the density") {
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double alpha : {0.3, 0.5, 0.8}) {
    const ModelParams p{alpha, 0.0, 1.3};
    const LevyMeasure nu(p);
    const double s = 0.5;
    boost::math::quadrature::exp_sinh<double> es;
    const double q = es.integrate([&](double y) { return nu.density(s + y); });
    CHECK(std::abs(q - nu.tail(s)) <= 1e-8);
    const double eps = 0.01;
    const double m2 = ts.integrate([&](double y) { return y < 1e-100 ? 0.0 : y * y * nu.density(y); }, 0.0, eps);
    CHECK(std::abs(m2 - nu.small_jump_second_moment(eps)) <= 1e-8);
  }
}

TEST_CASE("jump size sampler") {
  const ModelParams p{0.5, 0.0, 1.0};
  CHECK(sample_jump_size(1.0, 0.5, p) == doctest::Approx(1.5874010519681995).epsilon(1e-14));
  CHECK(sample_jump_size(0.1, 1.0 - 1e-15, p) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS(sample_jump_size(0.1, 0.0, p), Error);
  CHECK_THROWS_AS(sample_jump_size(0.1, 1.0, p), Error);

  // one-sample KS against P(Y > y) = (y/eps)^-(alpha+1)
  Philox rng(42, 0);
  const double eps = 0.3;
  std::vector<double> ys(100000);
  for (auto& y : ys) {
    y = sample_jump_size(eps, rng.uniform(), p);
    CHECK(y > eps);
  }
  std::sort(ys.begin(), ys.end());
  double d = 0.0;
  const double n = static_cast<double>(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double cdf = 1.0 - std::pow(ys[i] / eps, -1.5);
    d = std::max({d, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  CHECK(d < 0.01);
}

TEST_CASE("Pareto lifetimes") {
  const ParetoLaw law(0.5);
  CHECK(law.sample_lifetime(0.5) == doctest::Approx(0.5874010519681994).epsilon(1e-14));
  CHECK(law.sample_residual_life(0.5) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(law.sample_lifetime(1.0 - 1e-15) < 1e-14);
  CHECK(law.sample_residual_life(1.0 - 1e-15) < 1e-14);
  CHECK(law.tail(0.0) == 1.0);
  CHECK(law.size_biased_tail(3.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(law.sample_lifetime(1.5), Error);
  CHECK_THROWS_AS(ParetoLaw(1.0), Error);

  // the size-biased density alpha * tail integrates to one
  boost::math::quadrature::exp_sinh<double> es;
  CHECK(es.integrate([&](double x) { return 0.5 * law.tail(x); }) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("lifetime mean and residual-life tail exponent") {
  for (double alpha : {0.5, 0.75}) {
    const ParetoLaw law(alpha);
    Philox rng(2024, 3);
    const int n = 100000;
    std::vector<double> life(n), resid(n);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      life[i] = law.sample_lifetime(rng.uniform());
      resid[i] = law.sample_residual_life(rng.uniform());
      sum += life[i];
      sum2 += life[i] * life[i];
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    // the lifetime has infinite variance, so the plain 3-SE check is advisory only
    WARN(std::abs(mean - 1.0 / alpha) <= 3.0 * se);
    // truncated lifetimes have finite variance and an exact mean
    const double cap = 50.0;
    double t1 = 0.0, t2 = 0.0;
    for (double x : life) {
      const double y = std::min(x, cap);
      t1 += y;
      t2 += y * y;
    }
    const double tmean = t1 / n;
    const double tse = std::sqrt((t2 / n - tmean * tmean) / n);
    CHECK(std::abs(tmean - (1.0 - std::pow(1.0 + cap, -alpha)) / alpha) <= 3.0 * tse);

    // least-squares slope of log survival vs log(1+x) over the upper tail
    std::sort(resid.begin(), resid.end());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = n / 2; i < n - 100; i += 10) {
      const double x = std::log1p(resid[i]);
      const double y = std::log(1.0 - static_cast<double>(i) / n);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
      ++m;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(std::abs(slope + alpha) <= 0.05);
  }
}
