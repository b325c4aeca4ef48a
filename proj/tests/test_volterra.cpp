#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rcb/error.hpp"
#include "rcb/measures.hpp"
#include "rcb/special.hpp"
#include "rcb/volterra.hpp"

using namespace rcb;

namespace {
const auto zero_g = [](double) { return cplx(0.0); };

// Var X(T) for zeta = 1 from the compensated-integral isometry.
double isometry_variance(const ModelParams& p, double T) {
  const ScaleFunction sf(p);
  const LevyMeasure nu(p);
  boost::math::quadrature::tanh_sinh<double> ts;
  auto inner = [&](double u) {
    const double wu = sf.W(u);
    const double body = ts.integrate(
        [&](double y) {
          if (y < 1e-100) return 0.0;
          const double d = wu - sf.W(u - y);
          return d * d * nu.density(y);
        },
        0.0, u, 1e-10);
    return body + wu * wu * nu.tail(u);
  };
  // u = T - s = w^2 removes the u^(alpha-1) endpoint behaviour of the inner integral
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double w) { return 2.0 * w * (1.0 - p.b * sf.W(T - w * w)) * inner(w * w); }, 0.0, std::sqrt(T), 6,
      1e-9);
}
}  // namespace

TEST_CASE("convolution weights") {
  const ModelParams p{0.5, 0.0, 2.0};
  const TimeGrid g(1.5, 100);
  const ConvWeights cw = conv_weights(g, p);
  for (std::size_t k = 1; k <= 100; k += 9) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double closed =
          (std::pow(g[k] - g[j], 0.5) - std::pow(g[k] - g[j + 1], 0.5)) / (2.0 * std::tgamma(1.5));
      CHECK(cw(k, j) == doctest::Approx(closed).epsilon(1e-12));
      CHECK(cw(k, j) > 0.0);
      sum += cw(k, j);
    }
    CHECK(sum == doctest::Approx(scale_W(g[k], p)).epsilon(1e-12));
  }
  const ConvWeights cb = conv_weights(g, {0.7, 3.0, 1.0});
  double sum = 0.0;
  for (std::size_t j = 0; j < 100; ++j) sum += cb(100, j);
  CHECK(sum == doctest::Approx(scale_W(1.5, {0.7, 3.0, 1.0})).epsilon(1e-12));
  CHECK(cb.increments.tail(100).minCoeff() > 0.0);
}

TEST_CASE("Pareto resolvent") {
  const TimeGrid g(50.0, 5000);
  const Eigen::VectorXd r = resolvent_solve(0.5, 0.5, g);
  CHECK(r[0] == 0.5);
  for (Eigen::Index k = 1; k < r.size(); ++k) CHECK(r[k] < r[k - 1]);
  CHECK(resolvent_solve(0.3, 0.5, g)[0] == 0.3);
  CHECK_THROWS_AS(resolvent_solve(0.5, 0.5, TimeGrid(40.0, 10)), Error);
  CHECK_THROWS_AS(resolvent_solve(0.6, 0.5, g), Error);
  // regular variation with index alpha - 1 in the critical case
  const double ratio = r[5000] / r[2500];
  CHECK(ratio == doctest::Approx(std::pow(50.0 / 25.0, -0.5)).epsilon(0.05));
}

TEST_CASE("resolvent of b L_K reproduces b W'") {
  const ModelParams p{0.5, 1.0, 1.0};
  const ScaleFunction sf(p);
  double prev = 1e300;
  for (int n : {128, 512, 2048}) {
    const TimeGrid g(2.0, n);
    const Eigen::VectorXd r = resolvent_solve_kernel(
        [&](double t) { return p.b * sf.LK(t); },
        [&](double t) { return p.b * std::pow(t, p.alpha) / (p.c * std::tgamma(1.0 + p.alpha)); }, g);
    double err = 0.0;
    for (int k = n / 4; k <= n; ++k) err = std::max(err, std::abs(r[k] - p.b * sf.Wp(g[k])));
    CHECK(err < prev);
    CHECK(err <= 2.0 * std::pow(g.step(), p.alpha));
    prev = err;
  }
}

TEST_CASE("nonlinear operator on a constant imaginary integrand") {
  const ModelParams p{0.5, 0.0, 1.0};
  const double theta = 1.0, t = 1.0, y_min = 1.0 / 512.0;
  const LevyMeasure nu(p);
  const cplx got = v_alpha_apply([&](double s) { return cplx(0.0, theta * s); }, cplx(0.0, theta), t,
                                 y_min, p);
  // cancellation-free forms of cos x - 1 and sin x - x
  auto cosm1 = [](double x) { return -2.0 * std::sin(0.5 * x) * std::sin(0.5 * x); };
  auto sinmx = [](double x) {
    return std::abs(x) < 1e-2 ? -x * x * x / 6.0 * (1.0 - x * x / 20.0) : std::sin(x) - x;
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  auto re = ts.integrate([&](double y) { return y < 1e-100 ? 0.0 : cosm1(theta * y) * nu.density(y); }, 0.0, t);
  auto im = ts.integrate([&](double y) { return y < 1e-100 ? 0.0 : sinmx(theta * y) * nu.density(y); }, 0.0, t);
  re += (std::cos(theta * t) - 1.0) * nu.tail(t);
  im += (std::sin(theta * t) - theta * t) * nu.tail(t);
  CHECK(std::abs(got.real() - re) <= 1e-6);
  CHECK(std::abs(got.imag() - im) <= 1e-6);
  CHECK(got.real() <= 0.0);

  CHECK(v_alpha_apply([](double) { return cplx(0.0); }, 0.0, t, y_min, p) == cplx(0.0));
  for (double th : {0.3, 2.0, 7.0}) {
    const cplx z = v_alpha_apply([&](double s) { return cplx(0.0, th * std::sin(3.0 * s)); },
                                 cplx(0.0, th * std::sin(3.0 * t)), t, y_min, p);
    CHECK(z.real() <= 0.0);
  }
}

TEST_CASE("trivial solution") {
  const ModelParams p{0.5, 1.0, 1.0};
  const TimeGrid g(1.0, 128);
  const VolterraSolution s = solve_v(0.0, zero_g, g, p);
  CHECK(s.v.tail(128).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.Kv.cwiseAbs().maxCoeff() == 0.0);
  CHECK(characteristic_functional(s, 1.0, FixedInitial{2.0}) == cplx(1.0));
  CHECK(characteristic_functional(s, 1.0, ExponentialInitial{2.0}) == cplx(1.0));
  CHECK_THROWS_AS(characteristic_functional(s, 0.3333, FixedInitial{1.0}), Error);
  CHECK_THROWS_AS(solve_v(cplx(0.1, 0.0), zero_g, g, p), Error);
}

TEST_CASE("solution near the origin and modulus bound") {
  for (double b : {0.0, 1.0}) {
    const ModelParams p{0.5, b, 1.0};
    const TimeGrid g(1.0, 2048);
    for (double th : {0.5, 1.0, 2.0}) {
      const VolterraSolution s = solve_v(cplx(0.0, th), zero_g, g, p);
      CHECK(std::abs(s.Kv0_extrapolated - cplx(0.0, th)) <= 1e-3 * th);
      CHECK(s.Kv[0] == cplx(0.0, th));
      CHECK(s.Kv.real().maxCoeff() <= 0.0);
      for (std::size_t k = 0; k <= 2048; k += 64)
        CHECK(std::abs(characteristic_functional(s, g[k], FixedInitial{1.5})) <= 1.0);
      double prof = 0.0;
      for (std::size_t k = 1; k <= 2048; ++k) prof = std::max(prof, std::pow(g[k], 0.5) * std::abs(s.v[k]));
      CHECK(prof <= 2.0 * th);
    }
  }
}

TEST_CASE("second-order expansion matches the isometry variance") {
  // log E exp(i theta X(T)) = i theta E X(T) - theta^2 Var X(T) / 2 + O(theta^3)
  for (double b : {0.0, 1.0}) {
    const ModelParams p{0.5, b, 1.0};
    const double theta = 1e-3;
    const VolterraSolution s = solve_v(cplx(0.0, theta), zero_g, TimeGrid(1.0, 1024), p);
    const cplx kv = s.Kv[1024];
    const double mean = 1.0 - b * scale_W(1.0, p);
    CHECK(kv.imag() / theta == doctest::Approx(mean).epsilon(1e-5));
    const double var = isometry_variance(p, 1.0);
    CHECK(-2.0 * kv.real() / (theta * theta) == doctest::Approx(var).epsilon(5e-3));
  }
}

TEST_CASE("time-dependent g enters through the mean of g*X") {
  const ModelParams p{0.5, 1.0, 1.0};
  const double theta = 1e-3;
  const VolterraSolution s = solve_v(0.0, [&](double) { return cplx(0.0, theta); }, TimeGrid(1.0, 512), p);
  // E g*X(1) = i theta int_0^1 (1 - b W(s)) ds
  const double expect = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double t) { return 1.0 - scale_W(t, p); }, 0.0, 1.0);
  CHECK(s.Kv[512].imag() / theta == doctest::Approx(expect).epsilon(1e-4));
  CHECK(s.Kv.real().maxCoeff() <= 0.0);
}

TEST_CASE("exponential initial mass") {
  const ModelParams p{0.5, 0.0, 1.0};
  const VolterraSolution s = solve_v(cplx(0.0, 1.0), zero_g, TimeGrid(1.0, 256), p);
  const cplx kv = s.Kv[256];
  const double m = 1.7;
  boost::math::quadrature::exp_sinh<double> es;
  const double re = es.integrate([&](double z) { return std::real(std::exp(z * kv)) * std::exp(-z / m) / m; });
  const double im = es.integrate([&](double z) { return std::imag(std::exp(z * kv)) * std::exp(-z / m) / m; });
  const cplx cf = characteristic_functional(s, 1.0, ExponentialInitial{m});
  CHECK(std::abs(cf - cplx(re, im)) <= 1e-10);
  CHECK(std::abs(cf) <= 1.0);
}

TEST_CASE("grid refinement") {
  const ModelParams p{0.5, 0.0, 1.0};
  double a = 0, b = 0, c = 0;
  int i = 0;
  for (int n : {256, 512, 1024}) {
    const double v = std::abs(solve_v(cplx(0.0, 1.0), zero_g, TimeGrid(1.0, n), p).Kv[n]);
    (i == 0 ? a : i == 1 ? b : c) = v;
    ++i;
  }
  const double order = std::log2(std::abs(b - a) / std::abs(c - b));
  CHECK(order > 0.5);
}
