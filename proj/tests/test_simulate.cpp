#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rcb/analysis.hpp"
#include "rcb/error.hpp"
#include "rcb/measures.hpp"
#include "rcb/simulate.hpp"
#include "rcb/special.hpp"

using namespace rcb;

namespace {

// Var X(T) for zeta = 1 by the isometry, with Boost quadrature as the reference.
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
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double w) { return 2.0 * w * (1.0 - p.b * sf.W(T - w * w)) * inner(w * w); }, 0.0, std::sqrt(T), 6,
      1e-9);
}

}  // namespace

TEST_CASE("zero initial mass stays at zero") {
  const PathSample s = simulate_sve({0.5, 0.0, 1.0}, 0.0, TimeGrid(1.0, 64), 1.0 / 64, {3, 0});
  CHECK(s.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.n_jumps == 0);
  CHECK(s.clamp_events == 0);
}

TEST_CASE("SVE paths are reproducible per stream") {
  const SveSimulator sim({0.5, 1.0, 1.0}, 1.0, TimeGrid(1.0, 64), 1.0 / 64);
  const PathSample a = sim.run({11, 5});
  const PathSample b = sim.run({11, 5});
  const PathSample c = sim.run({11, 6});
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.values[0] == 1.0);
  CHECK(a.values.minCoeff() >= 0.0);
  CHECK(a.scheme == Scheme::SveEuler);
}

TEST_CASE("recorded jumps are sorted and above the truncation level") {
  SveOptions o;
  o.record_jumps = true;
  const double eps = 1.0 / 64;
  const SveSimulator sim({0.5, 0.0, 1.0}, 2.0, TimeGrid(1.0, 64), eps, o);
  const PathSample s = sim.run({1, 2});
  CHECK(s.jumps.size() == s.n_jumps);
  CHECK(!s.jumps.empty());
  for (std::size_t i = 0; i < s.jumps.size(); ++i) {
    CHECK(s.jumps[i].y > eps);
    CHECK(s.jumps[i].s >= 0.0);
    CHECK(s.jumps[i].s < 1.0);
    if (i) CHECK(s.jumps[i].s >= s.jumps[i - 1].s);
  }
}

TEST_CASE("compensator matches direct quadrature") {
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double b : {0.0, 1.0}) {
    const ModelParams p{0.5, b, 1.0};
    const ScaleFunction sf(p);
    const LevyMeasure nu(p);
    const double eps = 0.01;
    for (double u : {0.005, 0.3, 1.0}) {
      double ref = sf.W(u) * nu.tail(std::max(eps, u));
      if (u > eps)
        ref += ts.integrate([&](double y) { return (sf.W(u) - sf.W(u - y)) * nu.density(y); }, eps, u, 1e-11);
      CHECK(sve_compensator(sf, eps, u) == doctest::Approx(ref).epsilon(1e-7));
    }
  }
}

TEST_CASE("isometry variance against an independent quadrature") {
  for (double b : {0.0, 1.0}) {
    const ModelParams p{0.5, b, 1.0};
    CHECK(sve_variance(p, 1.0, 1.0) == doctest::Approx(isometry_variance(p, 1.0)).epsilon(2e-3));
    CHECK(sve_variance(p, 2.5, 1.0) == doctest::Approx(2.5 * sve_variance(p, 1.0, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("SVE mean identity and variance on a coarse grid") {
  for (double b : {0.0, 1.0}) {
    const ModelParams p{0.5, b, 1.0};
    const TimeGrid g(1.0, 128);
    const SveSimulator sim(p, 1.0, g, g.step());
    std::vector<PathSample> paths;
    for (std::uint64_t i = 0; i < 3000; ++i) paths.push_back(sim.run({2024, i}));
    const McReport r = summarize_paths(paths);
    const ScaleFunction sf(p);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double oracle = 1.0 - b * sf.W(g[k]);
      const auto i = static_cast<Eigen::Index>(k);
      CHECK(std::abs(r.mean[i] - oracle) <= 4.0 * r.se[i] + 1e-12);
    }
    const double var = sim.predicted_variance();
    CHECK(r.variance[128] == doctest::Approx(var).epsilon(0.2));
  }
}

TEST_CASE("CMJ initial value, rate and errors") {
  const TimeGrid g(1.0, 10);
  const PathSample s = simulate_cmj(100, 1.0, 0.5, 0.0, g, {1, 0});
  CHECK(s.values[0] == 1.0);
  CHECK(s.scheme == Scheme::CmjPrelimit);
  CHECK(simulate_cmj(100, 0.55, 0.5, 0.0, g, {1, 0}).values[0] == 0.5);
  CHECK(cmj_rate(100, 0.5, 1.0) == doctest::Approx(0.45).epsilon(1e-15));
  CHECK(cmj_rate(100, 0.5, 0.0) == 0.5);
  CHECK_THROWS_AS(cmj_rate(1, 0.5, 1.0), Error);
  try {
    simulate_cmj(1, 1.0, 0.5, 2.0, g, {1, 0});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SubcriticalRateError);
  }
  CHECK(simulate_cmj(100, 1.0, 0.5, 0.0, g, {9, 4}).values == simulate_cmj(100, 1.0, 0.5, 0.0, g, {9, 4}).values);
}

TEST_CASE("population cap") {
  CmjOptions o;
  o.population_cap = 5;
  CHECK_THROWS_AS(cmj_population(10, 0.5, 0.5, TimeGrid(1.0, 4), {1, 1}, o), Error);
}

TEST_CASE("critical CMJ keeps its mean") {
  const TimeGrid g(1.0, 4);
  std::vector<PathSample> paths;
  for (std::uint64_t i = 0; i < 4000; ++i) paths.push_back(simulate_cmj(25, 1.0, 0.5, 0.0, g, {77, i}));
  const McReport r = summarize_paths(paths);
  for (Eigen::Index k = 1; k < r.mean.size(); ++k) CHECK(std::abs(r.mean[k] - 1.0) <= 4.0 * r.se[k]);
}

TEST_CASE("passage counts of explicit paths") {
  const TimeGrid levels(1.0, 8);
  const Eigen::VectorXd sweep = cp_passages(0.625, {}, levels);
  for (Eigen::Index k = 0; k <= 8; ++k) CHECK(sweep[k] == (k < 5 ? 1.0 : 0.0));
  // down from 0.5 to 0.25, jump to 0.875, down to 0
  const Eigen::VectorXd two = cp_passages(0.5, {{0.25, 0.625}}, levels);
  const double expect[] = {1, 1, 2, 2, 1, 1, 1, 0, 0};
  for (Eigen::Index k = 0; k <= 8; ++k) CHECK(two[k] == expect[k]);
  // a jump after the hit of 0 is ignored
  CHECK(cp_passages(0.25, {{0.5, 1.0}}, levels) == cp_passages(0.25, {}, levels));
  CHECK_THROWS_AS(cp_passages(-1.0, {}, levels), Error);
}

TEST_CASE("simulated local times") {
  const TimeGrid levels(2.0, 16);
  for (std::uint64_t i = 0; i < 200; ++i) {
    const PathSample s = simulate_cp_localtime(0.5, 0.5, levels, {5, i});
    CHECK(s.values[0] == 1.0);
    CHECK(s.values.minCoeff() >= 0.0);
    CHECK((s.values.array() == s.values.array().round()).all());
  }
  CHECK_THROWS_AS(simulate_cp_localtime(0.6, 0.5, levels, {5, 0}), Error);
}

TEST_CASE("local time and CMJ population agree in law") {
  const TimeGrid g(1.0, 2);
  std::vector<double> a, b;
  for (std::uint64_t i = 0; i < 4000; ++i) {
    a.push_back(simulate_cp_localtime(0.5, 0.5, g, {8, i}).values[2]);
    b.push_back(cmj_population(1, 0.5, 0.5, g, {9, i})[2]);
  }
  // 1% two-sample KS critical value at 4000 each is about 0.036
  CHECK(ks_distance(a, b) <= 0.036);
}
