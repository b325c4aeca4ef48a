#include "rcb/quadrature.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>

#include <Eigen/Eigenvalues>

#include "rcb/error.hpp"

namespace rcb::quad {
namespace {

// Jacobi weight (1-y)^a (1+y)^b on [-1,1], mapped to [0,1].
Rule golub_welsch_jacobi(int n, double a, double b) {
  if (n < 1) throw Error(ErrorCode::DomainError, "quadrature order must be >= 1");
  Eigen::VectorXd diag(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    diag[k] = k == 0 ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double kk = k;
    const double s = 2.0 * kk + a + b;
    // k = 1 with the removable factor (1+a+b) cancelled.
    off[k - 1] = k == 1 ? std::sqrt(4.0 * (1.0 + a) * (1.0 + b) / (s * s * (s + 1.0)))
                        : std::sqrt(4.0 * kk * (kk + a) * (kk + b) * (kk + a + b) /
                                    (s * s * (s + 1.0) * (s - 1.0)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  const double mu0 = std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) +
                              std::lgamma(b + 1.0) - std::lgamma(a + b + 2.0));
  Rule r;
  r.nodes = (es.eigenvalues().array() + 1.0) * 0.5;
  r.weights = mu0 * es.eigenvectors().row(0).transpose().array().square();
  // [-1,1] -> [0,1]: dx = dy/2 and (1+y)^b = 2^b x^b.
  r.weights *= std::pow(2.0, -(a + b + 1.0));
  return r;
}

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double hl = 0.5 * (b - a);
  const double fc = f(c);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = hl * kXgk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    rk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
  }
  const double value = rk * hl;
  const double err = std::abs((rk - rg) * hl);
  if (!std::isfinite(value)) throw Error(ErrorCode::QuadratureFailure, "non-finite integrand");
  return {a, b, value, err};
}

}  // namespace

Rule gauss_legendre(int n) { return golub_welsch_jacobi(n, 0.0, 0.0); }

Rule gauss_jacobi_left(int n, double p) {
  if (!(p > -1.0)) throw Error(ErrorCode::DomainError, "Jacobi exponent must exceed -1");
  // weight x^p on [0,1] corresponds to (1+y)^p on [-1,1].
  return golub_welsch_jacobi(n, 0.0, p);
}

Rule gauss_jacobi(int n, double a, double b) {
  if (!(a > -1.0 && b > -1.0)) throw Error(ErrorCode::DomainError, "Jacobi exponents must exceed -1");
  return golub_welsch_jacobi(n, a, b);
}

const Rule& gauss_legendre_cached(int n) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

Result adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol,
                double rel_tol, int max_intervals) {
  std::priority_queue<Segment> heap;
  Segment first = gk15(f, a, b);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  int count = 1;
  while (total_err > std::max(abs_tol, rel_tol * std::abs(total)) && count < max_intervals) {
    const Segment s = heap.top();
    heap.pop();
    const double mid = 0.5 * (s.a + s.b);
    const Segment left = gk15(f, s.a, mid);
    const Segment right = gk15(f, mid, s.b);
    total += left.value + right.value - s.value;
    total_err += left.error + right.error - s.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // Re-sum to shed the drift of the running update.
  double sum = 0.0, err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {sum, err, err <= std::max(abs_tol, rel_tol * std::abs(sum))};
}

}  // namespace rcb::quad
