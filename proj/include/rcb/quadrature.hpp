#pragma once

#include <functional>

#include <Eigen/Core>

namespace rcb::quad {

/// Nodes and weights of an interpolatory rule on a fixed interval.
struct Rule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// n-point Gauss-Legendre rule on [0,1] (Golub-Welsch).
Rule gauss_legendre(int n);

/// n-point Gauss-Jacobi rule on [0,1] for the weight x^p, p > -1.
Rule gauss_jacobi_left(int n, double p);

/// n-point Gauss-Jacobi rule on [0,1] for the weight (1-x)^a x^b.
Rule gauss_jacobi(int n, double a, double b);

/// Cached Gauss-Legendre rule; thread-safe after first use per n.
const Rule& gauss_legendre_cached(int n);

struct Result {
  double value = 0.0;
  double error = 0.0;
  bool converged = false;
};

/// Globally adaptive 7/15-point Gauss-Kronrod on [a,b].
Result adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol,
                double rel_tol, int max_intervals = 500);

}  // namespace rcb::quad
