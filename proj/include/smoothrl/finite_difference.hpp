#ifndef SMOOTHRL_FINITE_DIFFERENCE_HPP_
#define SMOOTHRL_FINITE_DIFFERENCE_HPP_

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace smoothrl::fd {

// Weights w such that f^(order)(x0) ~= sum_j w_j f(nodes_j), computed with
// Fornberg's recursion. Exact for polynomials of degree < nodes.size().
std::vector<double> stencil_weights(int order, std::span<const double> nodes,
                                    double x0);

// Derivative of the given order at every sample of a uniformly spaced series.
// Interior samples use the centered stencil with (order+1) or (order+2)
// points, whichever is odd; samples too close to an end use an (order+2)
// point window shifted inside the series. Both are second order accurate.
std::vector<Eigen::VectorXd> differentiate(
    std::span<const Eigen::VectorXd> samples, double dt, int order);

// Smallest series length differentiate() accepts for the given order.
int min_samples(int order);

}  // namespace smoothrl::fd

#endif  // SMOOTHRL_FINITE_DIFFERENCE_HPP_
