#include "smoothrl/finite_difference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smoothrl/errors.hpp"

namespace smoothrl::fd {

std::vector<double> stencil_weights(int order, std::span<const double> nodes,
                                    double x0) {
  const int n = static_cast<int>(nodes.size());
  if (order < 0 || n <= order) {
    throw ContractViolation("stencil needs more nodes than the derivative order");
  }
  // c[j][k]: weight of node j for the k-th derivative.
  std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) {
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) w[j] = c[j][order];
  return w;
}

namespace {

int central_width(int order) { return order % 2 == 1 ? order + 2 : order + 1; }
int boundary_width(int order) { return order + 2; }

}  // namespace

int min_samples(int order) {
  return std::max(central_width(order), boundary_width(order));
}

std::vector<Eigen::VectorXd> differentiate(
    std::span<const Eigen::VectorXd> samples, double dt, int order) {
  const int n = static_cast<int>(samples.size());
  if (order < 1) throw ContractViolation("derivative order must be >= 1");
  if (n < min_samples(order)) {
    throw TrajectoryTooShort(std::to_string(n) + " samples, need " +
                             std::to_string(min_samples(order)));
  }
  if (!(dt > 0.0)) throw ContractViolation("dt must be positive");

  const int half = (central_width(order) - 1) / 2;
  const int wb = boundary_width(order);
  const double scale = 1.0 / std::pow(dt, order);

  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  std::vector<double> nodes;
  for (int i = 0; i < n; ++i) {
    int start;
    int width;
    if (i - half >= 0 && i + half <= n - 1) {
      start = i - half;
      width = 2 * half + 1;
    } else {
      start = i - half < 0 ? 0 : n - wb;
      width = wb;
    }
    nodes.resize(width);
    for (int j = 0; j < width; ++j) nodes[j] = static_cast<double>(start + j - i);
    const std::vector<double> w = stencil_weights(order, nodes, 0.0);
    // Weights sum to zero for order >= 1; differencing against the center
    // sample keeps constant series exactly at zero.
    Eigen::VectorXd d = Eigen::VectorXd::Zero(samples[i].size());
    for (int j = 0; j < width; ++j) {
      if (w[j] != 0.0) d += w[j] * (samples[start + j] - samples[i]);
    }
    out.push_back(d * scale);
  }
  return out;
}

}  // namespace smoothrl::fd
