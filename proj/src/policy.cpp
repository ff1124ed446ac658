#include "smoothrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "smoothrl/errors.hpp"

namespace smoothrl {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

Eigen::MatrixXd orthogonal(int rows, int cols, double gain, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int big = std::max(rows, cols), small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (int c = 0; c < small; ++c) {
    for (int r = 0; r < big; ++r) a(r, c) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small);
  for (int c = 0; c < small; ++c) {
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }
  Eigen::MatrixXd w = rows >= cols ? q : Eigen::MatrixXd(q.transpose());
  return gain * w;
}

std::vector<int> layer_sizes(const PolicyShape& s) {
  std::vector<int> sizes{s.obs_dim};
  sizes.insert(sizes.end(), s.hidden.begin(), s.hidden.end());
  sizes.push_back(s.act_dim);
  return sizes;
}

void check_obs(const PolicyParams& p, const Eigen::VectorXd& obs) {
  if (obs.size() != p.shape.obs_dim) {
    throw ContractViolation("observation has length " +
                            std::to_string(obs.size()) + ", policy expects " +
                            std::to_string(p.shape.obs_dim));
  }
}

void check_slice(const PolicyParams& p, const Eigen::VectorXd& action,
                 int first_dim) {
  if (first_dim < 0 || action.size() == 0 ||
      first_dim + action.size() > p.shape.act_dim) {
    throw ContractViolation("action slice outside the policy action range");
  }
}

// log(1 - tanh(u)^2) without cancellation for large |u|.
double log_sech2(double u) {
  const double x = -2.0 * std::abs(u);
  return 2.0 * (std::numbers::ln2 - std::abs(u) - std::log1p(std::exp(x)));
}

}  // namespace

int PolicyParams::num_params() const {
  int n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n + log_std.size();
}

Eigen::VectorXd PolicyParams::to_vector() const {
  Eigen::VectorXd flat(num_params());
  int k = 0;
  for (const auto& l : layers) {
    for (int r = 0; r < l.weight.rows(); ++r) {
      for (int c = 0; c < l.weight.cols(); ++c) flat[k++] = l.weight(r, c);
    }
    for (int r = 0; r < l.bias.size(); ++r) flat[k++] = l.bias[r];
  }
  for (int d = 0; d < log_std.size(); ++d) flat[k++] = log_std[d];
  return flat;
}

void PolicyParams::from_vector(const Eigen::VectorXd& flat) {
  if (flat.size() != num_params()) {
    throw ContractViolation("flat parameter vector has the wrong length");
  }
  int k = 0;
  for (auto& l : layers) {
    for (int r = 0; r < l.weight.rows(); ++r) {
      for (int c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
    }
    for (int r = 0; r < l.bias.size(); ++r) l.bias[r] = flat[k++];
  }
  for (int d = 0; d < log_std.size(); ++d) log_std[d] = flat[k++];
}

void PolicyParams::clamp_log_std() {
  log_std = log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

bool PolicyParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return log_std.allFinite();
}

PolicyParams zero_policy(const PolicyShape& shape, double log_std_init) {
  if (shape.obs_dim < 1 || shape.act_dim < 1 || !(shape.action_scale > 0.0)) {
    throw ContractViolation("invalid policy shape");
  }
  PolicyParams p;
  p.shape = shape;
  const auto sizes = layer_sizes(shape);
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    p.layers.push_back({Eigen::MatrixXd::Zero(sizes[i + 1], sizes[i]),
                        Eigen::VectorXd::Zero(sizes[i + 1])});
  }
  p.log_std = Eigen::VectorXd::Constant(shape.act_dim, log_std_init);
  p.clamp_log_std();
  return p;
}

PolicyParams init_policy(const PolicyShape& shape, std::uint64_t seed,
                         double log_std_init, double out_gain) {
  PolicyParams p = zero_policy(shape, log_std_init);
  Rng rng(seed);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& w = p.layers[i].weight;
    const bool last = i + 1 == p.layers.size();
    w = orthogonal(static_cast<int>(w.rows()), static_cast<int>(w.cols()),
                   last ? out_gain : std::numbers::sqrt2, rng);
  }
  return p;
}

ForwardCache forward(const PolicyParams& params, const Eigen::VectorXd& obs) {
  check_obs(params, obs);
  ForwardCache cache;
  cache.activations.reserve(params.layers.size());
  cache.activations.push_back(obs);
  for (std::size_t i = 0; i + 1 < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    cache.activations.push_back(
        (l.weight * cache.activations.back() + l.bias).array().tanh().matrix());
  }
  const auto& out = params.layers.back();
  cache.mean = out.weight * cache.activations.back() + out.bias;
  if (!cache.mean.allFinite()) {
    throw NumericalFailure("non-finite policy network output");
  }
  return cache;
}

void backward(const PolicyParams& params, const ForwardCache& cache,
              const Eigen::VectorXd& d_mean, const Eigen::VectorXd& d_log_std,
              Eigen::VectorXd& grad) {
  if (grad.size() != params.num_params()) {
    grad = Eigen::VectorXd::Zero(params.num_params());
  }
  // Offsets of each layer block inside the flat vector.
  std::vector<int> offset(params.layers.size());
  int k = 0;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    offset[i] = k;
    k += params.layers[i].weight.size() + params.layers[i].bias.size();
  }
  grad.tail(params.log_std.size()) += d_log_std;

  Eigen::VectorXd delta = d_mean;  // d objective / d pre-activation
  for (int i = static_cast<int>(params.layers.size()) - 1; i >= 0; --i) {
    const auto& l = params.layers[i];
    const Eigen::VectorXd& in = cache.activations[i];
    const int rows = static_cast<int>(l.weight.rows());
    const int cols = static_cast<int>(l.weight.cols());
    int o = offset[i];
    for (int r = 0; r < rows; ++r) {
      if (delta[r] != 0.0) grad.segment(o, cols) += delta[r] * in;
      o += cols;
    }
    grad.segment(o, rows) += delta;
    if (i > 0) {
      Eigen::VectorXd back = l.weight.transpose() * delta;
      delta = back.array() * (1.0 - in.array().square());
    }
  }
}

ActionSample act(const PolicyParams& params, const Eigen::VectorXd& obs,
                 Rng& rng) {
  const ForwardCache cache = forward(params, obs);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = params.shape.act_dim;
  const double scale = params.shape.action_scale;
  ActionSample s;
  s.pre_squash.resize(n);
  s.action.resize(n);
  s.dim_logp.resize(n);
  double lp = 0.0;
  for (int d = 0; d < n; ++d) {
    const double eps = normal(rng);
    const double sigma = std::exp(params.log_std[d]);
    const double u = cache.mean[d] + sigma * eps;
    s.pre_squash[d] = u;
    s.action[d] = scale * std::tanh(u);
    s.dim_logp[d] = -0.5 * eps * eps - params.log_std[d] - kHalfLog2Pi -
                    std::log(scale) - log_sech2(u);
    lp += s.dim_logp[d];
  }
  if (!std::isfinite(lp)) throw NumericalFailure("non-finite log-density");
  s.logp = lp;
  return s;
}

Eigen::VectorXd mean_action(const PolicyParams& params,
                            const Eigen::VectorXd& obs) {
  return params.shape.action_scale * forward(params, obs).mean.array().tanh();
}

SliceDensity slice_density(const PolicyParams& params,
                           const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& action, int first_dim) {
  check_slice(params, action, first_dim);
  const double scale = params.shape.action_scale;
  const auto n = action.size();
  SliceDensity out{0.0, Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int d = first_dim + static_cast<int>(i);
    const double y = action[i] / scale;
    if (!(std::abs(y) < 1.0)) {
      throw BoundaryAction("dimension " + std::to_string(d) + " at " +
                           std::to_string(action[i]));
    }
    const double u = std::atanh(y);
    if (!std::isfinite(u)) throw BoundaryAction("dimension " + std::to_string(d));
    const double log_sigma = params.log_std[d];
    const double sigma = std::exp(log_sigma);
    const double z = (u - mean[d]) / sigma;
    out.logp += -0.5 * z * z - log_sigma - kHalfLog2Pi - std::log(scale) -
                std::log((1.0 - y) * (1.0 + y));
    out.d_mean[i] = z / sigma;
    out.d_log_std[i] = z * z - 1.0;
  }
  return out;
}

double logp(const PolicyParams& params, const Eigen::VectorXd& obs,
            const Eigen::VectorXd& action, int first_dim) {
  const ForwardCache cache = forward(params, obs);
  return slice_density(params, cache.mean, action, first_dim).logp;
}

Eigen::VectorXd grad_logp(const PolicyParams& params,
                          const Eigen::VectorXd& obs,
                          const Eigen::VectorXd& action, int first_dim) {
  const ForwardCache cache = forward(params, obs);
  const SliceDensity s = slice_density(params, cache.mean, action, first_dim);
  const int n = params.shape.act_dim;
  Eigen::VectorXd d_mean = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(n);
  d_mean.segment(first_dim, action.size()) = s.d_mean;
  d_log_std.segment(first_dim, action.size()) = s.d_log_std;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.num_params());
  backward(params, cache, d_mean, d_log_std, grad);
  return grad;
}

double gaussian_kl(const Eigen::VectorXd& mean_a,
                   const Eigen::VectorXd& log_std_a,
                   const Eigen::VectorXd& mean_b,
                   const Eigen::VectorXd& log_std_b) {
  const Eigen::ArrayXd var_ratio = (2.0 * (log_std_a - log_std_b)).array().exp();
  const Eigen::ArrayXd dm = (mean_a - mean_b).array();
  const Eigen::ArrayXd inv_var_b = (-2.0 * log_std_b).array().exp();
  return ((log_std_b - log_std_a).array() + 0.5 * var_ratio +
          0.5 * dm.square() * inv_var_b - 0.5)
      .sum();
}

double kl_divergence(const PolicyParams& params, const ReferencePolicy& ref,
                     const std::vector<Eigen::VectorXd>& obs_batch) {
  Eigen::VectorXd unused;
  return kl_divergence_grad(params, ref, obs_batch, unused);
}

double kl_divergence_grad(const PolicyParams& params,
                          const ReferencePolicy& ref,
                          const std::vector<Eigen::VectorXd>& obs_batch,
                          Eigen::VectorXd& grad) {
  if (obs_batch.empty()) throw ContractViolation("empty observation batch");
  const PolicyParams& rp = ref.params();
  if (!(rp.shape == params.shape)) {
    throw ContractViolation("reference policy shape differs");
  }
  grad = Eigen::VectorXd::Zero(params.num_params());
  const double inv_n = 1.0 / static_cast<double>(obs_batch.size());
  const Eigen::ArrayXd inv_var_ref = (-2.0 * rp.log_std).array().exp();
  const Eigen::ArrayXd var = (2.0 * params.log_std).array().exp();
  double total = 0.0;
  for (const auto& obs : obs_batch) {
    const ForwardCache c = forward(params, obs);
    const Eigen::VectorXd ref_mean = forward(rp, obs).mean;
    total += gaussian_kl(c.mean, params.log_std, ref_mean, rp.log_std);
    const Eigen::VectorXd d_mean =
        inv_n * ((c.mean - ref_mean).array() * inv_var_ref).matrix();
    const Eigen::VectorXd d_log_std =
        inv_n * (var * inv_var_ref - 1.0).matrix();
    backward(params, c, d_mean, d_log_std, grad);
  }
  const double kl = total * inv_n;
  if (!std::isfinite(kl)) throw NumericalFailure("non-finite KL");
  return kl;
}

}  // namespace smoothrl
