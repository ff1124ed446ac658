#ifndef SMOOTHRL_POLICY_HPP_
#define SMOOTHRL_POLICY_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace smoothrl {

using Rng = std::mt19937_64;

struct PolicyShape {
  int obs_dim = 0;
  int act_dim = 0;  // dof * chunk_size
  std::vector<int> hidden = {64, 64};
  double action_scale = 1.0;

  bool operator==(const PolicyShape&) const = default;
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

// Feed-forward tanh network producing the pre-squash mean, plus a
// state-independent log standard deviation per action dimension.
struct PolicyParams {
  PolicyShape shape;
  std::vector<DenseLayer> layers;
  Eigen::VectorXd log_std;

  int num_params() const;
  // Flat layout: per layer row-major weight then bias, then log_std.
  Eigen::VectorXd to_vector() const;
  void from_vector(const Eigen::VectorXd& flat);
  void clamp_log_std();
  bool all_finite() const;
};

// Orthogonal hidden weights (gain sqrt 2), output layer gain out_gain,
// zero biases, constant log_std.
PolicyParams init_policy(const PolicyShape& shape, std::uint64_t seed,
                         double log_std_init = -0.5, double out_gain = 0.01);

// Every weight and bias zero.
PolicyParams zero_policy(const PolicyShape& shape, double log_std_init = -0.5);

// Snapshot anchoring the KL term. Never mutated after construction.
class ReferencePolicy {
 public:
  explicit ReferencePolicy(PolicyParams params) : params_(std::move(params)) {}
  const PolicyParams& params() const { return params_; }

 private:
  PolicyParams params_;
};

// Activations kept for the backward pass.
struct ForwardCache {
  std::vector<Eigen::VectorXd> activations;  // input, then each hidden output
  Eigen::VectorXd mean;
};

ForwardCache forward(const PolicyParams& params, const Eigen::VectorXd& obs);

// Adds d(objective)/d(params) to grad given the objective's derivative with
// respect to the network mean and to log_std.
void backward(const PolicyParams& params, const ForwardCache& cache,
              const Eigen::VectorXd& d_mean, const Eigen::VectorXd& d_log_std,
              Eigen::VectorXd& grad);

struct ActionSample {
  Eigen::VectorXd action;     // squashed, within (-scale, scale)
  Eigen::VectorXd pre_squash;
  Eigen::VectorXd dim_logp;  // per-dimension terms, summing to logp
  double logp = 0.0;
};

ActionSample act(const PolicyParams& params, const Eigen::VectorXd& obs,
                 Rng& rng);

// Mean action scale * tanh(mu(obs)).
Eigen::VectorXd mean_action(const PolicyParams& params,
                            const Eigen::VectorXd& obs);

// Log-density of the squashed action over dims [first_dim, first_dim + n).
// Dimensions of a diagonal Gaussian factorize, so any contiguous slice of a
// chunk has a well-defined marginal density.
double logp(const PolicyParams& params, const Eigen::VectorXd& obs,
            const Eigen::VectorXd& action, int first_dim = 0);

Eigen::VectorXd grad_logp(const PolicyParams& params,
                          const Eigen::VectorXd& obs,
                          const Eigen::VectorXd& action, int first_dim = 0);

// Per-dimension pieces of the squashed-Gaussian log-density evaluated from a
// precomputed mean. Used by the trainer to batch several steps per forward.
struct SliceDensity {
  double logp = 0.0;
  Eigen::VectorXd d_mean;     // d logp / d mu over the slice
  Eigen::VectorXd d_log_std;  // d logp / d log_std over the slice
};
SliceDensity slice_density(const PolicyParams& params,
                           const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& action, int first_dim);

// Closed-form KL(pi_theta || pi_ref) between the pre-squash Gaussians, averaged
// over the observations.
double kl_divergence(const PolicyParams& params, const ReferencePolicy& ref,
                     const std::vector<Eigen::VectorXd>& obs_batch);

// KL value and its gradient with respect to params.
double kl_divergence_grad(const PolicyParams& params,
                          const ReferencePolicy& ref,
                          const std::vector<Eigen::VectorXd>& obs_batch,
                          Eigen::VectorXd& grad);

// Sum over dims of KL(N(mu_a, s_a) || N(mu_b, s_b)).
double gaussian_kl(const Eigen::VectorXd& mean_a, const Eigen::VectorXd& log_std_a,
                   const Eigen::VectorXd& mean_b,
                   const Eigen::VectorXd& log_std_b);

}  // namespace smoothrl

#endif  // SMOOTHRL_POLICY_HPP_
