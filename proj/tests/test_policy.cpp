#include <cmath>
#include <random>

#include "doctest.h"
#include "smoothrl/errors.hpp"
#include "smoothrl/policy.hpp"
#include "test_util.hpp"

using namespace smoothrl;
using smoothrl::testing::rel_err;

namespace {

PolicyShape small_shape() { return PolicyShape{5, 4, {4}, 0.2}; }

Eigen::VectorXd random_obs(Rng& rng, int n) {
  return smoothrl::testing::uniform_vec(rng, n, -1.0, 1.0);
}

// Random non-trivial parameters so every layer matters.
PolicyParams jittered(const PolicyShape& shape, std::uint64_t seed, double scale = 0.5) {
  PolicyParams p = init_policy(shape, seed);
  Rng rng(seed + 100);
  std::normal_distribution<double> n(0.0, scale);
  Eigen::VectorXd flat = p.to_vector();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] += n(rng);
  p.from_vector(flat);
  p.clamp_log_std();
  return p;
}

}  // namespace

TEST_CASE("parameter layout round trip") {
  const auto p = jittered(small_shape(), 1);
  CHECK(p.num_params() == (5 * 4 + 4) + (4 * 4 + 4) + 4);
  PolicyParams q = init_policy(small_shape(), 2);
  q.from_vector(p.to_vector());
  CHECK(q.to_vector() == p.to_vector());
  CHECK_THROWS_AS(q.from_vector(Eigen::VectorXd::Zero(3)), ContractViolation);
  CHECK(p.all_finite());
  PolicyParams bad = p;
  bad.log_std[0] = NAN;
  CHECK_FALSE(bad.all_finite());
}

TEST_CASE("init_policy is deterministic and has bounded mean actions") {
  const auto a = init_policy(small_shape(), 7), b = init_policy(small_shape(), 7);
  CHECK(a.to_vector() == b.to_vector());
  CHECK(a.to_vector() != init_policy(small_shape(), 8).to_vector());
  CHECK(a.log_std.isApproxToConstant(-0.5));
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto m = mean_action(a, random_obs(rng, 5));
    CHECK(m.cwiseAbs().maxCoeff() < 0.2);
  }
}

TEST_CASE("act and logp agree") {
  const auto p = jittered(small_shape(), 3);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto obs = random_obs(rng, 5);
    const auto s = act(p, obs, rng);
    CHECK(s.action.cwiseAbs().maxCoeff() < 0.2);
    CHECK(std::abs(logp(p, obs, s.action) - s.logp) < 1e-8 * std::max(1.0, std::abs(s.logp)));
    CHECK(s.dim_logp.sum() == doctest::Approx(s.logp));
    // Slices factorize.
    CHECK(logp(p, obs, s.action.head(2), 0) + logp(p, obs, s.action.tail(2), 2) ==
          doctest::Approx(s.logp).epsilon(1e-10));
  }
}

TEST_CASE("squashed density integrates to one") {
  const PolicyShape shape{1, 1, {}, 0.7};
  PolicyParams p = zero_policy(shape, -0.3);
  p.layers.back().bias[0] = 0.4;
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(1);
  const int n = 200000;
  const double h = 2 * 0.7 / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd a(1);
    a[0] = -0.7 + (i + 0.5) * h;
    total += std::exp(logp(p, obs, a)) * h;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("logp falls off away from the mean") {
  const PolicyShape shape{1, 1, {}, 1.0};
  PolicyParams p = zero_policy(shape, -1.0);
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(1);
  double prev = 1e300;
  for (double a = 0.0; a < 0.95; a += 0.05) {
    const double lp = logp(p, obs, Eigen::VectorXd::Constant(1, a));
    CHECK(lp < prev);
    prev = lp;
  }
  // Symmetric around a zero mean.
  CHECK(logp(p, obs, Eigen::VectorXd::Constant(1, 0.3)) ==
        doctest::Approx(logp(p, obs, Eigen::VectorXd::Constant(1, -0.3))));
}

TEST_CASE("grad_logp matches central differences") {
  const auto shape = small_shape();
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = jittered(shape, 20 + trial);
    const auto obs = random_obs(rng, 5);
    const auto a = act(p, obs, rng).action;
    for (int first : {0, 2}) {
      const Eigen::VectorXd slice = a.segment(first, 2);
      const auto g = grad_logp(p, obs, slice, first);
      const Eigen::VectorXd x = p.to_vector();
      Eigen::VectorXd fd(x.size());
      const double h = 1e-6;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        PolicyParams pp = p, pm = p;
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        pp.from_vector(xp);
        pm.from_vector(xm);
        fd[i] = (logp(pp, obs, slice, first) - logp(pm, obs, slice, first)) / (2 * h);
      }
      CHECK(rel_err(g, fd) < 1e-6);
    }
  }
}

TEST_CASE("log_std gradient is -1 at the mean action") {
  const auto p = jittered(small_shape(), 5);
  Rng rng(1);
  const auto obs = random_obs(rng, 5);
  const auto g = grad_logp(p, obs, mean_action(p, obs));
  CHECK(g.tail(4).isApproxToConstant(-1.0, 1e-9));
}

TEST_CASE("boundary actions have no density") {
  const auto p = init_policy(small_shape(), 1);
  const Eigen::VectorXd obs = Eigen::VectorXd::Zero(5);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(4);
  a[1] = 0.2;
  CHECK_THROWS_AS(logp(p, obs, a), BoundaryAction);
  a[1] = -0.3;
  CHECK_THROWS_AS(grad_logp(p, obs, a), BoundaryAction);
  CHECK_THROWS_AS(logp(p, obs, Eigen::VectorXd::Zero(3), 2), ContractViolation);
  CHECK_THROWS_AS(logp(p, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(4)), ContractViolation);
}

TEST_CASE("zero weights give a state-independent, centered policy") {
  const auto p = zero_policy(small_shape());
  Rng rng(2);
  for (int i = 0; i < 5; ++i) CHECK(mean_action(p, random_obs(rng, 5)).isZero());
}

TEST_CASE("KL divergence") {
  const auto shape = small_shape();
  const auto p = jittered(shape, 11);
  Rng rng(3);
  std::vector<Eigen::VectorXd> obs;
  for (int i = 0; i < 6; ++i) obs.push_back(random_obs(rng, 5));

  CHECK(kl_divergence(p, ReferencePolicy(p), obs) == 0.0);

  SUBCASE("non-negative") {
    for (int s = 0; s < 10; ++s) {
      CHECK(kl_divergence(p, ReferencePolicy(jittered(shape, 30 + s)), obs) >= 0.0);
    }
  }
  SUBCASE("closed form against Monte Carlo") {
    // Equal variances and different ones.
    for (double ref_log_std : {-0.5, 0.1}) {
      Eigen::VectorXd ma(2), la(2), mb(2), lb(2);
      ma << 0.3, -0.2;
      la << -0.5, -0.2;
      mb << -0.1, 0.4;
      lb << ref_log_std, ref_log_std;
      const double exact = gaussian_kl(ma, la, mb, lb);
      Rng r(17);
      std::normal_distribution<double> n(0, 1);
      const int m = 200000;
      double sum = 0;
      for (int i = 0; i < m; ++i) {
        for (int d = 0; d < 2; ++d) {
          const double x = ma[d] + std::exp(la[d]) * n(r);
          auto logn = [&](double mu, double ls) {
            const double z = (x - mu) / std::exp(ls);
            return -0.5 * z * z - ls;
          };
          sum += logn(ma[d], la[d]) - logn(mb[d], lb[d]);
        }
      }
      CHECK(sum / m == doctest::Approx(exact).epsilon(0.02));
    }
  }
  SUBCASE("gradient matches central differences") {
    const ReferencePolicy ref(jittered(shape, 12));
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p.num_params());
    const double v = kl_divergence_grad(p, ref, obs, g);
    CHECK(v == doctest::Approx(kl_divergence(p, ref, obs)));
    const Eigen::VectorXd x = p.to_vector();
    Eigen::VectorXd fd(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      PolicyParams pp = p, pm = p;
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      pp.from_vector(xp);
      pm.from_vector(xm);
      fd[i] = (kl_divergence(pp, ref, obs) - kl_divergence(pm, ref, obs)) / 2e-6;
    }
    CHECK(rel_err(g, fd) < 1e-6);
  }
}

TEST_CASE("score function has zero mean") {
  const auto p = jittered(small_shape(), 13, 0.2);
  Rng rng(6);
  const auto obs = random_obs(rng, 5);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p.num_params());
  const int n = 10000;
  double scale = 0;
  for (int i = 0; i < n; ++i) {
    const auto g = grad_logp(p, obs, act(p, obs, rng).action);
    mean += g / n;
    scale += g.squaredNorm() / n;
  }
  // Standard error of the mean is sqrt(E||g||^2 / n).
  CHECK(mean.norm() < 5.0 * std::sqrt(scale / n));
}

TEST_CASE("small log_std concentrates samples at the mean") {
  PolicyParams p = jittered(small_shape(), 14, 0.1);
  p.log_std.setConstant(kLogStdMin);
  Rng rng(7);
  const auto obs = random_obs(rng, 5);
  const auto m = mean_action(p, obs);
  for (int i = 0; i < 100; ++i) CHECK((act(p, obs, rng).action - m).cwiseAbs().maxCoeff() < 0.01);
  p.log_std.setConstant(-20.0);
  p.clamp_log_std();
  CHECK(p.log_std.isApproxToConstant(kLogStdMin));
}

TEST_CASE("sampling is deterministic under a fixed seed") {
  const auto p = jittered(small_shape(), 15);
  const Eigen::VectorXd obs = Eigen::VectorXd::Constant(5, 0.1);
  Rng a(99), b(99);
  for (int i = 0; i < 10; ++i) CHECK(act(p, obs, a).action == act(p, obs, b).action);
}
