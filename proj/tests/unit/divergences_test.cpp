#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rpg/divergences.hpp"
#include "rpg/errors.hpp"

namespace {

using rpg::Direction;
using rpg::DivergenceSpec;
using rpg::Estimator;
using rpg::FiniteMeasure;
using rpg::Normalization;
using rpg::SoftmaxPolicy;
using Vec = std::vector<double>;

TEST(KlExact, HandValues) {
  const Vec p{0.2, 0.3, 0.5};
  EXPECT_EQ(rpg::kl_exact(p, p), 0.0);
  EXPECT_NEAR(rpg::kl_exact(Vec{1, 0}, Vec{0.5, 0.5}), std::log(2.0), 1e-12);
  EXPECT_NEAR(rpg::kl_exact(Vec{0.5, 0.5}, Vec{0.9, 0.1}), 0.510826, 1e-6);
  EXPECT_NEAR(rpg::kl_exact(Vec{0.5, 0.5}, Vec{0.9, 0.1}),
              0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1), 1e-15);
}

TEST(KlExact, SupportViolation) {
  EXPECT_THROW(rpg::kl_exact(Vec{0.5, 0.5}, Vec{1, 0}), rpg::SupportError);
  EXPECT_THROW(rpg::kl_exact(Vec{0.5, 0.5}, Vec{1}), rpg::DomainError);
}

TEST(UklExact, ForwardIdentityWithMass) {
  // pi_old = [2, 2], pi_theta uniform.
  const Vec old{2, 2};
  const Vec p{0.5, 0.5};
  const double z = 4.0;
  const double expected = z * rpg::kl_exact(Vec{0.5, 0.5}, p) + z * std::log(z) + (1 - z);
  EXPECT_NEAR(rpg::ukl_exact(old, p), expected, 1e-12);
  EXPECT_NEAR(rpg::ukl_exact(old, p), 4 * std::log(4.0) - 3, 1e-12);
}

TEST(UklExact, ReverseWithMassTwo) {
  const FiniteMeasure old({0.6, 1.4});
  const auto policy = SoftmaxPolicy::from_probs(rpg::normalize(old).probs);
  const DivergenceSpec spec{Direction::Reverse, Normalization::Unnormalized};
  EXPECT_NEAR(rpg::divergence_exact(spec, policy, old), 1 - std::log(2.0), 1e-12);
  EXPECT_NEAR(rpg::divergence_exact(spec, policy, old), 0.306853, 1e-6);
}

TEST(UklExact, CollapsesToKlWhenNormalized) {
  rpg_test::InstanceGen gen(21);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = gen.size(2, 8);
    const auto a = gen.measure(n, 1.0);
    const auto b = gen.measure(n, 1.0);
    EXPECT_NEAR(rpg::ukl_exact(a, b), rpg::kl_exact(a, b), 1e-12);
  }
}

TEST(Divergence, NonNegativeAndZeroAtIdentity) {
  rpg_test::InstanceGen gen(22);
  for (int t = 0; t < 200; ++t) {
    const auto in = gen.instance();
    const FiniteMeasure old(in.old);
    const SoftmaxPolicy policy(in.logits);
    for (auto d : {Direction::Forward, Direction::Reverse}) {
      for (auto n : {Normalization::Normalized, Normalization::Unnormalized}) {
        const double v = rpg::divergence_exact({d, n}, policy, old);
        EXPECT_GE(v, -1e-12);
        EXPECT_NEAR(v, rpg_test::divergence_oracle(d, n, policy.probs(), in.old), 1e-12);
      }
    }
    const auto same = SoftmaxPolicy::from_probs(rpg::normalize(old).probs);
    EXPECT_NEAR(rpg::divergence_exact({Direction::Reverse, Normalization::Normalized}, same, old), 0.0,
                1e-12);
    EXPECT_NEAR(rpg::divergence_exact({Direction::Forward, Normalization::Normalized}, same, old), 0.0,
                1e-12);
  }
}

TEST(DivergenceSpec, Names) {
  EXPECT_EQ((DivergenceSpec{Direction::Forward, Normalization::Normalized}.name()), "FKL");
  EXPECT_EQ((DivergenceSpec{Direction::Reverse, Normalization::Normalized}.name()), "RKL");
  EXPECT_EQ((DivergenceSpec{Direction::Forward, Normalization::Unnormalized}.name()), "UFKL");
  EXPECT_EQ((DivergenceSpec{Direction::Reverse, Normalization::Unnormalized}.name()), "URKL");
}

TEST(KEstimator, Values) {
  EXPECT_EQ(rpg::k_estimator(Estimator::K3, 1.0), 0.0);
  EXPECT_NEAR(rpg::k_estimator(Estimator::K3, 2.0), 0.306853, 1e-6);
  EXPECT_NEAR(rpg::k_estimator(Estimator::K3, 2.0), 1 - std::log(2.0), 1e-15);
  EXPECT_NEAR(rpg::k_estimator(Estimator::K3, 0.5), 0.193147, 1e-6);
  EXPECT_NEAR(rpg::k_estimator(Estimator::K1, 2.0), -std::log(2.0), 1e-15);
  EXPECT_NEAR(rpg::k_estimator(Estimator::K2, 2.0), 0.5 * std::log(2.0) * std::log(2.0), 1e-15);
  EXPECT_THROW(rpg::k_estimator(Estimator::K3, 0.0), rpg::DomainError);
  EXPECT_THROW(rpg::k_estimator(Estimator::K1, -1.0), rpg::DomainError);
}

TEST(KEstimator, K3NonNegative) {
  for (double y = 1e-3; y < 50; y *= 1.37) {
    EXPECT_GE(rpg::k_estimator(Estimator::K3, y), 0.0);
    EXPECT_NEAR(rpg::k_estimator_from_log(Estimator::K3, std::log(y)),
                rpg::k_estimator(Estimator::K3, y), 1e-12 * std::max(1.0, y));
  }
}

TEST(K3Expectation, RatioOneIsZero) {
  EXPECT_EQ(rpg::k3_expectation_exact(Vec{0.3, 0.7}, Vec{1, 1}), 0.0);
  EXPECT_THROW(rpg::k3_expectation_exact(Vec{0.3, 0.7}, Vec{1, 0}), rpg::DomainError);
}

TEST(K3Expectation, MatchesUklInBothDirections) {
  rpg_test::InstanceGen gen(23);
  for (int t = 0; t < 200; ++t) {
    const auto in = gen.instance();
    const Vec p = rpg_test::softmax(in.logits);
    const double z = in.mass();
    Vec old_over_p(p.size());
    Vec p_over_old(p.size());
    Vec old_norm(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      old_over_p[i] = in.old[i] / p[i];
      p_over_old[i] = p[i] / in.old[i];
      old_norm[i] = in.old[i] / z;
    }
    EXPECT_NEAR(rpg::k3_expectation_exact(p, old_over_p), rpg_test::generalized_kl(p, in.old), 1e-12);
    EXPECT_NEAR(z * rpg::k3_expectation_exact(old_norm, p_over_old),
                rpg_test::generalized_kl(in.old, p), 1e-12);
  }
}

TEST(DivergenceMc, OnPolicyNearZero) {
  const FiniteMeasure old({0.2, 0.5, 0.3});
  const auto policy = SoftmaxPolicy::from_probs(old.weights());
  const Vec rewards(3, 0.0);
  const auto batch = rpg::sample_batch(old, rewards, 5000, 1);
  for (auto k : {Estimator::K1, Estimator::K2, Estimator::K3}) {
    const auto e =
        rpg::divergence_mc({Direction::Reverse, Normalization::Normalized}, k, batch, policy, old);
    EXPECT_LE(std::abs(e.estimate), 3 * e.standard_error + 1e-12);
  }
}

TEST(DivergenceMc, K3MatchesEnumerationForAllSpecs) {
  const FiniteMeasure old({0.5, 0.9, 0.6});
  const SoftmaxPolicy policy({0.3, -0.4, 0.8});
  const Vec rewards(3, 0.0);
  const auto batch = rpg::sample_batch(old, rewards, 100000, 77);
  for (auto d : {Direction::Forward, Direction::Reverse}) {
    for (auto n : {Normalization::Normalized, Normalization::Unnormalized}) {
      const DivergenceSpec spec{d, n};
      const auto e = rpg::divergence_mc(spec, Estimator::K3, batch, policy, old);
      const double exact = rpg::divergence_exact(spec, policy, old);
      EXPECT_NEAR(rpg::estimator_expectation_exact(spec, Estimator::K3, policy, old), exact, 1e-12)
          << spec.name();
      EXPECT_LE(std::abs(e.estimate - exact), 3 * e.standard_error) << spec.name();
    }
  }
}

TEST(DivergenceMc, K1UnbiasedForKlButNotUkl) {
  const FiniteMeasure old({0.5, 0.9, 0.6});
  const SoftmaxPolicy policy({0.3, -0.4, 0.8});
  const DivergenceSpec kl{Direction::Forward, Normalization::Normalized};
  EXPECT_NEAR(rpg::estimator_expectation_exact(kl, Estimator::K1, policy, old),
              rpg::divergence_exact(kl, policy, old), 1e-12);
  const DivergenceSpec ukl{Direction::Forward, Normalization::Unnormalized};
  // Missing mass term: E[Z k1] = UKL - (1 - Z).
  EXPECT_NEAR(rpg::estimator_expectation_exact(ukl, Estimator::K1, policy, old),
              rpg::divergence_exact(ukl, policy, old) - (1.0 - old.total_mass()), 1e-12);
}

TEST(DivergenceMc, K2NearIdenticalPair) {
  // k2 is biased for KL; on a close pair the bias is third order and far
  // below the sampling error at this n.
  const FiniteMeasure old({0.3, 0.3, 0.4});
  const SoftmaxPolicy policy({std::log(0.31), std::log(0.29), std::log(0.4)});
  const DivergenceSpec spec{Direction::Forward, Normalization::Normalized};
  const Vec rewards(3, 0.0);
  const auto batch = rpg::sample_batch(old, rewards, 100000, 5);
  const auto e = rpg::divergence_mc(spec, Estimator::K2, batch, policy, old);
  const double exact = rpg::divergence_exact(spec, policy, old);
  const double bias = rpg::estimator_expectation_exact(spec, Estimator::K2, policy, old) - exact;
  EXPECT_LT(std::abs(bias), 1e-5);
  EXPECT_LE(std::abs(e.estimate - exact), 3 * e.standard_error + std::abs(bias));
}

TEST(DivergenceMc, ZeroSupportSampleRejected) {
  const FiniteMeasure old({1.0, 0.0});
  rpg::Batch b;
  b.samples.push_back({1, 0.0, 0.0});
  b.weights.push_back(1.0);
  EXPECT_THROW(rpg::divergence_mc({Direction::Forward, Normalization::Normalized}, Estimator::K3, b,
                                  SoftmaxPolicy::uniform(2), old),
               rpg::ZeroSupportSample);
}

}  // namespace
