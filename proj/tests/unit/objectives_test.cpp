#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <string>

#include "oracles.hpp"
#include "rpg/divergences.hpp"
#include "rpg/errors.hpp"
#include "rpg/objectives.hpp"

namespace {

using rpg::Direction;
using rpg::FiniteMeasure;
using rpg::LossStyle;
using rpg::Normalization;
using rpg::RpgConfig;
using rpg::SoftmaxPolicy;
using rpg::Tape;
using rpg::TapePolicy;
using rpg::Var;
using Vec = std::vector<double>;

RpgConfig make(Direction d, Normalization n, LossStyle s, double beta) {
  RpgConfig c;
  c.direction = d;
  c.normalization = n;
  c.style = s;
  c.beta = beta;
  return c;
}

struct LossAndGrad {
  double loss;
  Vec grad;
};

LossAndGrad surrogate(const RpgConfig& cfg, const Vec& logits, const rpg::Batch& batch,
                      const FiniteMeasure& old, double baseline) {
  Tape t(logits);
  const TapePolicy tp(t);
  const Var loss = rpg::surrogate_loss(tp, cfg, batch, old, baseline);
  return {loss.value(), t.backward(loss)};
}

TEST(RpgConfig, NamesAndVariants) {
  const auto all = rpg::all_variants(0.1);
  ASSERT_EQ(all.size(), 8u);
  std::set<std::string> names;
  for (const auto& c : all) names.insert(c.name());
  EXPECT_EQ(names.size(), 8u);
  EXPECT_TRUE(names.count("URKL/reinforce"));
  EXPECT_TRUE(names.count("FKL/differentiable"));
  RpgConfig bad;
  bad.beta = -1;
  EXPECT_THROW(bad.validate(), rpg::DomainError);
}

TEST(TapePolicy, LogProbsMatchSoftmax) {
  const Vec logits{0.1, 2.0, -1.0, 30.0};
  Tape t(logits);
  const TapePolicy tp(t);
  const SoftmaxPolicy p(logits);
  for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(tp.log_prob(x).value(), p.log_prob(x), 1e-12);
}

TEST(ExactObjective, BetaZeroIsExpectedReward) {
  const Vec rewards{1, -2, 0.5};
  const SoftmaxPolicy p({0.2, 0.1, -0.4});
  const FiniteMeasure old({0.5, 0.3, 0.9});
  double er = 0.0;
  for (std::size_t x = 0; x < 3; ++x) er += p.prob(x) * rewards[x];
  for (const auto& cfg : rpg::all_variants(0.0)) {
    EXPECT_NEAR(rpg::exact_objective(cfg, p, old, rewards), er, 1e-14);
  }
}

TEST(ExactObjective, OnPolicyNormalizedReference) {
  const Vec rewards{1, -2, 0.5};
  const FiniteMeasure old({0.25, 0.45, 0.3});
  const auto p = SoftmaxPolicy::from_probs(old.weights());
  const double er = 0.25 * 1 - 0.45 * 2 + 0.3 * 0.5;
  for (const auto& cfg : rpg::all_variants(0.7)) {
    EXPECT_NEAR(rpg::exact_objective(cfg, p, old, rewards), er, 1e-12) << cfg.name();
  }
}

TEST(ExactObjective, MatchesIndependentEnumeration) {
  rpg_test::InstanceGen gen(31);
  for (int t = 0; t < 100; ++t) {
    const auto in = gen.instance();
    const SoftmaxPolicy p(in.logits);
    const FiniteMeasure old(in.old);
    for (const auto& cfg : rpg::all_variants(in.beta)) {
      EXPECT_NEAR(rpg::exact_objective(cfg, p, old, in.rewards),
                  rpg_test::objective_oracle(cfg.direction, cfg.normalization, in.beta, in.logits,
                                             in.old, in.rewards),
                  1e-12);
    }
  }
  // Fixed N=3 RKL instance, frozen from the oracle.
  const Vec logits{0.3, -0.2, 0.9};
  const Vec old{0.2, 0.5, 0.3};
  const Vec rewards{1.0, 0.0, -0.5};
  const auto cfg = make(Direction::Reverse, Normalization::Normalized, LossStyle::Reinforce, 0.5);
  const double oracle = rpg_test::objective_oracle(cfg.direction, cfg.normalization, 0.5, logits, old,
                                                   rewards);
  EXPECT_NEAR(rpg::exact_objective(cfg, SoftmaxPolicy(logits), FiniteMeasure(old), rewards), oracle,
              1e-14);
}

TEST(ExactGradient, StationaryOnPolicyWithConstantReward) {
  const FiniteMeasure old({0.1, 0.6, 0.3});
  const auto p = SoftmaxPolicy::from_probs(old.weights());
  const Vec rewards(3, 0.7);
  for (const auto& cfg : rpg::all_variants(0.4)) {
    for (double g : rpg::exact_gradient(cfg, p, old, rewards)) EXPECT_NEAR(g, 0.0, 1e-12) << cfg.name();
  }
}

TEST(ExactGradient, MatchesFiniteDifferences) {
  rpg_test::InstanceGen gen(32);
  for (int t = 0; t < 50; ++t) {
    const auto in = gen.instance(5, 5);
    const FiniteMeasure old(in.old);
    for (const auto& cfg : rpg::all_variants(in.beta)) {
      const Vec g = rpg::exact_gradient(cfg, SoftmaxPolicy(in.logits), old, in.rewards);
      const Vec fd = rpg_test::fd_gradient_richardson(
          [&](const Vec& th) {
            return rpg_test::objective_oracle(cfg.direction, cfg.normalization, cfg.beta, th, in.old,
                                              in.rewards);
          },
          in.logits);
      for (std::size_t j = 0; j < g.size(); ++j) {
        EXPECT_TRUE(rpg_test::close_rel(g[j], fd[j], 1e-6)) << cfg.name() << " " << g[j] << " " << fd[j];
      }
    }
  }
}

TEST(ExactGradient, UrklAscentReducesDivergence) {
  const FiniteMeasure old({0.4, 0.9, 0.2, 0.5});
  const SoftmaxPolicy p({0.5, -0.3, 0.8, 0.0});
  const Vec rewards(4, 0.0);
  const auto cfg = make(Direction::Reverse, Normalization::Unnormalized, LossStyle::Reinforce, 0.3);
  const Vec g = rpg::exact_gradient(cfg, p, old, rewards);
  Vec next(p.logits().begin(), p.logits().end());
  for (std::size_t j = 0; j < next.size(); ++j) next[j] += 0.01 * g[j];
  const rpg::DivergenceSpec spec = cfg.divergence();
  EXPECT_LT(rpg::divergence_exact(spec, SoftmaxPolicy(next), old), rpg::divergence_exact(spec, p, old));
}

TEST(ExactGradient, RequiresFullSupport) {
  const Vec rewards{1, 1};
  EXPECT_THROW(rpg::exact_gradient(RpgConfig{}, SoftmaxPolicy::uniform(2), FiniteMeasure({1, 0}), rewards),
               rpg::SupportError);
}

TEST(SurrogateLoss, BetaZeroIsImportanceSampledReinforce) {
  const FiniteMeasure old({0.3, 0.5, 0.4});
  const Vec logits{0.2, -0.1, 0.4};
  const Vec rewards{1.0, -0.5, 2.0};
  const auto batch = rpg::sample_batch(old, rewards, 64, 9);
  const double b = batch.mean_reward();
  const SoftmaxPolicy p(logits);
  for (auto d : {Direction::Forward, Direction::Reverse}) {
    for (auto n : {Normalization::Normalized, Normalization::Unnormalized}) {
      const auto cfg = make(d, n, LossStyle::Differentiable, 0.0);
      double expected = 0.0;
      for (const auto& s : batch.samples) {
        const double denom = n == Normalization::Unnormalized ? old.weight(s.outcome)
                                                              : std::exp(s.log_pi_old);
        expected -= p.prob(s.outcome) / denom * (s.reward - b) / 64.0;
      }
      if (n == Normalization::Unnormalized) expected *= old.total_mass();
      EXPECT_NEAR(surrogate(cfg, logits, batch, old, b).loss, expected, 1e-13);
    }
  }
}

TEST(SurrogateLoss, UrklEnumerationValueAndGradient) {
  const FiniteMeasure old({0.7, 0.2, 0.5, 0.4});
  const Vec logits{0.1, 0.6, -0.5, 0.2};
  const Vec rewards{0.3, 1.0, -0.2, 0.5};
  const double beta = 0.25;
  const auto cfg = make(Direction::Reverse, Normalization::Unnormalized, LossStyle::Differentiable, beta);
  const auto batch = rpg::enumeration_batch(old, rewards);
  const auto r = surrogate(cfg, logits, batch, old, 0.0);
  const SoftmaxPolicy p(logits);
  const double j = rpg::exact_objective(cfg, p, old, rewards);
  EXPECT_NEAR(r.loss, -j - beta * old.total_mass(), 1e-12);
  const Vec g = rpg::exact_gradient(cfg, p, old, rewards);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(r.grad[k], -g[k], 1e-10);
}

TEST(SurrogateLoss, ReinforceAndDifferentiableGradientsAgree) {
  rpg_test::InstanceGen gen(33);
  for (int t = 0; t < 50; ++t) {
    const auto in = gen.instance();
    const FiniteMeasure old(in.old);
    const auto batch = rpg::sample_batch(old, in.rewards, 32, gen.rng()());
    const double b = batch.mean_reward();
    for (auto d : {Direction::Forward, Direction::Reverse}) {
      for (auto n : {Normalization::Normalized, Normalization::Unnormalized}) {
        const auto diff = surrogate(make(d, n, LossStyle::Differentiable, in.beta), in.logits, batch, old, b);
        const auto rf = surrogate(make(d, n, LossStyle::Reinforce, in.beta), in.logits, batch, old, b);
        for (std::size_t k = 0; k < diff.grad.size(); ++k) EXPECT_NEAR(diff.grad[k], rf.grad[k], 1e-10);
      }
    }
  }
}

TEST(SurrogateLoss, EnumerationGradientIsMinusExact) {
  rpg_test::InstanceGen gen(34);
  for (int t = 0; t < 50; ++t) {
    const auto in = gen.instance();
    const FiniteMeasure old(in.old);
    const auto batch = rpg::enumeration_batch(old, in.rewards);
    for (const auto& cfg : rpg::all_variants(in.beta)) {
      const Vec g = rpg::exact_gradient(cfg, SoftmaxPolicy(in.logits), old, in.rewards);
      const auto r = surrogate(cfg, in.logits, batch, old, 0.0);
      for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(r.grad[k], -g[k], 1e-10) << cfg.name();
    }
  }
}

TEST(SurrogateLoss, BaselineInvarianceOnEnumeration) {
  rpg_test::InstanceGen gen(35);
  for (int t = 0; t < 30; ++t) {
    const auto in = gen.instance();
    const FiniteMeasure old(in.old);
    const auto batch = rpg::enumeration_batch(old, in.rewards);
    for (const auto& cfg : rpg::all_variants(in.beta)) {
      if (cfg.style != LossStyle::Reinforce) continue;
      const auto base = surrogate(cfg, in.logits, batch, old, 0.0);
      const auto shifted = surrogate(cfg, in.logits, batch, old, gen.uniform(-3, 3));
      for (std::size_t k = 0; k < base.grad.size(); ++k) EXPECT_NEAR(base.grad[k], shifted.grad[k], 1e-10);
    }
  }
}

TEST(SurrogateLoss, IncludeZOffScalesGradient) {
  const FiniteMeasure old({0.9, 0.6, 0.8});
  const Vec logits{0.3, 0.0, -0.2};
  const Vec rewards{1, 0, 2};
  auto cfg = make(Direction::Forward, Normalization::Unnormalized, LossStyle::Reinforce, 0.5);
  const auto batch = rpg::enumeration_batch(old, rewards);
  const auto with_z = surrogate(cfg, logits, batch, old, 0.0);
  cfg.include_z = false;
  const auto without_z = surrogate(cfg, logits, batch, old, 0.0);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(without_z.grad[k] * old.total_mass(), with_z.grad[k], 1e-14);
  }
}

TEST(SurrogateLoss, ZeroSupportSampleRejected) {
  const FiniteMeasure old({1.0, 0.0});
  rpg::Batch b;
  b.samples.push_back({1, 0.0, -INFINITY});
  b.weights.push_back(1.0);
  Tape t(Vec{0.0, 0.0});
  const TapePolicy tp(t);
  EXPECT_THROW(rpg::surrogate_loss(tp, RpgConfig{}, b, old, 0.0), rpg::ZeroSupportSample);
}

TEST(RegularizedAdvantage, Formulas) {
  rpg::OutcomeSample s{0, 1.0, 0.0};
  auto urkl = make(Direction::Reverse, Normalization::Unnormalized, LossStyle::Differentiable, 0.1);
  auto a = rpg::regularized_advantage(urkl, s, 1.0, 0.0);
  EXPECT_EQ(a.value, 1.0);
  EXPECT_EQ(a.variant, rpg::AdvantageVariant::URKL);
  EXPECT_FALSE(a.simplified);

  auto rkl = make(Direction::Reverse, Normalization::Normalized, LossStyle::Differentiable, 0.1);
  a = rpg::regularized_advantage(rkl, s, std::exp(1.0), 0.5);
  EXPECT_NEAR(a.value, 0.3, 1e-15);
  EXPECT_EQ(a.variant, rpg::AdvantageVariant::RKL);

  auto ufkl = make(Direction::Forward, Normalization::Unnormalized, LossStyle::Differentiable, 0.1);
  for (double w : {0.2, 1.0, 7.0}) {
    a = rpg::regularized_advantage(ufkl, s, w, 0.25);
    EXPECT_EQ(a.value, 0.75);
    EXPECT_TRUE(a.simplified);
    EXPECT_EQ(a.variant, rpg::AdvantageVariant::UFKLSimplified);
  }
  EXPECT_THROW(rpg::regularized_advantage(ufkl, s, 0.0, 0.0), rpg::DomainError);
}

TEST(RegularizedAdvantage, NodeDetachSwitch) {
  const Vec logits{0.4, -0.1};
  auto cfg = make(Direction::Reverse, Normalization::Unnormalized, LossStyle::Differentiable, 0.5);
  Tape t(logits);
  const TapePolicy tp(t);
  const Var log_w = tp.log_prob(0) - std::log(0.3);
  const Var live = rpg::regularized_advantage_node(cfg, 1.0, log_w);
  cfg.detach_advantage = true;
  const Var frozen = rpg::regularized_advantage_node(cfg, 1.0, log_w);
  EXPECT_EQ(live.value(), frozen.value());
  EXPECT_NE(t.backward(live)[0], 0.0);
  EXPECT_EQ(t.backward(frozen), (Vec{0.0, 0.0}));
}

TEST(Gppt, ConstantFunctionHasZeroGradient) {
  const SoftmaxPolicy p({0.3, -1.0, 0.5});
  const auto g = rpg::gppt_gradient(p, [](const TapePolicy& tp, rpg::Outcome) {
    return tp.tape().constant(1.0);
  });
  for (double v : g) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Gppt, MatchesFiniteDifferences) {
  const Vec logits{0.3, -1.0, 0.5, 0.1};
  const Vec r{1.0, 2.0, -1.0, 0.5};
  const std::vector<rpg::OutcomeFunction> fs = {
      [&](const TapePolicy& tp, rpg::Outcome x) { return tp.tape().constant(r[x]); },
      [](const TapePolicy& tp, rpg::Outcome x) { return tp.log_prob(x); },
      [&](const TapePolicy& tp, rpg::Outcome x) { return rpg::exp(tp.logit(x)) * r[x] - tp.log_prob(0); },
  };
  for (const auto& f : fs) {
    const auto g = rpg::gppt_gradient(SoftmaxPolicy(logits), f);
    const auto fd = rpg_test::fd_gradient_richardson(
        [&](const Vec& th) { return rpg::expectation(SoftmaxPolicy(th), f); }, logits);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_TRUE(rpg_test::close_rel(g[j], fd[j], 1e-6));
  }
}

TEST(Fisher, UniformTwo) {
  const auto f = rpg::fisher_matrix(SoftmaxPolicy::uniform(2));
  EXPECT_NEAR(f(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(f(0, 1), -0.25, 1e-15);
  EXPECT_NEAR(f(1, 0), -0.25, 1e-15);
  EXPECT_NEAR(f(1, 1), 0.25, 1e-15);
}

TEST(Fisher, RowSumsVanishAndMatchKlHessian) {
  rpg_test::InstanceGen gen(36);
  for (int t = 0; t < 20; ++t) {
    const Vec logits = gen.logits(gen.size(2, 6));
    const auto f = rpg::fisher_matrix(SoftmaxPolicy(logits));
    const Vec p0 = rpg_test::softmax(logits);
    const auto h = rpg_test::fd_hessian(
        [&](const Vec& th) { return rpg_test::generalized_kl(p0, rpg_test::softmax(th)); }, logits);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      EXPECT_NEAR(f.row(i).sum(), 0.0, 1e-12);
      for (Eigen::Index j = 0; j < f.cols(); ++j) {
        EXPECT_NEAR(f(i, j), p0[i] * ((i == j) ? 1.0 : 0.0) - p0[i] * p0[j], 1e-14);
        EXPECT_NEAR(f(i, j), h[i][j], 1e-8);
      }
    }
  }
}

TEST(Npg, ZeroGradient) {
  const Vec g(3, 0.0);
  for (double v : rpg::npg_direction(SoftmaxPolicy({0.1, 0.2, 0.3}), g, 0.5)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(rpg::npg_direction(SoftmaxPolicy({0.1, 0.2, 0.3}), g, 0.0), rpg::DomainError);
}

TEST(Npg, MaximizesQuadraticModelAndScalesWithBeta) {
  rpg_test::InstanceGen gen(37);
  for (int t = 0; t < 20; ++t) {
    const auto in = gen.instance(3, 6);
    const SoftmaxPolicy p(in.logits);
    const auto cfg = make(Direction::Reverse, Normalization::Normalized, LossStyle::Reinforce, 0.2);
    const Vec g = rpg::exact_gradient(cfg, p, FiniteMeasure(in.old), in.rewards);
    const double beta = 0.7;
    const Vec d = rpg::npg_direction(p, g, beta);
    const Vec d2 = rpg::npg_direction(p, g, 2 * beta);
    const auto f = rpg::fisher_matrix(p);
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
    const Eigen::Map<const Eigen::VectorXd> dv(d.data(), static_cast<Eigen::Index>(d.size()));
    const Eigen::VectorXd resid = (gv.array() - gv.mean()).matrix() - beta * f * dv;
    EXPECT_LT(resid.lpNorm<Eigen::Infinity>(), 1e-8);
    for (std::size_t j = 0; j < d.size(); ++j) EXPECT_EQ(d2[j], d[j] / 2);

    auto model = [&](const Eigen::VectorXd& v) { return gv.dot(v) - 0.5 * beta * v.dot(f * v); };
    const double best = model(dv);
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd probe(dv.size());
      for (Eigen::Index j = 0; j < probe.size(); ++j) probe(j) = gen.uniform(-1, 1);
      probe *= dv.norm() / probe.norm();
      EXPECT_GE(best + 1e-12, model(probe));
    }
  }
}

TEST(RklOptimum, ClosedFormIsStationary) {
  const Vec old{0.5, 0.3, 0.2};
  const Vec rewards{0.0, 1.0, 2.0};
  const double beta = 0.5;
  Vec logits(3);
  for (std::size_t i = 0; i < 3; ++i) logits[i] = std::log(old[i]) + rewards[i] / beta;
  const auto cfg = make(Direction::Reverse, Normalization::Normalized, LossStyle::Reinforce, beta);
  for (double g : rpg::exact_gradient(cfg, SoftmaxPolicy(logits), FiniteMeasure(old), rewards)) {
    EXPECT_LE(std::abs(g), 1e-8);
  }
}

}  // namespace
