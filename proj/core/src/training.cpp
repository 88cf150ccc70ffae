#include "rpg/training.hpp"

#include <cmath>
#include <random>
#include <string>

#include "rpg/divergences.hpp"
#include "rpg/errors.hpp"

namespace rpg {

namespace {

constexpr int kMaxHalvings = 60;

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct EpochResult {
  double loss = 0.0;
  std::vector<double> grad;
};

EpochResult surrogate_gradient(const TrainConfig& cfg, const SoftmaxPolicy& policy,
                               const Batch& batch, const FiniteMeasure& old, double baseline) {
  Tape tape(policy.logits());
  const TapePolicy tp(tape);
  const Var loss = cfg.clip ? clipped_surrogate_loss(tp, cfg.rpg, batch, old, baseline, *cfg.clip)
                            : surrogate_loss(tp, cfg.rpg, batch, old, baseline);
  return {loss.value(), tape.backward(loss)};
}

}  // namespace

void BanditEnv::validate() const {
  if (rewards.size() < 2) throw DomainError("bandit needs at least two arms");
  for (double r : rewards) {
    if (!std::isfinite(r)) throw DomainError("bandit reward must be finite");
  }
}

void TrainConfig::validate(std::size_t n_arms) const {
  rpg.validate();
  if (clip) clip->validate();
  if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError("lr must be > 0");
  if (batch_size == 0) throw DomainError("batch_size must be >= 1");
  if (epochs == 0) throw DomainError("epochs must be >= 1");
  if (iterations == 0) throw DomainError("iterations must be >= 1");
  if (ref_update.kind == RefUpdateRule::Kind::EveryK && ref_update.every_k == 0) {
    throw DomainError("ref_update every_k must be >= 1");
  }
  if (ref_update.kind == RefUpdateRule::Kind::KlThreshold && !(ref_update.kappa > 0.0)) {
    throw DomainError("ref_update kappa must be > 0");
  }
  if (grad_norm_clip && !(*grad_norm_clip > 0.0)) throw DomainError("grad_norm_clip must be > 0");
  if (!initial_logits.empty() && initial_logits.size() != n_arms) {
    throw DomainError("initial_logits size differs from the number of arms");
  }
  if (reference) {
    if (reference->size() != n_arms) throw DomainError("reference size differs from the number of arms");
    if (!reference->full_support()) throw DomainError("reference must be positive on every arm");
  }
}

std::vector<double> optimizer_step(std::span<const double> params, std::span<const double> grad,
                                   double lr, std::optional<double> grad_norm_clip) {
  if (params.size() != grad.size()) throw DomainError("optimizer_step: size mismatch");
  if (!all_finite(grad)) throw NumericalError("optimizer_step: non-finite gradient");
  double scale = lr;
  if (grad_norm_clip) {
    const double norm = l2_norm(grad);
    if (norm > *grad_norm_clip) scale *= *grad_norm_clip / norm;
  }
  std::vector<double> out(params.begin(), params.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= scale * grad[i];
  return out;
}

bool reference_update_check(const SoftmaxPolicy& policy, const FiniteMeasure& old,
                            const RefUpdateRule& rule, std::size_t iteration) {
  switch (rule.kind) {
    case RefUpdateRule::Kind::Never:
      return false;
    case RefUpdateRule::Kind::EveryK:
      return rule.every_k > 0 && iteration % rule.every_k == 0;
    case RefUpdateRule::Kind::KlThreshold:
      return kl_exact(policy.probs(), normalize(old).probs) > rule.kappa;
  }
  return false;
}

TrainTrace run_training(const BanditEnv& env, const TrainConfig& cfg) {
  env.validate();
  cfg.validate(env.n_arms());

  SoftmaxPolicy policy = cfg.initial_logits.empty() ? SoftmaxPolicy::uniform(env.n_arms())
                                                    : SoftmaxPolicy(cfg.initial_logits);
  FiniteMeasure old = cfg.reference ? *cfg.reference : FiniteMeasure(policy.probs());
  const FiniteMeasure initial_ref = old;
  const DivergenceSpec div = cfg.rpg.divergence();
  const std::span<const double> rewards = env.rewards;

  std::mt19937_64 seeds(cfg.seed);
  TrainTrace trace;
  trace.records.reserve(cfg.iterations);

  auto abort_run = [&](std::size_t t, std::size_t k, const std::string& what) {
    trace.aborted = true;
    trace.diagnostic = "iteration " + std::to_string(t) + " epoch " + std::to_string(k) + ": " + what;
  };

  for (std::size_t t = 1; t <= cfg.iterations && !trace.aborted; ++t) {
    const std::uint64_t batch_seed = seeds();
    const Batch batch = cfg.batch_kind == BatchKind::Enumeration
                            ? enumeration_batch(old, rewards)
                            : sample_batch(old, rewards, cfg.batch_size, batch_seed);
    const double baseline = cfg.baseline == BaselineMode::BatchMean ? batch.mean_reward() : 0.0;

    IterationRecord rec;
    rec.iteration = t;
    rec.mean_reward = batch.mean_reward();
    double loss_sum = 0.0;

    for (std::size_t k = 1; k <= cfg.epochs; ++k) {
      EpochResult e = surrogate_gradient(cfg, policy, batch, old, baseline);
      if (!std::isfinite(e.loss)) {
        abort_run(t, k, "non-finite loss");
        break;
      }
      if (!all_finite(e.grad)) {
        abort_run(t, k, "non-finite gradient");
        break;
      }
      loss_sum += e.loss;
      rec.grad_norm = l2_norm(e.grad);

      std::vector<double> next = optimizer_step(policy.logits(), e.grad, cfg.lr, cfg.grad_norm_clip);
      if (cfg.line_search) {
        const double j_before = exact_objective(cfg.rpg, policy, old, rewards);
        double lr = cfg.lr;
        int halvings = 0;
        while (exact_objective(cfg.rpg, SoftmaxPolicy(next), old, rewards) < j_before) {
          if (++halvings > kMaxHalvings) {
            next.assign(policy.logits().begin(), policy.logits().end());
            break;
          }
          lr *= 0.5;
          next = optimizer_step(policy.logits(), e.grad, lr, cfg.grad_norm_clip);
        }
      }
      if (!all_finite(next)) {
        abort_run(t, k, "non-finite parameters");
        break;
      }
      policy = SoftmaxPolicy(std::move(next));
    }
    if (trace.aborted) break;

    rec.loss_mean = loss_sum / static_cast<double>(cfg.epochs);
    if (reference_update_check(policy, old, cfg.ref_update, t)) {
      old = FiniteMeasure(policy.probs());
      rec.ref_updated = true;
    }
    rec.j_exact = exact_objective(cfg.rpg, policy, old, rewards);
    rec.entropy = policy.entropy();
    rec.div_to_old = divergence_exact(div, policy, old);
    rec.div_to_ref = divergence_exact(div, policy, initial_ref);
    trace.records.push_back(rec);
  }
  trace.final_logits.assign(policy.logits().begin(), policy.logits().end());
  return trace;
}

}  // namespace rpg
