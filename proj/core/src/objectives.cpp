#include "rpg/objectives.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "rpg/errors.hpp"

namespace rpg {

namespace {

const char* style_name(LossStyle s) {
  return s == LossStyle::Differentiable ? "differentiable" : "reinforce";
}

// Score function of a softmax policy: grad log pi(x) = e_x - p.
void add_scaled_score(std::vector<double>& g, std::span<const double> p, Outcome x, double c) {
  for (std::size_t j = 0; j < g.size(); ++j) g[j] -= c * p[j];
  g[x] += c;
}

}  // namespace

std::string RpgConfig::name() const {
  return divergence().name() + "/" + style_name(style);
}

void RpgConfig::validate() const {
  if (!std::isfinite(beta) || beta < 0.0) throw DomainError("beta must be finite and >= 0");
}

std::vector<RpgConfig> all_variants(double beta) {
  std::vector<RpgConfig> out;
  for (auto dir : {Direction::Forward, Direction::Reverse}) {
    for (auto norm : {Normalization::Normalized, Normalization::Unnormalized}) {
      for (auto style : {LossStyle::Differentiable, LossStyle::Reinforce}) {
        RpgConfig c;
        c.direction = dir;
        c.normalization = norm;
        c.style = style;
        c.beta = beta;
        out.push_back(c);
      }
    }
  }
  return out;
}

TapePolicy::TapePolicy(Tape& tape) : tape_(&tape) {
  const std::size_t n = tape.param_count();
  if (n == 0) throw DomainError("tape has no params");
  logits_.reserve(n);
  double m = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    logits_.push_back(tape.param(i));
    m = std::max(m, logits_.back().value());
  }
  // The shift m is a constant; log-sum-exp is invariant to it.
  Var sum = exp(logits_[0] - m);
  for (std::size_t i = 1; i < n; ++i) sum = sum + exp(logits_[i] - m);
  lse_ = ln(sum) + m;
}

Var TapePolicy::log_prob(Outcome x) const { return logits_.at(x) - lse_; }

double old_log_density(const RpgConfig& cfg, const FiniteMeasure& old, const OutcomeSample& s) {
  if (!std::isfinite(s.log_pi_old)) {
    throw ZeroSupportSample("sample " + std::to_string(s.outcome) + " has no old-policy support");
  }
  return cfg.unnormalized() ? s.log_pi_old + std::log(old.total_mass()) : s.log_pi_old;
}

double loss_scale(const RpgConfig& cfg, const FiniteMeasure& old) {
  return cfg.unnormalized() && cfg.include_z ? old.total_mass() : 1.0;
}

double kl_component(const RpgConfig& cfg, double log_w) {
  const double w = std::exp(log_w);
  const double beta = cfg.beta;
  if (cfg.direction == Direction::Forward) {
    return cfg.unnormalized() ? -beta * (w - 1.0) : beta;
  }
  return cfg.unnormalized() ? -beta * w * log_w : -beta * w * (log_w + 1.0);
}

double reinforce_weight(const RpgConfig& cfg, double advantage, double log_w) {
  return std::exp(log_w) * advantage + kl_component(cfg, log_w);
}

Var reinforce_term(Var ell, double advantage, double c_kl, double w) {
  Tape& tape = *ell.tape();
  const Var psi = tape.constant(advantage + c_kl / w) * ell;
  return psi * tape.constant(w);
}

Var weighted_batch_sum(Tape& tape, std::span<const double> weights,
                       const std::function<Var(std::size_t)>& term, double scale) {
  Var total = tape.constant(0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) total = total + term(i) * weights[i];
  if (scale != 1.0) total = total * scale;
  return total;
}

double exact_objective(const RpgConfig& cfg, const SoftmaxPolicy& policy, const FiniteMeasure& old,
                       std::span<const double> rewards) {
  cfg.validate();
  if (rewards.size() != policy.size()) throw DomainError("reward table size differs from policy");
  const std::vector<double> p = policy.probs();
  double expected_reward = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) expected_reward += p[x] * rewards[x];
  if (cfg.beta == 0.0) return expected_reward;
  return expected_reward - cfg.beta * divergence_exact(cfg.divergence(), policy, old);
}

std::vector<double> exact_gradient(const RpgConfig& cfg, const SoftmaxPolicy& policy,
                                   const FiniteMeasure& old, std::span<const double> rewards) {
  cfg.validate();
  if (rewards.size() != policy.size() || old.size() != policy.size()) {
    throw DomainError("exact_gradient: size mismatch");
  }
  if (!old.full_support()) {
    throw SupportError("exact_gradient needs pi_old > 0 on every outcome");
  }
  const std::vector<double> p = policy.probs();
  const Normalized norm = normalize(old);
  const double z_factor = cfg.unnormalized() ? old.total_mass() : 1.0;
  std::vector<double> g(p.size(), 0.0);
  for (Outcome x = 0; x < p.size(); ++x) {
    const double log_old = cfg.unnormalized() ? old.log_weight(x) : old.log_prob(x);
    const double log_w = policy.log_prob(x) - log_old;
    const double weight = z_factor * reinforce_weight(cfg, rewards[x], log_w);
    add_scaled_score(g, p, x, norm.probs[x] * weight);
  }
  return g;
}

Var surrogate_loss(const TapePolicy& policy, const RpgConfig& cfg, const Batch& batch,
                   const FiniteMeasure& old, double baseline) {
  cfg.validate();
  Tape& tape = policy.tape();
  const double beta = cfg.beta;

  auto differentiable = [&](std::size_t i) -> Var {
    const OutcomeSample& s = batch.samples[i];
    const Var log_p = policy.log_prob(s.outcome);
    const Var log_w = log_p - old_log_density(cfg, old, s);
    const Var w = exp(log_w);
    const double a = s.reward - baseline;
    const Var reward_part = -(w * a);
    if (cfg.direction == Direction::Forward) {
      if (cfg.unnormalized()) return reward_part + beta * (w - log_w - 1.0);
      return reward_part - beta * log_p;
    }
    if (cfg.unnormalized()) return reward_part + beta * (w * log_w - w);
    return w * (beta * log_w - a);
  };

  auto reinforce = [&](std::size_t i) -> Var {
    const OutcomeSample& s = batch.samples[i];
    const Var log_p = policy.log_prob(s.outcome);
    const double log_w = log_p.value() - old_log_density(cfg, old, s);
    return reinforce_term(-log_p, s.reward - baseline, kl_component(cfg, log_w), std::exp(log_w));
  };

  const double scale = loss_scale(cfg, old);
  if (cfg.style == LossStyle::Differentiable) {
    return weighted_batch_sum(tape, batch.weights, differentiable, scale);
  }
  return weighted_batch_sum(tape, batch.weights, reinforce, scale);
}

RegularizedAdvantage regularized_advantage(const RpgConfig& cfg, const OutcomeSample& sample,
                                           double w, double baseline) {
  if (!(w > 0.0)) throw DomainError("regularized_advantage requires w > 0");
  const double a = sample.reward - baseline;
  RegularizedAdvantage out;
  if (cfg.direction == Direction::Forward) {
    out.value = a;
    out.simplified = true;
    out.variant = cfg.unnormalized() ? AdvantageVariant::UFKLSimplified
                                     : AdvantageVariant::FKLSimplified;
    return out;
  }
  if (cfg.unnormalized()) {
    out.value = a - cfg.beta * std::log(w);
    out.variant = AdvantageVariant::URKL;
  } else {
    out.value = a - cfg.beta * (std::log(w) + 1.0);
    out.variant = AdvantageVariant::RKL;
  }
  return out;
}

Var regularized_advantage_node(const RpgConfig& cfg, double reward_minus_baseline, Var log_w) {
  Tape& tape = *log_w.tape();
  if (cfg.direction == Direction::Forward) return tape.constant(reward_minus_baseline);
  const Var kl = cfg.unnormalized() ? cfg.beta * log_w : cfg.beta * (log_w + 1.0);
  const Var adv = reward_minus_baseline - kl;
  return cfg.detach_advantage ? stop_gradient(adv) : adv;
}

double expectation(const SoftmaxPolicy& policy, const OutcomeFunction& f) {
  double s = 0.0;
  for (Outcome x = 0; x < policy.size(); ++x) {
    Tape tape(policy.logits());
    const TapePolicy tp(tape);
    s += policy.prob(x) * f(tp, x).value();
  }
  return s;
}

std::vector<double> gppt_gradient(const SoftmaxPolicy& policy, const OutcomeFunction& f) {
  const std::vector<double> p = policy.probs();
  std::vector<double> g(p.size(), 0.0);
  for (Outcome x = 0; x < p.size(); ++x) {
    Tape tape(policy.logits());
    const TapePolicy tp(tape);
    const Var fx = f(tp, x);
    const std::vector<double> grad_f = tape.backward(fx);
    add_scaled_score(g, p, x, p[x] * fx.value());
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += p[x] * grad_f[j];
  }
  return g;
}

Eigen::MatrixXd fisher_matrix(const SoftmaxPolicy& policy) {
  const std::vector<double> p = policy.probs();
  const auto n = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd pv = Eigen::Map<const Eigen::VectorXd>(p.data(), n);
  for (Eigen::Index x = 0; x < n; ++x) {
    Eigen::VectorXd score = -pv;
    score(x) += 1.0;
    f.noalias() += pv(x) * score * score.transpose();
  }
  return f;
}

std::vector<double> npg_direction(const SoftmaxPolicy& policy, std::span<const double> grad,
                                  double beta) {
  if (!(beta > 0.0)) throw DomainError("npg_direction requires beta > 0");
  if (grad.size() != policy.size()) throw DomainError("gradient size differs from policy");
  const auto n = static_cast<Eigen::Index>(grad.size());
  Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(grad.data(), n);
  g.array() -= g.mean();
  // F has the all-ones vector as its null direction; adding the projector onto
  // it gives an SPD matrix whose inverse agrees with F^+ on the complement.
  Eigen::MatrixXd m = fisher_matrix(policy);
  m.array() += 1.0 / static_cast<double>(n);
  const Eigen::VectorXd delta = m.ldlt().solve(g) / beta;
  return {delta.data(), delta.data() + n};
}

}  // namespace rpg
