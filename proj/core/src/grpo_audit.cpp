#include "rpg/grpo_audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rpg/divergences.hpp"
#include "rpg/errors.hpp"

namespace rpg {

namespace {

Var k3_from_log(Var log_y) { return exp(log_y) - 1.0 - log_y; }

std::vector<double> loss_gradient(const SoftmaxPolicy& policy, const Batch& batch,
                                  const std::function<Var(const TapePolicy&, Outcome)>& term) {
  Tape tape(policy.logits());
  const TapePolicy tp(tape);
  const Var loss = weighted_batch_sum(
      tape, batch.weights, [&](std::size_t i) { return term(tp, batch.samples[i].outcome); }, 1.0);
  return tape.backward(loss);
}

std::vector<double> ukl_fd_gradient(const SoftmaxPolicy& policy, const FiniteMeasure& ref,
                                    double h) {
  std::vector<double> logits(policy.logits().begin(), policy.logits().end());
  auto value_at = [&](std::size_t j, double delta) {
    std::vector<double> shifted = logits;
    shifted[j] += delta;
    return ukl_exact(SoftmaxPolicy(shifted).probs(), ref.weights());
  };
  std::vector<double> g(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    g[j] = (value_at(j, h) - value_at(j, -h)) / (2.0 * h);
  }
  return g;
}

}  // namespace

Var grpo_kl_term(const TapePolicy& policy, const FiniteMeasure& ref, Outcome x) {
  if (!ref.has_support(x)) {
    throw SupportError("pi_ref has no mass at outcome " + std::to_string(x));
  }
  return k3_from_log(ref.log_weight(x) - policy.log_prob(x));
}

Var corrected_kl_term(const TapePolicy& policy, const FiniteMeasure& ref, const FiniteMeasure& old,
                      Outcome x) {
  if (!old.has_support(x)) {
    throw ZeroSupportSample("outcome " + std::to_string(x) + " has zero weight under pi_old");
  }
  const Var w = exp(policy.log_prob(x) - old.log_prob(x));
  return w * grpo_kl_term(policy, ref, x);
}

AuditReport audit_bias(const SoftmaxPolicy& policy, const FiniteMeasure& ref,
                       const FiniteMeasure& old, const AuditOptions& options) {
  if (ref.size() != policy.size() || old.size() != policy.size()) {
    throw DomainError("audit_bias: size mismatch");
  }
  if (!ref.full_support()) throw SupportError("audit_bias needs pi_ref > 0 everywhere");

  const std::vector<double> no_rewards(policy.size(), 0.0);
  const Batch batch = options.enumerate
                          ? enumeration_batch(old, no_rewards)
                          : sample_batch(old, no_rewards, options.samples, options.seed);

  AuditReport r;
  r.uncorrected_grad = loss_gradient(policy, batch, [&](const TapePolicy& tp, Outcome x) {
    return grpo_kl_term(tp, ref, x);
  });
  r.corrected_grad = loss_gradient(policy, batch, [&](const TapePolicy& tp, Outcome x) {
    return corrected_kl_term(tp, ref, old, x);
  });
  r.true_ukl_grad = ukl_fd_gradient(policy, ref, options.fd_step);

  double sq = 0.0;
  double true_sq = 0.0;
  for (std::size_t j = 0; j < policy.size(); ++j) {
    const double bias = r.uncorrected_grad[j] - r.true_ukl_grad[j];
    sq += bias * bias;
    true_sq += r.true_ukl_grad[j] * r.true_ukl_grad[j];
    r.bias_linf = std::max(r.bias_linf, std::abs(bias));
    r.corrected_error_linf =
        std::max(r.corrected_error_linf, std::abs(r.corrected_grad[j] - r.true_ukl_grad[j]));
  }
  r.bias_norm = std::sqrt(sq);
  r.relative_bias =
      r.bias_norm / std::max(std::sqrt(true_sq), std::numeric_limits<double>::min());
  r.corrected_consistent = r.corrected_error_linf <= options.tolerance;
  return r;
}

}  // namespace rpg
