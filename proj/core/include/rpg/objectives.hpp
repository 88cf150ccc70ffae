#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rpg/autodiff.hpp"
#include "rpg/divergences.hpp"
#include "rpg/measures.hpp"

namespace rpg {

enum class LossStyle {
  Differentiable,  ///< importance-weighted loss, gradient flows through w
  Reinforce,       ///< -SG(Weight) * log pi_theta
};

/// Selects one of the eight KL-regularized surrogates
/// (direction x normalization x style) and its regularization strength.
struct RpgConfig {
  Direction direction = Direction::Reverse;
  Normalization normalization = Normalization::Unnormalized;
  LossStyle style = LossStyle::Reinforce;
  double beta = 1e-4;
  /// Multiply unnormalized losses by Z_old. Without it the gradient is
  /// -grad J / Z_old. Ignored for normalized variants.
  bool include_z = true;
  /// Dual-clip (differentiable style) only: treat the regularized advantage
  /// as a constant instead of differentiating through its log w term.
  bool detach_advantage = false;

  DivergenceSpec divergence() const { return {direction, normalization}; }
  bool unnormalized() const { return normalization == Normalization::Unnormalized; }
  /// e.g. "URKL/reinforce".
  std::string name() const;
  void validate() const;
};

/// All eight variants at the given beta, in a fixed order.
std::vector<RpgConfig> all_variants(double beta);

/// Policy logits registered as the params of a tape, with a shared
/// log-normalizer node so that log pi_theta(x) = logit_x - lse costs one node.
class TapePolicy {
 public:
  explicit TapePolicy(Tape& tape);

  Tape& tape() const { return *tape_; }
  std::size_t size() const { return logits_.size(); }
  Var logit(Outcome x) const { return logits_.at(x); }
  Var log_normalizer() const { return lse_; }
  Var log_prob(Outcome x) const;

 private:
  Tape* tape_;
  std::vector<Var> logits_;
  Var lse_;
};

/// log of the density used in the importance weight for this sample: the raw
/// old measure for unnormalized variants, the normalized one otherwise.
double old_log_density(const RpgConfig& cfg, const FiniteMeasure& old, const OutcomeSample& s);

/// Overall factor applied to batch losses: Z_old for unnormalized variants
/// with include_z, else 1.
double loss_scale(const RpgConfig& cfg, const FiniteMeasure& old);

/// KL part C of the per-sample REINFORCE weight, Weight = w * (R - b) + C
/// (beta included, Z_old excluded):
///   FKL  C = beta              UFKL C = -beta (w - 1)
///   RKL  C = -beta w (log w + 1)   URKL C = -beta w log w
double kl_component(const RpgConfig& cfg, double log_w);

/// Weight(x) = w (R - b) + C, the coefficient of grad log pi_theta (without Z_old).
double reinforce_weight(const RpgConfig& cfg, double advantage, double log_w);

/// Per-sample REINFORCE term written in the factored form used by the
/// dual-clip branches: (A_R + C / w) * ell * w with w and C held constant and
/// ell = -log pi_theta(x). Its gradient is -(w A_R + C) grad log pi_theta.
Var reinforce_term(Var ell, double advantage, double c_kl, double w);

/// sum_i weights[i] * term(i), times `scale` when scale != 1.
Var weighted_batch_sum(Tape& tape, std::span<const double> weights,
                       const std::function<Var(std::size_t)>& term, double scale);

/// J(theta) = E_{pi_theta}[R] - beta * Div, by enumeration.
double exact_objective(const RpgConfig& cfg, const SoftmaxPolicy& policy, const FiniteMeasure& old,
                       std::span<const double> rewards);

/// Closed-form grad J by enumeration over the old support:
///   sum_x pi~_old(x) * Weight(x) * grad log pi_theta(x), with the Z_old factor
/// for unnormalized variants. Requires old to have full support
/// (SupportError otherwise), since importance sampling cannot see outcomes
/// outside it.
std::vector<double> exact_gradient(const RpgConfig& cfg, const SoftmaxPolicy& policy,
                                   const FiniteMeasure& old, std::span<const double> rewards);

/// Batch surrogate loss whose gradient estimates -grad J.
///
/// Differentiable (A = R - b, w = pi_theta / p_old):
///   UFKL  -w A + beta (w - log w - 1)     URKL  -w A + beta (w log w - w)
///   FKL   -w A - beta log pi_theta        RKL   w (beta log w - A)
/// Reinforce: reinforce_term with the variant's kl_component.
/// Terms are combined with the batch weights and loss_scale.
Var surrogate_loss(const TapePolicy& policy, const RpgConfig& cfg, const Batch& batch,
                   const FiniteMeasure& old, double baseline);

enum class AdvantageVariant { RKL, URKL, FKLSimplified, UFKLSimplified };

struct RegularizedAdvantage {
  double value = 0.0;
  AdvantageVariant variant = AdvantageVariant::URKL;
  /// True for forward variants, whose weight does not factor as w * A; the
  /// advantage then falls back to R - b and clipping only sees the reward part.
  bool simplified = false;
};

///   URKL (R - b) - beta log w       RKL (R - b) - beta (log w + 1)
///   FKL / UFKL  R - b  (simplified)
RegularizedAdvantage regularized_advantage(const RpgConfig& cfg, const OutcomeSample& sample,
                                           double w, double baseline);

/// regularized_advantage on the tape, differentiable through log_w unless
/// cfg.detach_advantage is set.
Var regularized_advantage_node(const RpgConfig& cfg, double reward_minus_baseline, Var log_w);

using OutcomeFunction = std::function<Var(const TapePolicy&, Outcome)>;

/// E_{pi_theta}[f(x, theta)] by enumeration.
double expectation(const SoftmaxPolicy& policy, const OutcomeFunction& f);

/// E_{pi_theta}[f grad log pi_theta + grad f], by enumeration, with grad f
/// taken on a fresh tape per outcome.
std::vector<double> gppt_gradient(const SoftmaxPolicy& policy, const OutcomeFunction& f);

/// E_{pi_theta}[s s^T] with s = grad log pi_theta; equals diag(p) - p p^T.
Eigen::MatrixXd fisher_matrix(const SoftmaxPolicy& policy);

/// (1 / beta) F^+ grad, where F^+ inverts the Fisher matrix on the
/// complement of its null direction (all-ones logits). Throws DomainError
/// for beta <= 0.
std::vector<double> npg_direction(const SoftmaxPolicy& policy, std::span<const double> grad,
                                  double beta);

}  // namespace rpg
