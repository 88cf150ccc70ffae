#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpg/clipping.hpp"
#include "rpg/measures.hpp"
#include "rpg/objectives.hpp"

namespace rpg {

/// Multi-armed bandit with a deterministic reward per arm.
struct BanditEnv {
  std::vector<double> rewards;

  std::size_t n_arms() const { return rewards.size(); }
  /// Throws DomainError for fewer than two arms or a non-finite reward.
  void validate() const;
};

struct RefUpdateRule {
  enum class Kind { Never, EveryK, KlThreshold };
  Kind kind = Kind::Never;
  std::size_t every_k = 1;
  double kappa = 0.0;

  static RefUpdateRule never() { return {}; }
  static RefUpdateRule every(std::size_t k) { return {Kind::EveryK, k, 0.0}; }
  static RefUpdateRule kl_threshold(double kappa) { return {Kind::KlThreshold, 1, kappa}; }
};

enum class BaselineMode { None, BatchMean };

struct TrainConfig {
  RpgConfig rpg;
  std::optional<ClipParams> clip;
  double lr = 0.1;
  std::size_t batch_size = 64;
  std::size_t epochs = 1;
  std::size_t iterations = 100;
  RefUpdateRule ref_update = RefUpdateRule::every(1);
  std::optional<double> grad_norm_clip;
  BatchKind batch_kind = BatchKind::Sampled;
  BaselineMode baseline = BaselineMode::BatchMean;
  /// Halve the step until the exact objective does not decrease.
  bool line_search = false;
  std::uint64_t seed = 0;
  /// Uniform policy when empty.
  std::vector<double> initial_logits;
  /// Initial pi_old. Defaults to the initial policy's distribution.
  std::optional<FiniteMeasure> reference;

  /// Throws DomainError on an invalid field.
  void validate(std::size_t n_arms) const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double j_exact = 0.0;      ///< exact objective against the current pi_old, after the update
  double loss_mean = 0.0;    ///< mean surrogate loss over the K epochs
  double mean_reward = 0.0;  ///< batch mean reward
  double entropy = 0.0;
  double div_to_old = 0.0;  ///< divergence to pi_old after any reference update
  double div_to_ref = 0.0;  ///< divergence to the initial pi_old
  double grad_norm = 0.0;   ///< L2 norm of the last epoch's gradient, before norm clipping
  bool ref_updated = false;
};

struct TrainTrace {
  std::vector<IterationRecord> records;
  std::vector<double> final_logits;
  bool aborted = false;
  std::string diagnostic;
};

/// theta - lr * g, with g rescaled to norm `grad_norm_clip` when larger.
/// Throws NumericalError on a non-finite gradient, DomainError on a size mismatch.
std::vector<double> optimizer_step(std::span<const double> params, std::span<const double> grad,
                                   double lr, std::optional<double> grad_norm_clip = std::nullopt);

/// every_k: iteration % k == 0; kl_threshold: KL(pi_theta || normalize(old)) > kappa.
bool reference_update_check(const SoftmaxPolicy& policy, const FiniteMeasure& old,
                            const RefUpdateRule& rule, std::size_t iteration);

/// Runs the off-policy loop: per iteration draw a batch from pi_old, subtract
/// the baseline, take K gradient steps on the (optionally clipped) surrogate,
/// then apply the reference update rule. Iterations are numbered from 1.
/// A non-finite loss or gradient stops the run with `aborted` set; the
/// records up to that point are kept.
TrainTrace run_training(const BanditEnv& env, const TrainConfig& cfg);

}  // namespace rpg
