#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rpg {

using Outcome = std::size_t;

/// Nonnegative, possibly unnormalized weights over outcomes {0, ..., N-1}.
///
/// Holds the old/reference measure pi_old with total mass Z_old. Individual
/// weights may be zero (the outcome is then never sampled), but at least one
/// must be positive.
class FiniteMeasure {
 public:
  /// Throws DegenerateMeasure on empty input, a negative or non-finite
  /// weight, or zero total mass.
  explicit FiniteMeasure(std::vector<double> weights);

  static FiniteMeasure uniform(std::size_t n, double mass = 1.0);

  std::size_t size() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  double weight(Outcome x) const { return weights_.at(x); }
  double total_mass() const { return mass_; }

  /// log of the unnormalized weight; -inf for zero-weight outcomes.
  double log_weight(Outcome x) const;
  /// log of the normalized probability weight(x) / Z.
  double log_prob(Outcome x) const;

  bool has_support(Outcome x) const { return weights_.at(x) > 0.0; }
  bool full_support() const;

 private:
  std::vector<double> weights_;
  double mass_ = 0.0;
};

struct Normalized {
  std::vector<double> probs;
  double mass = 0.0;
};

/// probs[i] = weights[i] / Z, Z = sum of weights.
Normalized normalize(const FiniteMeasure& m);

/// Categorical distribution parameterized by logits; probabilities are
/// always computed in the log domain through log-sum-exp.
class SoftmaxPolicy {
 public:
  explicit SoftmaxPolicy(std::vector<double> logits);

  static SoftmaxPolicy uniform(std::size_t n);
  /// Logits log(p); every p must be strictly positive.
  static SoftmaxPolicy from_probs(std::span<const double> probs);

  std::size_t size() const { return logits_.size(); }
  std::span<const double> logits() const { return logits_; }

  double log_normalizer() const { return log_z_; }
  double log_prob(Outcome x) const { return logits_.at(x) - log_z_; }
  double prob(Outcome x) const;
  std::vector<double> log_probs() const;
  std::vector<double> probs() const;
  double entropy() const;

 private:
  std::vector<double> logits_;
  double log_z_ = 0.0;
};

/// One draw x_i with its reward R(x_i) and log of the normalized old
/// probability log(pi_old(x_i) / Z_old).
struct OutcomeSample {
  Outcome outcome = 0;
  double reward = 0.0;
  double log_pi_old = 0.0;
};

enum class BatchKind {
  Sampled,      ///< i.i.d. draws, each with weight 1/n
  Enumeration,  ///< one entry per support point, weighted by the normalized old probability
};

/// Samples plus the quadrature weights that turn a per-sample sum into an
/// expectation under the normalized old measure.
struct Batch {
  BatchKind kind = BatchKind::Sampled;
  std::vector<OutcomeSample> samples;
  std::vector<double> weights;

  std::size_t size() const { return samples.size(); }
  double mean_reward() const;
};

double importance_weight(const SoftmaxPolicy& policy, const FiniteMeasure& ref, Outcome x);
double log_importance_weight(const SoftmaxPolicy& policy, const FiniteMeasure& ref, Outcome x);

/// n i.i.d. draws from normalize(ref). Deterministic in `seed`: the stream is
/// std::mt19937_64 seeded with `seed`, each draw uses the top 53 bits of one
/// output as a uniform in [0, 1) and inverts the cumulative distribution.
Batch sample_batch(const FiniteMeasure& ref, std::span<const double> rewards, std::size_t n,
                   std::uint64_t seed);

/// Zero-variance pseudo-batch: one entry per outcome with positive weight.
Batch enumeration_batch(const FiniteMeasure& ref, std::span<const double> rewards);

}  // namespace rpg
