#include "rpg/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "rpg/errors.hpp"

namespace rpg {

namespace {

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

FiniteMeasure::FiniteMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw DegenerateMeasure("measure has no outcomes");
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!std::isfinite(w) || w < 0.0) {
      throw DegenerateMeasure("weight " + std::to_string(i) + " is negative or non-finite");
    }
  }
  mass_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (!(mass_ > 0.0)) throw DegenerateMeasure("measure has zero total mass");
}

FiniteMeasure FiniteMeasure::uniform(std::size_t n, double mass) {
  return FiniteMeasure(std::vector<double>(n, mass / static_cast<double>(n)));
}

double FiniteMeasure::log_weight(Outcome x) const {
  const double w = weights_.at(x);
  return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
}

double FiniteMeasure::log_prob(Outcome x) const { return log_weight(x) - std::log(mass_); }

bool FiniteMeasure::full_support() const {
  return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; });
}

Normalized normalize(const FiniteMeasure& m) {
  Normalized out;
  out.mass = m.total_mass();
  out.probs.reserve(m.size());
  for (double w : m.weights()) out.probs.push_back(w / out.mass);
  return out;
}

SoftmaxPolicy::SoftmaxPolicy(std::vector<double> logits) : logits_(std::move(logits)) {
  if (logits_.empty()) throw DomainError("policy has no outcomes");
  for (double t : logits_) {
    if (!std::isfinite(t)) throw DomainError("policy logit is not finite");
  }
  log_z_ = log_sum_exp(logits_);
}

SoftmaxPolicy SoftmaxPolicy::uniform(std::size_t n) {
  return SoftmaxPolicy(std::vector<double>(n, 0.0));
}

SoftmaxPolicy SoftmaxPolicy::from_probs(std::span<const double> probs) {
  std::vector<double> logits;
  logits.reserve(probs.size());
  for (double p : probs) {
    if (!(p > 0.0)) throw DomainError("from_probs requires strictly positive probabilities");
    logits.push_back(std::log(p));
  }
  return SoftmaxPolicy(std::move(logits));
}

double SoftmaxPolicy::prob(Outcome x) const { return std::exp(log_prob(x)); }

std::vector<double> SoftmaxPolicy::log_probs() const {
  std::vector<double> out(logits_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = logits_[i] - log_z_;
  return out;
}

std::vector<double> SoftmaxPolicy::probs() const {
  std::vector<double> out(logits_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(logits_[i] - log_z_);
  return out;
}

double SoftmaxPolicy::entropy() const {
  double h = 0.0;
  for (std::size_t i = 0; i < logits_.size(); ++i) {
    const double lp = log_prob(i);
    h -= std::exp(lp) * lp;
  }
  return h;
}

double Batch::mean_reward() const {
  double s = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) s += weights[i] * samples[i].reward;
  return s;
}

double log_importance_weight(const SoftmaxPolicy& policy, const FiniteMeasure& ref, Outcome x) {
  if (!ref.has_support(x)) {
    throw ZeroSupportSample("outcome " + std::to_string(x) + " has zero weight under pi_old");
  }
  return policy.log_prob(x) - ref.log_weight(x);
}

double importance_weight(const SoftmaxPolicy& policy, const FiniteMeasure& ref, Outcome x) {
  return std::exp(log_importance_weight(policy, ref, x));
}

Batch sample_batch(const FiniteMeasure& ref, std::span<const double> rewards, std::size_t n,
                   std::uint64_t seed) {
  if (n == 0) throw DomainError("sample_batch requires n >= 1");
  if (rewards.size() != ref.size()) throw DomainError("reward table size differs from measure");

  const Normalized norm = normalize(ref);
  std::vector<double> cdf(norm.probs.size());
  std::partial_sum(norm.probs.begin(), norm.probs.end(), cdf.begin());
  // Pin the tail to exactly 1 from the last supported outcome on, so rounding
  // in the running sum can never select a zero-weight outcome.
  std::size_t last = cdf.size() - 1;
  while (!ref.has_support(last)) --last;
  std::fill(cdf.begin() + static_cast<std::ptrdiff_t>(last), cdf.end(), 1.0);

  std::vector<double> log_probs(ref.size());
  for (Outcome x = 0; x < ref.size(); ++x) log_probs[x] = ref.log_prob(x);

  std::mt19937_64 gen(seed);
  Batch batch;
  batch.kind = BatchKind::Sampled;
  batch.samples.reserve(n);
  batch.weights.assign(n, 1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform01(gen);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const Outcome x = static_cast<Outcome>(it - cdf.begin());
    batch.samples.push_back({x, rewards[x], log_probs[x]});
  }
  return batch;
}

Batch enumeration_batch(const FiniteMeasure& ref, std::span<const double> rewards) {
  if (rewards.size() != ref.size()) throw DomainError("reward table size differs from measure");
  const Normalized norm = normalize(ref);
  Batch batch;
  batch.kind = BatchKind::Enumeration;
  for (Outcome x = 0; x < ref.size(); ++x) {
    if (!ref.has_support(x)) continue;
    batch.samples.push_back({x, rewards[x], ref.log_prob(x)});
    batch.weights.push_back(norm.probs[x]);
  }
  return batch;
}

}  // namespace rpg
