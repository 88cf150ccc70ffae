#include "rpg/divergences.hpp"

#include <cmath>
#include <string>

#include "rpg/errors.hpp"

namespace rpg {

namespace {

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw DomainError("divergence operands have different sizes");
}

// Per-sample value of the divergence_mc estimator at outcome x.
double estimator_term(const DivergenceSpec& spec, Estimator kind, const SoftmaxPolicy& policy,
                      const FiniteMeasure& old, Outcome x) {
  const bool unnormalized = spec.normalization == Normalization::Unnormalized;
  const double log_old = unnormalized ? old.log_weight(x) : old.log_prob(x);
  if (!std::isfinite(log_old)) {
    throw ZeroSupportSample("outcome " + std::to_string(x) + " has zero weight under pi_old");
  }
  const double scale = unnormalized ? old.total_mass() : 1.0;
  const double log_w = policy.log_prob(x) - log_old;
  if (spec.direction == Direction::Forward) return scale * k_estimator_from_log(kind, log_w);
  return scale * std::exp(log_w) * k_estimator_from_log(kind, -log_w);
}

}  // namespace

std::string DivergenceSpec::name() const {
  const bool u = normalization == Normalization::Unnormalized;
  if (direction == Direction::Forward) return u ? "UFKL" : "FKL";
  return u ? "URKL" : "RKL";
}

double kl_exact(std::span<const double> p, std::span<const double> q) {
  check_sizes(p.size(), q.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (!(q[i] > 0.0)) throw SupportError("kl_exact: q has no mass where p does");
    s += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return s;
}

double ukl_exact(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  double log_part = 0.0;
  double mass_a = 0.0;
  double mass_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mass_a += a[i];
    mass_b += b[i];
    if (a[i] == 0.0) continue;
    if (!(b[i] > 0.0)) throw SupportError("ukl_exact: second measure has no mass where first does");
    log_part += a[i] * (std::log(a[i]) - std::log(b[i]));
  }
  return log_part + (mass_b - mass_a);
}

double divergence_exact(const DivergenceSpec& spec, const SoftmaxPolicy& policy,
                        const FiniteMeasure& old) {
  check_sizes(policy.size(), old.size());
  const std::vector<double> p = policy.probs();
  if (spec.normalization == Normalization::Normalized) {
    const std::vector<double> q = normalize(old).probs;
    return spec.direction == Direction::Forward ? kl_exact(q, p) : kl_exact(p, q);
  }
  return spec.direction == Direction::Forward ? ukl_exact(old.weights(), p)
                                              : ukl_exact(p, old.weights());
}

double k_estimator(Estimator kind, double y) {
  if (!(y > 0.0)) throw DomainError("k estimator requires y > 0");
  const double log_y = std::log(y);
  switch (kind) {
    case Estimator::K1:
      return -log_y;
    case Estimator::K2:
      return 0.5 * log_y * log_y;
    case Estimator::K3:
      return y - 1.0 - log_y;
  }
  return 0.0;
}

double k_estimator_from_log(Estimator kind, double log_y) {
  if (std::isnan(log_y) || log_y == -INFINITY) throw DomainError("k estimator requires y > 0");
  switch (kind) {
    case Estimator::K1:
      return -log_y;
    case Estimator::K2:
      return 0.5 * log_y * log_y;
    case Estimator::K3:
      return std::expm1(log_y) - log_y;
  }
  return 0.0;
}

double k3_expectation_exact(std::span<const double> sampling, std::span<const double> ratio) {
  check_sizes(sampling.size(), ratio.size());
  double s = 0.0;
  for (std::size_t i = 0; i < sampling.size(); ++i) {
    if (sampling[i] == 0.0) continue;
    s += sampling[i] * k_estimator(Estimator::K3, ratio[i]);
  }
  return s;
}

McEstimate divergence_mc(const DivergenceSpec& spec, Estimator kind, const Batch& batch,
                         const SoftmaxPolicy& policy, const FiniteMeasure& old) {
  const std::size_t n = batch.size();
  if (n == 0) throw DomainError("divergence_mc needs a nonempty batch");
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = estimator_term(spec, kind, policy, old, batch.samples[i].outcome);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  McEstimate out;
  out.estimate = mean;
  if (n > 1) {
    const double var = m2 / static_cast<double>(n - 1);
    out.standard_error = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

double estimator_expectation_exact(const DivergenceSpec& spec, Estimator kind,
                                   const SoftmaxPolicy& policy, const FiniteMeasure& old) {
  check_sizes(policy.size(), old.size());
  const Normalized norm = normalize(old);
  double s = 0.0;
  for (Outcome x = 0; x < old.size(); ++x) {
    if (!old.has_support(x)) continue;
    s += norm.probs[x] * estimator_term(spec, kind, policy, old, x);
  }
  return s;
}

}  // namespace rpg
