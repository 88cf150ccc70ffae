#pragma once

#include <span>
#include <string>

#include "rpg/measures.hpp"

namespace rpg {

enum class Direction {
  Forward,  ///< KL(pi_old || pi_theta)
  Reverse,  ///< KL(pi_theta || pi_old)
};

enum class Normalization {
  Normalized,    ///< KL against the normalized old distribution
  Unnormalized,  ///< UKL against the raw old measure, with the mass-correction term
};

struct DivergenceSpec {
  Direction direction = Direction::Reverse;
  Normalization normalization = Normalization::Unnormalized;

  /// "FKL", "RKL", "UFKL" or "URKL".
  std::string name() const;
};

enum class Estimator { K1, K2, K3 };

/// sum_x p_x log(p_x / q_x) with 0 log 0 = 0. Throws SupportError when
/// q_x = 0 < p_x.
double kl_exact(std::span<const double> p, std::span<const double> q);

/// Unnormalized KL between two nonnegative measures:
///   UKL(a || b) = sum_x a_x log(a_x / b_x) + sum_x (b_x - a_x).
/// Reduces to kl_exact when both sides are normalized.
double ukl_exact(std::span<const double> a, std::span<const double> b);

/// The divergence selected by `spec` between the policy and the old measure:
///   FKL  = KL(pi~_old || pi_theta)      UFKL = UKL(pi_old || pi_theta)
///   RKL  = KL(pi_theta || pi~_old)      URKL = UKL(pi_theta || pi_old)
double divergence_exact(const DivergenceSpec& spec, const SoftmaxPolicy& policy,
                        const FiniteMeasure& old);

/// k1(y) = -log y, k2(y) = (log y)^2 / 2, k3(y) = y - 1 - log y.
/// Throws DomainError for y <= 0.
double k_estimator(Estimator kind, double y);
/// Same functionals evaluated from log y, which avoids forming tiny ratios.
double k_estimator_from_log(Estimator kind, double log_y);

/// sum_x sampling_x * k3(ratio_x) over the support of `sampling`.
double k3_expectation_exact(std::span<const double> sampling, std::span<const double> ratio);

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo divergence estimate from a batch drawn from normalize(old).
///
/// Per-sample value, with p_old = old (Unnormalized) or old / Z (Normalized)
/// and s = Z for Unnormalized, 1 otherwise:
///   Forward: s * k(pi_theta(x) / p_old(x))
///   Reverse: s * w(x) * k(p_old(x) / pi_theta(x)),  w = pi_theta / p_old
/// With k3 this is unbiased for UKL (Unnormalized) or KL (Normalized); k1 is
/// unbiased for KL but omits the mass term of UKL; k2 is biased.
McEstimate divergence_mc(const DivergenceSpec& spec, Estimator kind, const Batch& batch,
                         const SoftmaxPolicy& policy, const FiniteMeasure& old);

/// Exact expectation of the divergence_mc per-sample value under normalize(old).
double estimator_expectation_exact(const DivergenceSpec& spec, Estimator kind,
                                   const SoftmaxPolicy& policy, const FiniteMeasure& old);

}  // namespace rpg
