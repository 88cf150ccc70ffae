#pragma once

#include <cstdint>
#include <vector>

#include "rpg/autodiff.hpp"
#include "rpg/measures.hpp"
#include "rpg/objectives.hpp"

namespace rpg {

/// k3(pi_ref(x) / pi_theta(x)) on the tape. pi_ref is used as given (no
/// normalization). Throws SupportError when pi_ref(x) == 0.
Var grpo_kl_term(const TapePolicy& policy, const FiniteMeasure& ref, Outcome x);

/// w(x) * k3(pi_ref(x) / pi_theta(x)) with w = pi_theta / normalize(old),
/// differentiable through w. Its expectation under normalize(old) is
/// UKL(pi_theta || pi_ref). Throws ZeroSupportSample when old(x) == 0.
Var corrected_kl_term(const TapePolicy& policy, const FiniteMeasure& ref, const FiniteMeasure& old,
                      Outcome x);

struct AuditOptions {
  /// Expectations by enumeration over the old support; otherwise a sampled
  /// batch of `samples` draws.
  bool enumerate = true;
  std::size_t samples = 4096;
  std::uint64_t seed = 0;
  double fd_step = 1e-5;
  /// corrected_consistent is set when |corrected - true|_inf <= tolerance.
  double tolerance = 1e-6;
};

struct AuditReport {
  std::vector<double> uncorrected_grad;
  std::vector<double> corrected_grad;
  std::vector<double> true_ukl_grad;
  double bias_norm = 0.0;  ///< |uncorrected - true|_2
  double bias_linf = 0.0;
  double relative_bias = 0.0;  ///< bias_norm / max(|true|_2, tiny)
  double corrected_error_linf = 0.0;
  bool corrected_consistent = false;
};

/// Gradients w.r.t. the policy logits of
///   uncorrected  E_{old}[k3(pi_ref / pi_theta)]
///   corrected    E_{old}[w k3(pi_ref / pi_theta)]
///   true         UKL(pi_theta || pi_ref), by central differences
/// Throws SupportError when pi_ref lacks full support.
AuditReport audit_bias(const SoftmaxPolicy& policy, const FiniteMeasure& ref,
                       const FiniteMeasure& old, const AuditOptions& options = {});

}  // namespace rpg
