#pragma once

#include "rpg/autodiff.hpp"
#include "rpg/measures.hpp"
#include "rpg/objectives.hpp"

namespace rpg {

/// Dual-clip bounds. w is clipped into [1 - eps_low, 1 + eps_high]; for
/// negative advantages the loss is additionally capped at -c * A.
struct ClipParams {
  double eps_low = 0.2;
  double eps_high = 0.28;
  double c = 2.25;

  double lower() const { return 1.0 - eps_low; }
  double upper() const { return 1.0 + eps_high; }
  /// Throws DomainError unless eps_low, eps_high > 0, 1 - eps_low > 0 and
  /// c > 1 + eps_high.
  void validate() const;
};

/// min(max(w, lo), hi). Throws DomainError when lo > hi.
double clip(double w, double lo, double hi);
Var clip(Var w, double lo, double hi);

/// Dual-clip loss for one sample, built from tape max/min:
///   A >= 0: max(-w A, -clip(w) A)
///   A <  0: min(max(-w A, -clip(w) A), -c A)
/// The branch is chosen on the value of A.
Var dual_clip_loss(Var w, Var a_hat, const ClipParams& params);

enum class ClipBranch {
  InBandPositive,  ///< psi >= 0, w < 1 + eps_high
  HighPlateau,     ///< psi >= 0, w >= 1 + eps_high
  LowPlateau,      ///< psi <  0, w <= 1 - eps_low
  InBandNegative,  ///< psi <  0, 1 - eps_low < w < c
  CPlateau,        ///< psi <  0, w >= c
};

const char* to_string(ClipBranch b);

/// Branching REINFORCE clip for one sample. `ell` is -log pi_theta(x) on the
/// tape; w, a_r = R - b and c_kl (the kl_component) are plain numbers.
/// With A' = a_r + c_kl / w and psi = A' * ell:
///   InBandPositive / InBandNegative   psi * SG(w)            (gradient via ell)
///   HighPlateau                       (a_r + c_kl / w_hi) SG(ell) w_hi
///   LowPlateau                        (a_r + c_kl / w_lo) SG(ell) w_lo
///   CPlateau                          a_r SG(ell) c + c_kl SG(ell)
/// psi == 0 takes the psi >= 0 branches.
Var reinforce_clip_term(Var ell, double w, double a_r, double c_kl, const ClipParams& params,
                        ClipBranch* branch = nullptr);

/// Branch that reinforce_clip_term selects for these inputs.
ClipBranch reinforce_clip_branch(double ell, double w, double a_r, double c_kl,
                                 const ClipParams& params);

/// reinforce_clip_term for one sample under `cfg`, with the importance
/// weight and KL component taken from the configured variant.
/// Throws ZeroSupportSample for a sample outside the old support.
Var reinforce_clip_loss(const TapePolicy& policy, const RpgConfig& cfg, const OutcomeSample& sample,
                        const FiniteMeasure& old, double baseline, const ClipParams& params,
                        ClipBranch* branch = nullptr);

/// Batch loss with clipping. Differentiable style sums dual_clip_loss with
/// the regularized advantage (see regularized_advantage_node); Reinforce style
/// sums reinforce_clip_loss. Weights and scale as in surrogate_loss.
Var clipped_surrogate_loss(const TapePolicy& policy, const RpgConfig& cfg, const Batch& batch,
                           const FiniteMeasure& old, double baseline, const ClipParams& params);

}  // namespace rpg
