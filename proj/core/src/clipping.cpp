#include "rpg/clipping.hpp"

#include <algorithm>
#include <cmath>

#include "rpg/errors.hpp"

namespace rpg {

void ClipParams::validate() const {
  if (!(eps_low > 0.0) || !(eps_high > 0.0)) throw DomainError("clip eps must be > 0");
  if (!(lower() > 0.0)) throw DomainError("clip requires 1 - eps_low > 0");
  if (!(c > upper())) throw DomainError("clip requires c > 1 + eps_high");
}

double clip(double w, double lo, double hi) {
  if (lo > hi) throw DomainError("clip bounds out of order");
  return std::min(std::max(w, lo), hi);
}

Var clip(Var w, double lo, double hi) {
  if (lo > hi) throw DomainError("clip bounds out of order");
  Tape& tape = *w.tape();
  return min(max(w, tape.constant(lo)), tape.constant(hi));
}

Var dual_clip_loss(Var w, Var a_hat, const ClipParams& params) {
  if (!(w.value() > 0.0)) throw DomainError("dual_clip_loss requires w > 0");
  const Var unclipped = -(w * a_hat);
  const Var clipped = -(clip(w, params.lower(), params.upper()) * a_hat);
  const Var l_clip = max(unclipped, clipped);
  if (a_hat.value() >= 0.0) return l_clip;
  return min(l_clip, -(params.c * a_hat));
}

const char* to_string(ClipBranch b) {
  switch (b) {
    case ClipBranch::InBandPositive:
      return "in_band_positive";
    case ClipBranch::HighPlateau:
      return "high_plateau";
    case ClipBranch::LowPlateau:
      return "low_plateau";
    case ClipBranch::InBandNegative:
      return "in_band_negative";
    case ClipBranch::CPlateau:
      return "c_plateau";
  }
  return "?";
}

ClipBranch reinforce_clip_branch(double ell, double w, double a_r, double c_kl,
                                 const ClipParams& params) {
  const double psi = (a_r + c_kl / w) * ell;
  if (psi >= 0.0) return w < params.upper() ? ClipBranch::InBandPositive : ClipBranch::HighPlateau;
  if (w <= params.lower()) return ClipBranch::LowPlateau;
  if (w < params.c) return ClipBranch::InBandNegative;
  return ClipBranch::CPlateau;
}

Var reinforce_clip_term(Var ell, double w, double a_r, double c_kl, const ClipParams& params,
                        ClipBranch* branch) {
  Tape& tape = *ell.tape();
  const ClipBranch b = reinforce_clip_branch(ell.value(), w, a_r, c_kl, params);
  if (branch != nullptr) *branch = b;
  auto plateau = [&](double w_bound) {
    return tape.constant(a_r + c_kl / w_bound) * stop_gradient(ell) * tape.constant(w_bound);
  };
  switch (b) {
    case ClipBranch::InBandPositive:
    case ClipBranch::InBandNegative:
      return reinforce_term(ell, a_r, c_kl, w);
    case ClipBranch::HighPlateau:
      return plateau(params.upper());
    case ClipBranch::LowPlateau:
      return plateau(params.lower());
    case ClipBranch::CPlateau: {
      const Var sg_ell = stop_gradient(ell);
      return tape.constant(a_r) * sg_ell * params.c + tape.constant(c_kl) * sg_ell;
    }
  }
  return reinforce_term(ell, a_r, c_kl, w);
}

Var reinforce_clip_loss(const TapePolicy& policy, const RpgConfig& cfg, const OutcomeSample& sample,
                        const FiniteMeasure& old, double baseline, const ClipParams& params,
                        ClipBranch* branch) {
  const Var log_p = policy.log_prob(sample.outcome);
  const double log_w = log_p.value() - old_log_density(cfg, old, sample);
  return reinforce_clip_term(-log_p, std::exp(log_w), sample.reward - baseline,
                             kl_component(cfg, log_w), params, branch);
}

Var clipped_surrogate_loss(const TapePolicy& policy, const RpgConfig& cfg, const Batch& batch,
                           const FiniteMeasure& old, double baseline, const ClipParams& params) {
  cfg.validate();
  params.validate();
  Tape& tape = policy.tape();
  const double scale = loss_scale(cfg, old);
  if (cfg.style == LossStyle::Reinforce) {
    return weighted_batch_sum(
        tape, batch.weights,
        [&](std::size_t i) {
          return reinforce_clip_loss(policy, cfg, batch.samples[i], old, baseline, params);
        },
        scale);
  }
  return weighted_batch_sum(
      tape, batch.weights,
      [&](std::size_t i) {
        const OutcomeSample& s = batch.samples[i];
        const Var log_w = policy.log_prob(s.outcome) - old_log_density(cfg, old, s);
        const Var a_hat = regularized_advantage_node(cfg, s.reward - baseline, log_w);
        return dual_clip_loss(exp(log_w), a_hat, params);
      },
      scale);
}

}  // namespace rpg
