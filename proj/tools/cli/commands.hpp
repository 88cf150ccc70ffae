#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "rpg/divergences.hpp"
#include "rpg/grpo_audit.hpp"

namespace rpg::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitAssertion = 1,
  kExitConfig = 2,
};

/// Output directory when neither a flag nor the config sets one:
/// $RPG_OUTPUT_DIR, else "rpg_out".
std::filesystem::path default_output_dir();

/// "all" or a comma-separated list of variant names such as "URKL/reinforce".
std::vector<RpgConfig> parse_variants(const std::string& spec);

// gradcheck

struct GradcheckOptions {
  std::vector<RpgConfig> variants;
  std::size_t trials = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  /// Cycle through {0, 0.1, 1} when unset.
  std::optional<double> beta;
};

struct VariantCheck {
  std::string variant;
  std::size_t trials = 0;
  /// max |surrogate grad + exact_gradient|_inf over trials
  double max_surrogate_error = 0.0;
  /// max over trials and components of |exact - fd| / max(1, |fd|)
  double max_fd_error = 0.0;
  bool pass = false;
};

/// Random instances: N in [2, 8], Z_old in [0.5, 2], rewards in [-1, 1].
/// Compares the enumeration-batch surrogate gradient with -exact_gradient and
/// exact_gradient with central differences of exact_objective.
VariantCheck check_variant(const RpgConfig& variant, std::size_t trials, double tol, std::uint64_t seed,
                           std::optional<double> beta);

std::vector<VariantCheck> run_gradcheck(const GradcheckOptions& options);

// audit-grpo

struct AuditInstance {
  std::vector<double> old_probs;
  std::vector<double> ref_probs;
  std::vector<double> policy_logits;
};

/// Random pi_old and pi_ref on `n_arms` outcomes; the policy logits are
/// log pi_old plus a random direction whose largest entry is `perturb` in magnitude.
AuditInstance make_audit_instance(std::size_t n_arms, double perturb, std::uint64_t seed);

// estimate

struct EstimateOptions {
  std::size_t n_arms = 4;
  std::size_t trials = 200;
  std::size_t batch_size = 1000;
  double perturb = 0.5;
  double mass = 1.5;
  std::uint64_t seed = 0;
  /// Assertion bound on |mean - expectation| in standard errors.
  double max_z = 5.0;
};

struct EstimateRow {
  DivergenceSpec divergence;
  Estimator estimator = Estimator::K3;
  double exact_divergence = 0.0;
  double expectation = 0.0;  ///< exact mean of the per-batch estimate
  double mc_mean = 0.0;
  double mc_std = 0.0;  ///< spread of per-batch estimates
  double standard_error = 0.0;
  double z_score = 0.0;
};

/// Per-batch divergence estimates for all four divergences and k1/k2/k3.
std::vector<EstimateRow> run_estimate(const EstimateOptions& options);

// sweep

struct SweepResult {
  std::uint64_t seed = 0;
  TrainTrace trace;
};

/// One training run per seed, `threads` at a time (0: hardware concurrency).
/// Results are in seed-list order.
std::vector<SweepResult> run_sweep(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                   std::size_t threads);

/// Full command line: `args[0]` is the program name. Returns an ExitCode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rpg::cli
