#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rpg/training.hpp"

namespace rpg::cli {

/// Bad config file, unknown key or invalid value. The message starts with
/// the file/line or the section.key it refers to. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a train or sweep run needs, read from an INI file:
///
///   [run]    seed, output_dir
///   [env]    rewards (comma separated, required)
///   [rpg]    direction, normalization, style, beta, include_z, detach_advantage
///   [clip]   enabled, eps_low, eps_high, c
///   [train]  lr, batch_size, epochs, iterations, ref_update, grad_norm_clip,
///            batch, baseline, line_search, initial_logits, reference
///   [sweep]  seeds, threads
///
/// Missing keys keep their defaults; unknown sections or keys are rejected.
struct ExperimentConfig {
  BanditEnv env;
  TrainConfig train;
  std::filesystem::path output_dir;  ///< empty: use the environment default
  std::vector<std::uint64_t> sweep_seeds;
  std::size_t sweep_threads = 0;  ///< 0: hardware concurrency

  void validate() const;
};

/// Default train settings used by the CLI: clipping on with the default
/// ClipParams, beta from RpgConfig.
TrainConfig default_train_config();

ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// "reverse"/"forward", "unnormalized"/"normalized", "reinforce"/"differentiable".
Direction parse_direction(std::string_view s);
Normalization parse_normalization(std::string_view s);
LossStyle parse_style(std::string_view s);

/// "never", "every:K" or "kl:KAPPA".
RefUpdateRule parse_ref_update(std::string_view s);
std::string format_ref_update(const RefUpdateRule& rule);

/// Comma-separated reals; throws ConfigError naming `key` on a bad entry.
std::vector<double> parse_real_list(std::string_view s, const std::string& key);

/// "0,3,7" or a range "0-7" (inclusive).
std::vector<std::uint64_t> parse_seed_list(std::string_view s, const std::string& key);

/// The fully resolved configuration, defaults included.
nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const RpgConfig& cfg);

}  // namespace rpg::cli
