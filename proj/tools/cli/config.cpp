#include "cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rpg/errors.hpp"
#include "rpg/metrics.hpp"

namespace rpg::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"run", {"seed", "output_dir"}},
      {"env", {"rewards"}},
      {"rpg", {"direction", "normalization", "style", "beta", "include_z", "detach_advantage"}},
      {"clip", {"enabled", "eps_low", "eps_high", "c"}},
      {"train",
       {"lr", "batch_size", "epochs", "iterations", "ref_update", "grad_norm_clip", "batch", "baseline",
        "line_search", "initial_logits", "reference"}},
      {"sweep", {"seeds", "threads"}},
  };
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError(key + ": expected " + expected + ", got '" + value + "'");
}

double to_real(const std::string& key, const std::string& value) {
  try {
    return parse_real(trim(value));
  } catch (const DomainError&) {
    bad_value(key, value, "a number");
  }
}

std::uint64_t to_count(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) bad_value(key, value, "a nonnegative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "a boolean");
}

// Visits key `name` of `section` when present, passing its qualified name.
template <typename F>
void with(const pt::ptree& root, const std::string& section, const std::string& name, F&& f) {
  const auto sec = root.get_child_optional(section);
  if (!sec) return;
  const auto v = sec->get_optional<std::string>(pt::ptree::path_type(name, '\0'));
  if (v) f(section + "." + name, *v);
}

void check_keys(const pt::ptree& root) {
  for (const auto& [section, body] : root) {
    const auto it = schema().find(section);
    if (body.empty() && !body.data().empty()) throw ConfigError(section + ": key outside of any section");
    if (it == schema().end()) throw ConfigError(section + ": unknown section");
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw ConfigError(section + "." + key + ": unknown key");
    }
  }
}

template <typename E>
E rethrow_as_config(const std::string& key, const std::string& value, E (*parse)(std::string_view)) {
  try {
    return parse(trim(value));
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    env.validate();
    train.validate(env.n_arms());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

TrainConfig default_train_config() {
  TrainConfig cfg;
  cfg.clip = ClipParams{};
  return cfg;
}

Direction parse_direction(std::string_view s) {
  if (s == "reverse") return Direction::Reverse;
  if (s == "forward") return Direction::Forward;
  throw ConfigError("expected reverse or forward, got '" + std::string(s) + "'");
}

Normalization parse_normalization(std::string_view s) {
  if (s == "unnormalized") return Normalization::Unnormalized;
  if (s == "normalized") return Normalization::Normalized;
  throw ConfigError("expected unnormalized or normalized, got '" + std::string(s) + "'");
}

LossStyle parse_style(std::string_view s) {
  if (s == "reinforce") return LossStyle::Reinforce;
  if (s == "differentiable") return LossStyle::Differentiable;
  throw ConfigError("expected reinforce or differentiable, got '" + std::string(s) + "'");
}

RefUpdateRule parse_ref_update(std::string_view s) {
  if (s == "never") return RefUpdateRule::never();
  const auto colon = s.find(':');
  const std::string kind(s.substr(0, colon));
  const std::string arg = colon == std::string_view::npos ? std::string() : std::string(s.substr(colon + 1));
  if (kind == "every" && !arg.empty()) {
    const auto k = to_count("every", arg);
    if (k == 0) throw ConfigError("every: period must be at least 1");
    return RefUpdateRule::every(k);
  }
  if (kind == "kl" && !arg.empty()) {
    const double kappa = to_real("kl", arg);
    if (!(kappa > 0.0)) throw ConfigError("kl: threshold must be positive");
    return RefUpdateRule::kl_threshold(kappa);
  }
  throw ConfigError("expected never, every:K or kl:KAPPA, got '" + std::string(s) + "'");
}

std::string format_ref_update(const RefUpdateRule& rule) {
  switch (rule.kind) {
    case RefUpdateRule::Kind::Never: return "never";
    case RefUpdateRule::Kind::EveryK: return "every:" + std::to_string(rule.every_k);
    case RefUpdateRule::Kind::KlThreshold: return "kl:" + format_real(rule.kappa);
  }
  return {};
}

std::vector<double> parse_real_list(std::string_view s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss{std::string(s)};
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_real(key, item));
  if (out.empty()) bad_value(key, std::string(s), "a comma-separated list of numbers");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view s, const std::string& key) {
  std::vector<std::uint64_t> out;
  std::stringstream ss{std::string(s)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto lo = to_count(key, item.substr(0, dash));
      const auto hi = to_count(key, item.substr(dash + 1));
      if (hi < lo) bad_value(key, item, "an increasing range");
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(to_count(key, item));
    }
  }
  if (out.empty()) bad_value(key, std::string(s), "a seed list");
  return out;
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  pt::ptree root;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  check_keys(root);

  ExperimentConfig cfg;
  cfg.train = default_train_config();
  TrainConfig& t = cfg.train;
  RpgConfig& r = t.rpg;

  with(root, "run", "seed", [&](auto k, auto v) { t.seed = to_count(k, v); });
  with(root, "run", "output_dir", [&](auto, auto v) { cfg.output_dir = trim(v); });

  bool have_rewards = false;
  with(root, "env", "rewards", [&](auto k, auto v) {
    cfg.env.rewards = parse_real_list(v, k);
    have_rewards = true;
  });
  if (!have_rewards) throw ConfigError("env.rewards: required key is missing");

  with(root, "rpg", "direction", [&](auto k, auto v) { r.direction = rethrow_as_config(k, v, parse_direction); });
  with(root, "rpg", "normalization",
       [&](auto k, auto v) { r.normalization = rethrow_as_config(k, v, parse_normalization); });
  with(root, "rpg", "style", [&](auto k, auto v) { r.style = rethrow_as_config(k, v, parse_style); });
  with(root, "rpg", "beta", [&](auto k, auto v) { r.beta = to_real(k, v); });
  with(root, "rpg", "include_z", [&](auto k, auto v) { r.include_z = to_bool(k, v); });
  with(root, "rpg", "detach_advantage", [&](auto k, auto v) { r.detach_advantage = to_bool(k, v); });

  ClipParams clip = t.clip.value_or(ClipParams{});
  bool clip_on = t.clip.has_value();
  with(root, "clip", "enabled", [&](auto k, auto v) { clip_on = to_bool(k, v); });
  with(root, "clip", "eps_low", [&](auto k, auto v) { clip.eps_low = to_real(k, v); });
  with(root, "clip", "eps_high", [&](auto k, auto v) { clip.eps_high = to_real(k, v); });
  with(root, "clip", "c", [&](auto k, auto v) { clip.c = to_real(k, v); });
  t.clip = clip_on ? std::optional<ClipParams>(clip) : std::nullopt;

  with(root, "train", "lr", [&](auto k, auto v) { t.lr = to_real(k, v); });
  with(root, "train", "batch_size", [&](auto k, auto v) { t.batch_size = to_count(k, v); });
  with(root, "train", "epochs", [&](auto k, auto v) { t.epochs = to_count(k, v); });
  with(root, "train", "iterations", [&](auto k, auto v) { t.iterations = to_count(k, v); });
  with(root, "train", "ref_update",
       [&](auto k, auto v) { t.ref_update = rethrow_as_config(k, v, parse_ref_update); });
  with(root, "train", "grad_norm_clip", [&](auto k, auto v) {
    if (trim(v) == "none") {
      t.grad_norm_clip.reset();
    } else {
      t.grad_norm_clip = to_real(k, v);
    }
  });
  with(root, "train", "batch", [&](auto k, auto v) {
    const auto s = trim(v);
    if (s == "sampled") {
      t.batch_kind = BatchKind::Sampled;
    } else if (s == "enumeration") {
      t.batch_kind = BatchKind::Enumeration;
    } else {
      bad_value(k, v, "sampled or enumeration");
    }
  });
  with(root, "train", "baseline", [&](auto k, auto v) {
    const auto s = trim(v);
    if (s == "batch_mean") {
      t.baseline = BaselineMode::BatchMean;
    } else if (s == "none") {
      t.baseline = BaselineMode::None;
    } else {
      bad_value(k, v, "batch_mean or none");
    }
  });
  with(root, "train", "line_search", [&](auto k, auto v) { t.line_search = to_bool(k, v); });
  with(root, "train", "initial_logits", [&](auto k, auto v) { t.initial_logits = parse_real_list(v, k); });
  with(root, "train", "reference", [&](auto k, auto v) {
    try {
      t.reference = FiniteMeasure(parse_real_list(v, k));
    } catch (const DegenerateMeasure& e) {
      throw ConfigError(k + ": " + e.what());
    }
  });

  with(root, "sweep", "seeds", [&](auto k, auto v) { cfg.sweep_seeds = parse_seed_list(v, k); });
  with(root, "sweep", "threads", [&](auto k, auto v) { cfg.sweep_threads = to_count(k, v); });

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

nlohmann::json to_json(const RpgConfig& cfg) {
  return {
      {"direction", cfg.direction == Direction::Reverse ? "reverse" : "forward"},
      {"normalization", cfg.unnormalized() ? "unnormalized" : "normalized"},
      {"style", cfg.style == LossStyle::Reinforce ? "reinforce" : "differentiable"},
      {"beta", cfg.beta},
      {"include_z", cfg.include_z},
      {"detach_advantage", cfg.detach_advantage},
      {"variant", cfg.name()},
  };
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  const TrainConfig& t = cfg.train;
  nlohmann::json clip = {{"enabled", t.clip.has_value()}};
  const ClipParams cp = t.clip.value_or(ClipParams{});
  clip["eps_low"] = cp.eps_low;
  clip["eps_high"] = cp.eps_high;
  clip["c"] = cp.c;
  nlohmann::json train = {
      {"lr", t.lr},
      {"batch_size", t.batch_size},
      {"epochs", t.epochs},
      {"iterations", t.iterations},
      {"ref_update", format_ref_update(t.ref_update)},
      {"grad_norm_clip", t.grad_norm_clip ? nlohmann::json(*t.grad_norm_clip) : nlohmann::json("none")},
      {"batch", t.batch_kind == BatchKind::Sampled ? "sampled" : "enumeration"},
      {"baseline", t.baseline == BaselineMode::BatchMean ? "batch_mean" : "none"},
      {"line_search", t.line_search},
      {"initial_logits", t.initial_logits.empty() ? std::vector<double>(cfg.env.n_arms(), 0.0) : t.initial_logits},
  };
  if (t.reference) {
    train["reference"] = std::vector<double>(t.reference->weights().begin(), t.reference->weights().end());
  } else {
    train["reference"] = "initial policy";
  }
  return {
      {"run", {{"seed", t.seed}, {"output_dir", cfg.output_dir.string()}}},
      {"env", {{"rewards", cfg.env.rewards}}},
      {"rpg", to_json(t.rpg)},
      {"clip", clip},
      {"train", train},
      {"sweep", {{"seeds", cfg.sweep_seeds}, {"threads", cfg.sweep_threads}}},
  };
}

}  // namespace rpg::cli
