#include "cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <future>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "rpg/errors.hpp"
#include "rpg/metrics.hpp"
#include "rpg/objectives.hpp"

namespace rpg::cli {

namespace {

using nlohmann::json;

constexpr double kSurrogateTol = 1e-10;
constexpr double kFdStep = 1e-5;

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  double operator()(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t size(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  std::uint64_t next() { return rng_(); }

 private:
  std::mt19937_64 rng_;
};

std::vector<double> softmax(std::span<const double> logits) {
  return SoftmaxPolicy(std::vector<double>(logits.begin(), logits.end())).probs();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

// manifest.json is the only output carrying a timestamp.
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const std::vector<std::string>& args, json settings) {
  json m;
  m["command"] = command;
  m["args"] = args;
  m["timestamp"] = utc_timestamp();
  m["version"] = "0.1.0";
  m["output_dir"] = dir.string();
  m["settings"] = std::move(settings);
  write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

std::filesystem::path resolve_output_dir(const std::string& flag, const std::filesystem::path& from_config) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  return default_output_dir();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(6) << std::scientific << v;
  return ss.str();
}

const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::K1: return "k1";
    case Estimator::K2: return "k2";
    case Estimator::K3: return "k3";
  }
  return "?";
}

MetricTable trace_summary_table(const std::vector<SweepResult>& results) {
  MetricTable t({{"seed", ColumnType::Integer},
                 {"iterations_run", ColumnType::Integer},
                 {"final_j_exact", ColumnType::Real},
                 {"final_mean_reward", ColumnType::Real},
                 {"final_entropy", ColumnType::Real},
                 {"final_div_to_ref", ColumnType::Real},
                 {"aborted", ColumnType::Boolean}});
  for (const auto& r : results) {
    const auto& recs = r.trace.records;
    const IterationRecord last = recs.empty() ? IterationRecord{} : recs.back();
    t.add_row({static_cast<std::int64_t>(r.seed), static_cast<std::int64_t>(recs.size()), last.j_exact,
               last.mean_reward, last.entropy, last.div_to_ref, r.trace.aborted});
  }
  return t;
}

void write_trace(const std::filesystem::path& dir, const TrainTrace& trace) {
  emit_metrics(trace_table(trace), MetricFormat::Csv, dir / "trace.csv");
  write_file_atomic(dir / "trace.json", trace_json(trace));
}

int cmd_gradcheck(const GradcheckOptions& opt, const std::filesystem::path& dir,
                  const std::vector<std::string>& args, std::ostream& out) {
  const auto checks = run_gradcheck(opt);
  MetricTable table({{"variant", ColumnType::Text},
                     {"trials", ColumnType::Integer},
                     {"max_surrogate_error", ColumnType::Real},
                     {"max_fd_error", ColumnType::Real},
                     {"pass", ColumnType::Boolean}});
  bool all = true;
  out << std::left << std::setw(24) << "variant" << std::setw(16) << "surrogate_err" << std::setw(16)
      << "fd_rel_err" << "result\n";
  for (const auto& c : checks) {
    out << std::setw(24) << c.variant << std::setw(16) << fmt(c.max_surrogate_error) << std::setw(16)
        << fmt(c.max_fd_error) << (c.pass ? "ok" : "FAIL") << "\n";
    table.add_row({c.variant, static_cast<std::int64_t>(c.trials), c.max_surrogate_error, c.max_fd_error, c.pass});
    all = all && c.pass;
  }
  emit_metrics(table, MetricFormat::Csv, dir / "gradcheck.csv");
  json settings;
  std::vector<std::string> names;
  for (const auto& v : opt.variants) names.push_back(v.name());
  settings["variants"] = names;
  settings["trials"] = opt.trials;
  settings["tol"] = opt.tol;
  settings["surrogate_tol"] = kSurrogateTol;
  settings["fd_step"] = kFdStep;
  settings["seed"] = opt.seed;
  settings["beta"] = opt.beta ? json(*opt.beta) : json(std::vector<double>{0.0, 0.1, 1.0});
  write_manifest(dir, "gradcheck", args, settings);
  return all ? kExitOk : kExitAssertion;
}

int cmd_audit(const std::vector<double>& perturbs, std::size_t n_arms, std::uint64_t seed, std::size_t samples,
              double tol, const std::filesystem::path& dir, const std::vector<std::string>& args,
              std::ostream& out) {
  AuditOptions opt;
  opt.enumerate = samples == 0;
  opt.samples = samples;
  opt.seed = seed;
  opt.tolerance = tol;
  json reports = json::array();
  MetricTable table({{"perturb", ColumnType::Real},
                     {"bias_norm", ColumnType::Real},
                     {"bias_linf", ColumnType::Real},
                     {"relative_bias", ColumnType::Real},
                     {"corrected_error_linf", ColumnType::Real},
                     {"corrected_consistent", ColumnType::Boolean}});
  bool all = true;
  for (double p : perturbs) {
    const auto inst = make_audit_instance(n_arms, p, seed);
    const auto r = audit_bias(SoftmaxPolicy(inst.policy_logits), FiniteMeasure(inst.ref_probs),
                              FiniteMeasure(inst.old_probs), opt);
    json j = json::parse(audit_report_json(r));
    j["perturb"] = p;
    j["old_probs"] = inst.old_probs;
    j["ref_probs"] = inst.ref_probs;
    j["policy_logits"] = inst.policy_logits;
    reports.push_back(j);
    table.add_row({p, r.bias_norm, r.bias_linf, r.relative_bias, r.corrected_error_linf, r.corrected_consistent});
    out << "perturb " << p << "  bias_norm " << fmt(r.bias_norm) << "  relative_bias " << fmt(r.relative_bias)
        << "  corrected_error " << fmt(r.corrected_error_linf) << (r.corrected_consistent ? "" : "  FAIL")
        << "\n";
    all = all && r.corrected_consistent;
  }
  write_file_atomic(dir / "audit.json", reports.dump(2) + "\n");
  emit_metrics(table, MetricFormat::Csv, dir / "audit.csv");
  write_manifest(dir, "audit-grpo", args,
                 {{"perturb", perturbs},
                  {"n_arms", n_arms},
                  {"seed", seed},
                  {"samples", samples},
                  {"enumerate", opt.enumerate},
                  {"fd_step", opt.fd_step},
                  {"tolerance", opt.tolerance}});
  return all ? kExitOk : kExitAssertion;
}

int cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& dir, const std::vector<std::string>& args,
              std::ostream& out) {
  const auto trace = run_training(cfg.env, cfg.train);
  write_trace(dir, trace);
  json settings = to_json(cfg);
  settings["run"]["output_dir"] = dir.string();
  write_manifest(dir, "train", args, settings);
  out << cfg.train.rpg.name() << ": " << trace.records.size() << " iterations";
  if (!trace.records.empty()) {
    const auto& last = trace.records.back();
    out << ", J " << last.j_exact << ", mean reward " << last.mean_reward << ", entropy " << last.entropy;
  }
  out << "\nwrote " << (dir / "trace.csv").string() << "\n";
  if (trace.aborted) {
    out << "aborted: " << trace.diagnostic << "\n";
    return kExitAssertion;
  }
  return kExitOk;
}

int cmd_estimate(const EstimateOptions& opt, const std::filesystem::path& dir,
                 const std::vector<std::string>& args, std::ostream& out) {
  const auto rows = run_estimate(opt);
  MetricTable table({{"divergence", ColumnType::Text},
                     {"estimator", ColumnType::Text},
                     {"exact_divergence", ColumnType::Real},
                     {"expectation", ColumnType::Real},
                     {"bias", ColumnType::Real},
                     {"mc_mean", ColumnType::Real},
                     {"mc_std", ColumnType::Real},
                     {"standard_error", ColumnType::Real},
                     {"z_score", ColumnType::Real}});
  bool all = true;
  out << std::left << std::setw(8) << "div" << std::setw(5) << "est" << std::setw(15) << "exact" << std::setw(15)
      << "bias" << std::setw(15) << "std" << "z\n";
  for (const auto& r : rows) {
    const double bias = r.expectation - r.exact_divergence;
    table.add_row({r.divergence.name(), std::string(estimator_name(r.estimator)), r.exact_divergence,
                   r.expectation, bias, r.mc_mean, r.mc_std, r.standard_error, r.z_score});
    out << std::setw(8) << r.divergence.name() << std::setw(5) << estimator_name(r.estimator) << std::setw(15)
        << fmt(r.exact_divergence) << std::setw(15) << fmt(bias) << std::setw(15) << fmt(r.mc_std)
        << std::setprecision(3) << std::fixed << r.z_score << std::defaultfloat << "\n";
    all = all && std::abs(r.z_score) <= opt.max_z;
  }
  emit_metrics(table, MetricFormat::Csv, dir / "estimate.csv");
  write_manifest(dir, "estimate", args,
                 {{"n_arms", opt.n_arms},
                  {"trials", opt.trials},
                  {"batch_size", opt.batch_size},
                  {"perturb", opt.perturb},
                  {"mass", opt.mass},
                  {"seed", opt.seed},
                  {"max_z", opt.max_z}});
  return all ? kExitOk : kExitAssertion;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, std::size_t threads,
              const std::filesystem::path& dir, const std::vector<std::string>& args, std::ostream& out) {
  const auto results = run_sweep(cfg, seeds, threads);
  bool all = true;
  for (const auto& r : results) {
    write_trace(dir / ("seed_" + std::to_string(r.seed)), r.trace);
    all = all && !r.trace.aborted;
  }
  const auto summary = trace_summary_table(results);
  emit_metrics(summary, MetricFormat::Csv, dir / "sweep.csv");
  json settings = to_json(cfg);
  settings["run"]["output_dir"] = dir.string();
  settings["sweep"]["seeds"] = seeds;
  settings["sweep"]["threads"] = threads;
  write_manifest(dir, "sweep", args, settings);
  out << summary.to_csv();
  return all ? kExitOk : kExitAssertion;
}

}  // namespace

std::filesystem::path default_output_dir() {
  const char* env = std::getenv("RPG_OUTPUT_DIR");
  if (env != nullptr && *env != '\0') return env;
  return "rpg_out";
}

std::vector<RpgConfig> parse_variants(const std::string& spec) {
  const auto all = all_variants(0.0);
  if (spec == "all") return all;
  std::vector<RpgConfig> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const RpgConfig& c) { return c.name() == item; });
    if (it == all.end()) throw ConfigError("--variants: unknown variant '" + item + "'");
    out.push_back(*it);
  }
  if (out.empty()) throw ConfigError("--variants: empty list");
  return out;
}

VariantCheck check_variant(const RpgConfig& variant, std::size_t trials, double tol, std::uint64_t seed,
                           std::optional<double> beta) {
  static constexpr double kBetas[] = {0.0, 0.1, 1.0};
  Uniform u(seed);
  VariantCheck check;
  check.variant = variant.name();
  check.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t n = u.size(2, 8);
    const double z = u(0.5, 2.0);
    std::vector<double> weights(n);
    std::vector<double> rewards(n);
    std::vector<double> logits(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = u(0.05, 1.0);
      total += weights[i];
      rewards[i] = u(-1.0, 1.0);
      logits[i] = u(-1.5, 1.5);
    }
    for (double& w : weights) w *= z / total;

    RpgConfig cfg = variant;
    cfg.beta = beta.value_or(kBetas[trial % 3]);
    const FiniteMeasure old(weights);
    const SoftmaxPolicy policy(logits);
    const auto exact = exact_gradient(cfg, policy, old, rewards);

    const Batch batch = enumeration_batch(old, rewards);
    Tape tape(logits);
    const TapePolicy tp(tape);
    const auto g = tape.backward(surrogate_loss(tp, cfg, batch, old, batch.mean_reward()));

    for (std::size_t j = 0; j < n; ++j) {
      check.max_surrogate_error = std::max(check.max_surrogate_error, std::abs(g[j] + exact[j]));
      auto shifted = logits;
      shifted[j] = logits[j] + kFdStep;
      const double hi = exact_objective(cfg, SoftmaxPolicy(shifted), old, rewards);
      shifted[j] = logits[j] - kFdStep;
      const double lo = exact_objective(cfg, SoftmaxPolicy(shifted), old, rewards);
      const double fd = (hi - lo) / (2 * kFdStep);
      check.max_fd_error = std::max(check.max_fd_error, std::abs(exact[j] - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  check.pass = check.max_surrogate_error <= kSurrogateTol && check.max_fd_error <= tol;
  return check;
}

std::vector<VariantCheck> run_gradcheck(const GradcheckOptions& options) {
  std::vector<std::future<VariantCheck>> jobs;
  for (const auto& v : options.variants) {
    jobs.push_back(std::async(std::launch::async, check_variant, v, options.trials, options.tol, options.seed,
                              options.beta));
  }
  std::vector<VariantCheck> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

AuditInstance make_audit_instance(std::size_t n_arms, double perturb, std::uint64_t seed) {
  if (n_arms < 2) throw DomainError("n_arms must be >= 2");
  if (!std::isfinite(perturb) || perturb < 0.0) throw DomainError("perturb must be finite and >= 0");
  Uniform u(seed);
  std::vector<double> old_logits(n_arms);
  std::vector<double> ref(n_arms);
  std::vector<double> dir(n_arms);
  for (std::size_t i = 0; i < n_arms; ++i) {
    old_logits[i] = u(-1.0, 1.0);
    ref[i] = u(0.2, 1.0);
    dir[i] = u(-1.0, 1.0);
  }
  double ref_total = 0.0;
  for (double r : ref) ref_total += r;
  for (double& r : ref) r /= ref_total;
  double dir_max = 0.0;
  for (double d : dir) dir_max = std::max(dir_max, std::abs(d));

  AuditInstance inst;
  inst.old_probs = softmax(old_logits);
  inst.ref_probs = ref;
  inst.policy_logits.resize(n_arms);
  for (std::size_t i = 0; i < n_arms; ++i) {
    inst.policy_logits[i] = std::log(inst.old_probs[i]) + perturb * dir[i] / dir_max;
  }
  return inst;
}

std::vector<EstimateRow> run_estimate(const EstimateOptions& opt) {
  if (opt.n_arms < 2) throw DomainError("n_arms must be >= 2");
  if (opt.trials < 2) throw DomainError("trials must be >= 2");
  if (opt.batch_size == 0) throw DomainError("batch size must be >= 1");
  if (!(opt.mass > 0.0) || !std::isfinite(opt.mass)) throw DomainError("mass must be > 0");
  Uniform u(opt.seed);
  std::vector<double> weights(opt.n_arms);
  std::vector<double> logits(opt.n_arms);
  double total = 0.0;
  for (auto& w : weights) {
    w = u(0.2, 1.0);
    total += w;
  }
  for (std::size_t i = 0; i < opt.n_arms; ++i) {
    weights[i] *= opt.mass / total;
    logits[i] = std::log(weights[i] / opt.mass) + opt.perturb * u(-1.0, 1.0);
  }
  const FiniteMeasure old(weights);
  const SoftmaxPolicy policy(logits);
  const std::vector<double> rewards(opt.n_arms, 0.0);
  std::vector<std::uint64_t> batch_seeds(opt.trials);
  for (auto& s : batch_seeds) s = u.next();
  std::vector<Batch> batches;
  batches.reserve(opt.trials);
  for (auto s : batch_seeds) batches.push_back(sample_batch(old, rewards, opt.batch_size, s));

  std::vector<EstimateRow> rows;
  for (auto dir : {Direction::Forward, Direction::Reverse}) {
    for (auto norm : {Normalization::Normalized, Normalization::Unnormalized}) {
      for (auto est : {Estimator::K1, Estimator::K2, Estimator::K3}) {
        EstimateRow row;
        row.divergence = {dir, norm};
        row.estimator = est;
        row.exact_divergence = divergence_exact(row.divergence, policy, old);
        row.expectation = estimator_expectation_exact(row.divergence, est, policy, old);
        double sum = 0.0;
        double sq = 0.0;
        for (const auto& b : batches) {
          const double e = divergence_mc(row.divergence, est, b, policy, old).estimate;
          sum += e;
          sq += e * e;
        }
        const double n = static_cast<double>(opt.trials);
        row.mc_mean = sum / n;
        row.mc_std = std::sqrt(std::max(0.0, (sq - n * row.mc_mean * row.mc_mean) / (n - 1)));
        row.standard_error = row.mc_std / std::sqrt(n);
        const double diff = row.mc_mean - row.expectation;
        row.z_score = row.standard_error > 0.0 ? diff / row.standard_error : (diff == 0.0 ? 0.0 : INFINITY);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::vector<SweepResult> run_sweep(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                   std::size_t threads) {
  std::vector<SweepResult> results(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        TrainConfig c = cfg.train;
        c.seed = seeds[i];
        results[i] = {seeds[i], run_training(cfg.env, c)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(seeds.size(), 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regularized policy gradient experiments on finite outcome spaces", "rpg"};
  app.require_subcommand(1);

  std::string output_flag;
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("-o,--output-dir", output_flag, "Output directory (default $RPG_OUTPUT_DIR or rpg_out)");
  };

  std::string variants = "all";
  GradcheckOptions grad;
  double grad_beta = 0.0;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of all surrogate gradients");
  gradcheck->add_option("--variants", variants, "all, or names such as URKL/reinforce,FKL/differentiable")
      ->capture_default_str();
  gradcheck->add_option("--trials", grad.trials, "Random instances per variant")->capture_default_str();
  gradcheck->add_option("--tol", grad.tol, "Relative tolerance against finite differences")->capture_default_str();
  gradcheck->add_option("--seed", grad.seed)->capture_default_str();
  auto* beta_opt = gradcheck->add_option("--beta", grad_beta, "Fixed beta (default: cycle 0, 0.1, 1)");
  add_output(gradcheck);

  std::vector<double> perturbs{0.5};
  std::size_t audit_arms = 4;
  std::uint64_t audit_seed = 0;
  std::size_t audit_samples = 0;
  double audit_tol = 1e-6;
  auto* audit = app.add_subcommand("audit-grpo", "Gradient bias of the unweighted k3 penalty");
  audit->add_option("--perturb", perturbs, "Logit perturbation(s) away from pi_old")
      ->delimiter(',')
      ->capture_default_str();
  audit->add_option("--n-arms", audit_arms)->capture_default_str();
  audit->add_option("--seed", audit_seed)->capture_default_str();
  audit->add_option("--samples", audit_samples, "Sampled batch size (0: enumerate)")->capture_default_str();
  audit->add_option("--tol", audit_tol, "Corrected-gradient tolerance")->capture_default_str();
  add_output(audit);

  std::string config_path;
  std::uint64_t seed_override = 0;
  auto* train = app.add_subcommand("train", "Run the off-policy training loop on a bandit");
  train->add_option("-c,--config", config_path, "INI config file")->required();
  auto* train_seed = train->add_option("--seed", seed_override, "Override run.seed");
  add_output(train);

  EstimateOptions est;
  auto* estimate = app.add_subcommand("estimate", "Monte-Carlo study of the k1/k2/k3 divergence estimators");
  estimate->add_option("--n-arms", est.n_arms)->capture_default_str();
  estimate->add_option("--trials", est.trials, "Number of batches")->capture_default_str();
  estimate->add_option("--batch", est.batch_size, "Samples per batch")->capture_default_str();
  estimate->add_option("--perturb", est.perturb)->capture_default_str();
  estimate->add_option("--mass", est.mass, "Total mass of pi_old")->capture_default_str();
  estimate->add_option("--seed", est.seed)->capture_default_str();
  estimate->add_option("--max-z", est.max_z, "Allowed |mean - expectation| in standard errors")
      ->capture_default_str();
  add_output(estimate);

  std::string seeds_flag;
  std::size_t threads = 0;
  auto* sweep = app.add_subcommand("sweep", "Train once per seed, in parallel");
  sweep->add_option("-c,--config", config_path, "INI config file")->required();
  sweep->add_option("--seeds", seeds_flag, "e.g. 0-7 or 1,5,9 (default: sweep.seeds, else 0-3)");
  auto* threads_opt = sweep->add_option("--threads", threads, "Worker threads (0: all cores)");
  add_output(sweep);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gradcheck->parsed()) {
      grad.variants = parse_variants(variants);
      if (beta_opt->count() > 0) {
        if (!(grad_beta >= 0.0) || !std::isfinite(grad_beta)) throw ConfigError("--beta: must be >= 0");
        grad.beta = grad_beta;
      }
      if (grad.trials == 0) throw ConfigError("--trials: must be >= 1");
      return cmd_gradcheck(grad, resolve_output_dir(output_flag, {}), args, out);
    }
    if (audit->parsed()) {
      if (audit_arms < 2) throw ConfigError("--n-arms: must be >= 2");
      for (double p : perturbs) {
        if (!std::isfinite(p) || p < 0.0) throw ConfigError("--perturb: must be finite and >= 0");
      }
      return cmd_audit(perturbs, audit_arms, audit_seed, audit_samples, audit_tol,
                       resolve_output_dir(output_flag, {}), args, out);
    }
    if (estimate->parsed()) {
      if (est.n_arms < 2) throw ConfigError("--n-arms: must be >= 2");
      if (est.trials < 2) throw ConfigError("--trials: must be >= 2");
      if (est.batch_size == 0) throw ConfigError("--batch: must be >= 1");
      if (!(est.mass > 0.0)) throw ConfigError("--mass: must be > 0");
      return cmd_estimate(est, resolve_output_dir(output_flag, {}), args, out);
    }
    ExperimentConfig cfg = load_config(config_path);
    if (train->parsed()) {
      if (train_seed->count() > 0) cfg.train.seed = seed_override;
      return cmd_train(cfg, resolve_output_dir(output_flag, cfg.output_dir), args, out);
    }
    std::vector<std::uint64_t> seeds = cfg.sweep_seeds;
    if (!seeds_flag.empty()) seeds = parse_seed_list(seeds_flag, "--seeds");
    if (seeds.empty()) seeds = {0, 1, 2, 3};
    if (threads_opt->count() == 0) threads = cfg.sweep_threads;
    return cmd_sweep(cfg, seeds, threads, resolve_output_dir(output_flag, cfg.output_dir), args, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitAssertion;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitAssertion;
  }
}

}  // namespace rpg::cli
