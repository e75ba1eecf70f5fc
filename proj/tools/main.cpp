#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ttrl/config.hpp"
#include "ttrl/errors.hpp"
#include "ttrl/evalbench.hpp"
#include "ttrl/metrics.hpp"
#include "ttrl/policy.hpp"
#include "ttrl/trainer.hpp"

namespace fs = std::filesystem;
using namespace ttrl;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file")->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--set", args.overrides, "override as section.key=value (repeatable)");
  cmd->add_option("--seed", args.seed, "override run.master_seed")->each([&](const std::string&) {
    args.seed_set = true;
  });
}

fs::path resolve_out_dir(const CommonArgs& args, const std::string& command) {
  if (!args.out_dir.empty()) return args.out_dir;
  const char* root = std::getenv("TTRL_OUTPUT_ROOT");
  const std::string leaf = "out-" + command;
  if (root && *root) return fs::path(root) / leaf;
  return fs::path(leaf);
}

RunConfig load(const CommonArgs& args) {
  std::vector<std::string> overrides = args.overrides;
  if (args.seed_set) overrides.push_back("run.master_seed=" + std::to_string(args.seed));
  return load_config(args.config_path, overrides);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_pretrain(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const fs::path dir = resolve_out_dir(args, "pretrain");
  fs::create_directories(dir);
  write_text(dir / "config.resolved.toml", format_config(cfg));

  const PolicyParams params = pretrain_bc(cfg);
  save_params(params, dir / "params.bin");
  std::cout << eval_success_rate(params, cfg, cfg.eval_episodes) << "\n";
  return 0;
}

int cmd_ttt(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const fs::path dir = resolve_out_dir(args, "ttt");
  fs::create_directories(dir);
  write_text(dir / "config.resolved.toml", format_config(cfg));

  const auto t0 = std::chrono::steady_clock::now();
  PolicyParams params = pretrain_bc(cfg);

  std::ofstream metrics_file(dir / "metrics.jsonl", std::ios::trunc);
  if (!metrics_file) throw std::runtime_error("cannot write metrics.jsonl");
  JsonlMetricsSink sink(metrics_file);
  const TttResult result = run_ttt(std::move(params), cfg, &sink);
  save_params(result.params, dir / "params.bin");

  const double final_sr = eval_success_rate(result.params, cfg, cfg.eval_episodes);
  std::uint64_t calls = 0;
  double final_mean_reward = 0.0;
  for (const IterationMetrics& m : result.metrics) calls += m.critic_calls;
  if (!result.metrics.empty()) final_mean_reward = result.metrics.back().mean_reward;
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream summary;
  summary << "iterations,final_mean_reward,final_eval_sr,total_critic_calls,wall_time_s\n";
  summary.precision(6);
  summary << result.metrics.size() << ',' << final_mean_reward << ',' << final_sr << ','
          << calls << ',' << wall << '\n';
  write_text(dir / "summary.csv", summary.str());

  std::cout << final_sr << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& params_path) {
  const RunConfig cfg = load(args);
  const PolicyParams params = load_params(params_path);
  std::cout << eval_success_rate(params, cfg, cfg.eval_episodes) << "\n";
  return 0;
}

int cmd_critic_bench(const CommonArgs& args, int num_success, int num_failure) {
  const RunConfig cfg = load(args);
  const fs::path dir = resolve_out_dir(args, "critic-bench");
  fs::create_directories(dir);
  write_text(dir / "config.resolved.toml", format_config(cfg));

  const auto validation = build_validation_set(cfg, num_success, num_failure);

  struct Bench {
    std::string name;
    RewardMode mode;
    int frames;
  };
  const std::vector<Bench> benches = {
      {"vanilla-2frame", RewardMode::kVanilla, 2},
      {"uniform-4", RewardMode::kUniform, 4},
      {"uniform-8", RewardMode::kUniform, 8},
      {"accumulative-interval", RewardMode::kAccumulative, 0},
  };

  std::ostringstream csv;
  csv << "estimator,precision,recall,f1,reward_calls\n";
  csv.precision(6);
  for (const Bench& b : benches) {
    RunConfig bench_cfg = cfg;
    bench_cfg.reward_mode = b.mode;
    if (b.frames > 0) bench_cfg.uniform_frames = b.frames;
    const FScoreReport report =
        critic_fscore(bench_cfg, b.mode, validation, bench_cfg.progress.tau_threshold);
    const std::uint64_t calls = reward_calls_per_rollout(bench_cfg, b.mode);
    csv << b.name << ',' << report.precision << ',' << report.recall << ',' << report.f1 << ','
        << calls << '\n';
    std::cout << b.name << " " << report.f1 << "\n";
  }
  write_text(dir / "critic_bench.csv", csv.str());
  return 0;
}

int cmd_ablate(const CommonArgs& args, const std::string& suite, int num_seeds) {
  const RunConfig cfg = load(args);
  const fs::path dir = resolve_out_dir(args, "ablate");
  fs::create_directories(dir);
  write_text(dir / "config.resolved.toml", format_config(cfg));

  std::vector<AblationVariant> variants;
  if (suite == "estimators") {
    RunConfig vanilla = cfg;
    vanilla.reward_mode = RewardMode::kVanilla;
    RunConfig uniform4 = cfg;
    uniform4.reward_mode = RewardMode::kUniform;
    uniform4.uniform_frames = 4;
    RunConfig uniform8 = cfg;
    uniform8.reward_mode = RewardMode::kUniform;
    uniform8.uniform_frames = 8;
    RunConfig accumulative = cfg;
    accumulative.reward_mode = RewardMode::kAccumulative;
    variants = {{"vanilla-2frame", vanilla},
                {"uniform-4", uniform4},
                {"uniform-8", uniform8},
                {"accumulative-interval", accumulative}};
  } else if (suite == "horizon") {
    RunConfig fixed = cfg;
    fixed.schedule = HorizonSchedule{{{cfg.env.max_horizon_cap, 1}}};
    RunConfig progressive = cfg;
    progressive.schedule = default_schedule(
        cfg.env.max_horizon_cap, 3,
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(cfg.num_iterations) / 3));
    variants = {{"fixed-horizon", fixed}, {"progressive-horizon", progressive}};
  } else {
    throw ConfigError("unknown ablation suite '" + suite + "'; valid suites: estimators, horizon");
  }

  std::vector<std::vector<IterationMetrics>> logs;
  const std::vector<AblationRow> rows = run_ablation_table(variants, num_seeds, &logs);

  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    for (int s = 0; s < num_seeds; ++s) {
      const std::size_t idx = vi * static_cast<std::size_t>(num_seeds) + static_cast<std::size_t>(s);
      if (idx >= logs.size()) continue;
      std::ofstream out(dir / (variants[vi].name + "-seed" + std::to_string(s) + ".jsonl"));
      for (const IterationMetrics& m : logs[idx]) out << to_json(m).dump() << '\n';
    }
  }

  const std::string csv = ablation_csv(rows);
  write_text(dir / "ablation.csv", csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ChainWorld test-time training"};
  app.require_subcommand(1);

  CommonArgs pretrain_args, ttt_args, eval_args, bench_args, ablate_args;
  std::string params_path, suite = "estimators";
  int bench_success = 100, bench_failure = 100, ablate_seeds = 5;

  add_common(app.add_subcommand("pretrain", "behavior-clone scripted demonstrations"),
             pretrain_args);
  add_common(app.add_subcommand("ttt", "run test-time training"), ttt_args);
  CLI::App* eval_cmd = app.add_subcommand("eval", "greedy success rate of saved params");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--params", params_path, "policy params binary")->required();
  CLI::App* bench_cmd = app.add_subcommand("critic-bench", "estimator F-score protocol");
  add_common(bench_cmd, bench_args);
  bench_cmd->add_option("--success-cases", bench_success, "success cases in the validation set");
  bench_cmd->add_option("--failure-cases", bench_failure, "failure cases in the validation set");
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "run an ablation suite");
  add_common(ablate_cmd, ablate_args);
  ablate_cmd->add_option("--suite", suite, "estimators | horizon");
  ablate_cmd->add_option("--seeds", ablate_seeds, "seeds per variant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (app.got_subcommand("pretrain")) return cmd_pretrain(pretrain_args);
    if (app.got_subcommand("ttt")) return cmd_ttt(ttt_args);
    if (app.got_subcommand("eval")) return cmd_eval(eval_args, params_path);
    if (app.got_subcommand("critic-bench"))
      return cmd_critic_bench(bench_args, bench_success, bench_failure);
    if (app.got_subcommand("ablate")) return cmd_ablate(ablate_args, suite, ablate_seeds);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
