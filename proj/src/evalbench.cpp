#include "ttrl/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ttrl/rng.hpp"

namespace ttrl {

double f1_score(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double eval_success_rate(const PolicyParams& params, const RunConfig& config, int episodes) {
  return greedy_success_rate(params, config, episodes);
}

namespace {

// Shortest-path demonstration with seeded axis interleaving; same cell
// sequence family as scripted_expert but with the move order jittered.
Trajectory jittered_expert(const RunConfig& config, std::uint64_t seed) {
  EnvConfig env_config = config.env;
  env_config.mismatch_enabled = false;
  ChainWorld env(env_config, config.task);
  Observation obs = env.reset(derive_seed(seed, "start"));
  Rng jitter(derive_seed(seed, "jitter"));

  Trajectory traj;
  GridPos pos = obs.agent_pos;
  for (const GridPos& target : config.task.stage_targets) {
    std::vector<int> actions;
    while (pos.x != target.x || pos.y != target.y) {
      const int dx = target.x - pos.x;
      const int dy = target.y - pos.y;
      bool move_x;
      if (dx != 0 && dy != 0)
        move_x = jitter.next_uniform() < 0.5;
      else
        move_x = dx != 0;
      if (move_x) {
        actions.push_back(dx > 0 ? kRight : kLeft);
        pos.x += dx > 0 ? 1 : -1;
      } else {
        actions.push_back(dy > 0 ? kUp : kDown);
        pos.y += dy > 0 ? 1 : -1;
      }
    }
    actions.push_back(kGrip);
    for (int a : actions) {
      ActionChunk chunk{{a}, 0.0};
      traj.steps.push_back({obs, chunk});
      obs = env.step(chunk.tokens).obs;
    }
  }
  traj.final_obs = obs;
  traj.terminated_by_progress = true;
  return traj;
}

// A prefix of a recorded trajectory is itself a valid trajectory; the next
// step's observation is the prefix's final frame.
Trajectory truncate_trajectory(const Trajectory& full, std::size_t num_steps) {
  Trajectory traj;
  traj.steps.assign(full.steps.begin(),
                    full.steps.begin() + static_cast<std::ptrdiff_t>(num_steps));
  traj.final_obs = num_steps < full.steps.size() ? full.steps[num_steps].obs : full.final_obs;
  return traj;
}

Trajectory random_walk(const RunConfig& config, std::uint64_t seed) {
  EnvConfig env_config = config.env;
  env_config.mismatch_enabled = false;
  ChainWorld env(env_config, config.task);
  Observation obs = env.reset(derive_seed(seed, "start"));
  Rng rng(derive_seed(seed, "walk"));
  const int horizon = config.full_horizon();
  const int length = horizon / 4 + rng.next_int(horizon - horizon / 4);

  Trajectory traj;
  for (int t = 0; t < length; ++t) {
    ActionChunk chunk{{rng.next_int(kNumActions)}, 0.0};
    traj.steps.push_back({obs, chunk});
    obs = env.step(chunk.tokens).obs;
  }
  traj.final_obs = obs;
  return traj;
}

}  // namespace

std::vector<LabeledTrajectory> build_validation_set(const RunConfig& config, int num_success,
                                                    int num_failure) {
  if (num_success < 1 || num_failure < 1)
    throw std::invalid_argument("validation set needs both success and failure cases");
  EnvConfig env_config = config.env;
  env_config.mismatch_enabled = false;
  const ChainWorld oracle(env_config, config.task);

  std::vector<LabeledTrajectory> set;
  set.reserve(static_cast<std::size_t>(num_success + num_failure));

  for (int i = 0; i < num_success; ++i) {
    Trajectory traj = jittered_expert(
        config, derive_seed(config.master_seed, "val-success", {static_cast<std::uint64_t>(i)}));
    const bool label = oracle.oracle_success(traj.final_obs);
    set.push_back({std::move(traj), label});
  }

  for (int i = 0; i < num_failure; ++i) {
    const std::uint64_t seed =
        derive_seed(config.master_seed, "val-failure", {static_cast<std::uint64_t>(i)});
    Trajectory traj;
    if (i % 2 == 0) {
      // Near miss: truncated demonstration, kept clear of the termination band.
      const Trajectory full = jittered_expert(config, seed);
      Rng rng(derive_seed(seed, "truncate"));
      std::size_t cut = 1 + static_cast<std::size_t>(
          rng.next_int(static_cast<int>(full.steps.size()) - 1));
      traj = truncate_trajectory(full, cut);
      while (oracle.oracle_progress(traj.final_obs) > 90.0 && cut > 1) {
        --cut;
        traj = truncate_trajectory(full, cut);
      }
    } else {
      traj = random_walk(config, seed);
      for (std::uint64_t salt = 1; oracle.oracle_success(traj.final_obs); ++salt)
        traj = random_walk(config, derive_seed(seed, "resample", {salt}));
    }
    const bool label = oracle.oracle_success(traj.final_obs);
    set.push_back({std::move(traj), label});
  }
  return set;
}

double estimator_reward(const RunConfig& config, RewardMode mode, const Trajectory& trajectory,
                        std::uint64_t stream_base) {
  const ChainWorld env(config.env, config.task);
  CriticStream stream(config.critic, env, stream_base);
  const std::vector<Observation> frames = trajectory.frames();

  switch (mode) {
    case RewardMode::kVanilla:
      return vanilla_reward(stream, frames.front(), frames.back());
    case RewardMode::kUniform: {
      const int n = std::min<int>(config.uniform_frames, static_cast<int>(frames.size()));
      if (static_cast<int>(frames.size()) < 2) return 0.0;
      std::vector<Observation> picks;
      const std::size_t last = frames.size() - 1;
      for (int j = 0; j < n; ++j)
        picks.push_back(frames[static_cast<std::size_t>(
            std::llround(static_cast<double>(j) * static_cast<double>(last) / (n - 1)))]);
      return uniform_multiframe_reward(stream, picks);
    }
    case RewardMode::kAccumulative: {
      MilestoneTracker tracker(config.progress, frames.front());
      for (std::size_t k = 1; k < frames.size(); ++k) {
        if (tracker.observe(stream, frames[k], frames[k].step_index))
          return tracker.final_reward();
      }
      // Fold the final frame so end-of-trajectory progress is represented.
      return tracker.provisional_estimate(stream, frames.back()) / 100.0;
    }
  }
  throw std::logic_error("unknown reward mode");
}

FScoreReport critic_fscore(const RunConfig& config, RewardMode mode,
                           std::span<const LabeledTrajectory> validation_set, double threshold) {
  int num_success = 0;
  int num_failure = 0;
  for (const LabeledTrajectory& lt : validation_set) (lt.success ? num_success : num_failure)++;
  if (num_success == 0 || num_failure == 0)
    throw std::invalid_argument("validation set must contain both labels");

  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < validation_set.size(); ++i) {
    const std::uint64_t base = derive_seed(config.critic.seed, "fscore-stream", {i});
    const double reward = estimator_reward(config, mode, validation_set[i].trajectory, base);
    const bool predicted = reward > threshold;
    if (predicted && validation_set[i].success) ++tp;
    if (predicted && !validation_set[i].success) ++fp;
    if (!predicted && validation_set[i].success) ++fn;
  }

  FScoreReport report;
  report.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  report.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  report.f1 = f1_score(report.precision, report.recall);
  report.threshold_used = threshold;
  report.num_success_cases = num_success;
  report.num_failure_cases = num_failure;
  return report;
}

std::uint64_t reward_calls_per_rollout(const RunConfig& config, RewardMode mode) {
  const std::uint64_t checks = static_cast<std::uint64_t>(config.full_horizon()) /
                               static_cast<std::uint64_t>(config.progress.delta_check);
  if (mode == RewardMode::kUniform)
    return static_cast<std::uint64_t>(config.uniform_frames - 1) * checks;
  return checks;
}

std::vector<AblationRow> run_ablation_table(std::span<const AblationVariant> variants,
                                            int num_seeds,
                                            std::vector<std::vector<IterationMetrics>>* logs) {
  std::vector<AblationRow> rows;
  for (const AblationVariant& variant : variants) {
    AblationRow row;
    row.name = variant.name;
    row.seeds = num_seeds;
    row.reward_calls = reward_calls_per_rollout(variant.config, variant.config.reward_mode);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      double sr_sum = 0.0;
      double f1_sum = 0.0;
      for (int s = 0; s < num_seeds; ++s) {
        RunConfig cfg = variant.config;
        cfg.master_seed = derive_seed(variant.config.master_seed, "ablation-seed",
                                      {static_cast<std::uint64_t>(s)});
        cfg.critic.seed = derive_seed(cfg.master_seed, "critic");
        cfg.env.seed = derive_seed(cfg.master_seed, "env");

        PolicyParams params = pretrain_bc(cfg);
        TttResult ttt = run_ttt(std::move(params), cfg);
        if (logs) logs->push_back(ttt.metrics);
        sr_sum += eval_success_rate(ttt.params, cfg, cfg.eval_episodes);

        const auto validation = build_validation_set(cfg, 100, 100);
        f1_sum += critic_fscore(cfg, cfg.reward_mode, validation,
                                cfg.progress.tau_threshold).f1;
      }
      row.sr = sr_sum / num_seeds;
      row.f1 = f1_sum / num_seeds;
    } catch (const std::exception&) {
      row.failed = true;
      row.sr = std::nan("");
      row.f1 = std::nan("");
      if (logs) logs->resize((rows.size() + 1) * static_cast<std::size_t>(num_seeds));
    }
    const auto t1 = std::chrono::steady_clock::now();
    row.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(std::span<const AblationRow> rows) {
  std::ostringstream out;
  out << "variant,sr,f1,reward_calls,seeds,wall_time_s\n";
  out.precision(6);
  for (const AblationRow& row : rows) {
    out << row.name << ',' << row.sr << ',' << row.f1 << ',' << row.reward_calls << ','
        << row.seeds << ',' << row.wall_time_s << '\n';
  }
  return out.str();
}

}  // namespace ttrl
