#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ttrl/critic.hpp"
#include "ttrl/curriculum.hpp"
#include "ttrl/env.hpp"
#include "ttrl/grpo.hpp"
#include "ttrl/policy.hpp"
#include "ttrl/progress.hpp"

namespace ttrl {

struct RunConfig {
  EnvConfig env;
  TaskSpec task;
  CriticConfig critic;
  ProgressConfig progress;
  GrpoConfig grpo;
  HorizonSchedule schedule;

  RewardMode reward_mode = RewardMode::kAccumulative;
  int uniform_frames = 4;
  int num_slots = 1;
  double temperature = 1.2;  // rollout sampling; evaluation decodes greedily
  double gamma = 1.0;        // housed by the MDP definition; trajectory-level rewards stay undiscounted
  int num_iterations = 100;
  int bc_demos = 0;
  int bc_epochs = 200;
  double bc_step_size = 0.05;
  int eval_interval = 5;
  int eval_episodes = 50;
  std::uint64_t master_seed = 0;

  bool operator==(const RunConfig&) const = default;
  void validate() const;  // throws ConfigError
  FeatureSpec feature_spec() const { return {env.grid_size, env.num_stages}; }
  int full_horizon() const { return schedule.stages.back().h_max; }
};

// Behavior cloning on scripted-expert demonstrations: full-batch ascent on
// the summed log-likelihood at temperature 1. Zero demos returns the
// zero-initialized (uniform) policy. loss_curve, when given, receives the
// log-likelihood before each epoch and once more after the last update.
PolicyParams pretrain_bc(const RunConfig& config, std::vector<double>* loss_curve = nullptr);

// G closed-loop rollouts from one params snapshot. A rollout stops when its
// progress estimator signals completion or step_index reaches h_max. All
// randomness derives from (master_seed, group_seed, trajectory index).
GroupBatch rollout_group(const PolicyParams& params, const RunConfig& config, int h_max,
                         std::uint64_t group_seed);

// Greedy-decoded success rate over fresh episodes, mismatch disabled.
double greedy_success_rate(const PolicyParams& params, const RunConfig& config, int episodes);

struct IterationMetrics {
  int iteration = 0;
  int h_max = 0;
  double mean_reward = 0.0;
  double reward_std = 0.0;
  std::uint64_t critic_calls = 0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  std::optional<double> eval_sr;
};

class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void on_iteration(const IterationMetrics& metrics) = 0;
};

struct TttResult {
  PolicyParams params;
  std::vector<IterationMetrics> metrics;
};

// The test-time training loop: grouped rollouts -> group-normalized
// advantages -> clipped-surrogate updates, under the horizon schedule.
TttResult run_ttt(PolicyParams params, const RunConfig& config, MetricsSink* sink = nullptr);

}  // namespace ttrl
