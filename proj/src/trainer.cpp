#include "ttrl/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ttrl/errors.hpp"
#include "ttrl/rng.hpp"
#include "ttrl/trajectory.hpp"

namespace ttrl {

void RunConfig::validate() const {
  env.validate();
  critic.validate();
  progress.validate();
  grpo.validate();
  schedule.validate();
  if (static_cast<int>(task.stage_targets.size()) != env.num_stages)
    throw ConfigError("task.stage_targets has " + std::to_string(task.stage_targets.size()) +
                      " entries but env.num_stages is " + std::to_string(env.num_stages));
  if (schedule.stages.back().h_max != env.max_horizon_cap)
    throw ConfigError("schedule final h_max (" + std::to_string(schedule.stages.back().h_max) +
                      ") must equal env.max_horizon_cap (" + std::to_string(env.max_horizon_cap) +
                      ")");
  if (!(temperature > 0.0)) throw ConfigError("run.temperature must be > 0");
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("run.gamma must be in [0, 1]");
  if (num_slots < 1) throw ConfigError("run.num_slots must be >= 1");
  if (num_iterations < 0) throw ConfigError("run.num_iterations must be >= 0");
  if (bc_demos < 0) throw ConfigError("run.bc_demos must be >= 0");
  if (bc_epochs < 0) throw ConfigError("run.bc_epochs must be >= 0");
  if (!(bc_step_size > 0.0)) throw ConfigError("run.bc_step_size must be > 0");
  if (eval_interval < 1) throw ConfigError("run.eval_interval must be >= 1");
  if (eval_episodes < 1) throw ConfigError("run.eval_episodes must be >= 1");
  if (uniform_frames < 2) throw ConfigError("run.uniform_frames must be >= 2");
}

PolicyParams pretrain_bc(const RunConfig& config, std::vector<double>* loss_curve) {
  config.validate();
  const FeatureSpec fs = config.feature_spec();
  PolicyParams params = PolicyParams::zeros(config.num_slots, kNumActions, fs.dim());
  if (config.bc_demos == 0) return params;

  std::vector<std::vector<double>> features;
  std::vector<std::vector<int>> tokens;
  for (int d = 0; d < config.bc_demos; ++d) {
    const Trajectory demo = scripted_expert(config.env, config.task,
                                            derive_seed(config.master_seed, "bc-demo",
                                                        {static_cast<std::uint64_t>(d)}),
                                            config.num_slots);
    for (const Step& step : demo.steps) {
      features.push_back(fs.encode(step.obs));
      tokens.push_back(step.chunk.tokens);
    }
  }

  const auto log_likelihood = [&]() {
    double ll = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i)
      ll += chunk_log_prob(params, features[i], tokens[i], 1.0);
    return ll;
  };

  for (int epoch = 0; epoch < config.bc_epochs; ++epoch) {
    if (loss_curve) loss_curve->push_back(log_likelihood());
    PolicyParams grad = PolicyParams::zeros(params.num_slots, params.vocab_size, params.feature_dim);
    for (std::size_t i = 0; i < features.size(); ++i) {
      const PolicyParams g = grad_log_prob(params, features[i], tokens[i], 1.0);
      for (std::size_t w = 0; w < grad.weights.size(); ++w) grad.weights[w] += g.weights[w];
    }
    params = apply_update(params, grad, config.bc_step_size);
  }
  if (loss_curve) loss_curve->push_back(log_likelihood());
  return params;
}

GroupBatch rollout_group(const PolicyParams& params, const RunConfig& config, int h_max,
                         std::uint64_t group_seed) {
  if (h_max < 1 || h_max > config.env.max_horizon_cap)
    throw std::invalid_argument("rollout h_max outside (0, max_horizon_cap]");
  const FeatureSpec fs = config.feature_spec();

  GroupBatch batch;
  for (int i = 0; i < config.grpo.group_size; ++i) {
    const std::uint64_t traj_index = static_cast<std::uint64_t>(i);
    ChainWorld env(config.env, config.task);
    Observation obs = env.reset(derive_seed(config.master_seed, "episode", {group_seed, traj_index}));

    const std::uint64_t stream_base =
        derive_seed(config.critic.seed, "critic-stream", {group_seed, traj_index});
    auto estimator = make_rollout_estimator(config.reward_mode, config.uniform_frames,
                                            config.progress,
                                            CriticStream(config.critic, env, stream_base), obs);

    Trajectory traj;
    bool terminated = false;
    while (obs.step_index < h_max) {
      const std::vector<double> phi = fs.encode(obs);
      const ActionChunk chunk =
          sample_chunk(params, phi, config.temperature,
                       derive_seed(config.master_seed, "action",
                                   {group_seed, traj_index,
                                    static_cast<std::uint64_t>(obs.step_index)}));
      traj.steps.push_back({obs, chunk});
      obs = env.step(chunk.tokens).obs;
      if (estimator->observe(obs, obs.step_index)) {
        terminated = true;
        break;
      }
    }
    traj.final_obs = obs;
    traj.terminated_by_progress = terminated;
    traj.reward = estimator->finalize(obs);
    batch.critic_calls += estimator->calls();
    batch.rewards.push_back(traj.reward);
    batch.trajectories.push_back(std::move(traj));
  }
  return batch;
}

double greedy_success_rate(const PolicyParams& params, const RunConfig& config, int episodes) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  EnvConfig eval_env_config = config.env;
  eval_env_config.mismatch_enabled = false;
  const FeatureSpec fs = config.feature_spec();
  const int horizon = config.full_horizon();

  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    ChainWorld env(eval_env_config, config.task);
    Observation obs = env.reset(derive_seed(config.master_seed, "eval-episode",
                                            {static_cast<std::uint64_t>(e)}));
    while (obs.step_index < horizon) {
      obs = env.step(greedy_chunk(params, fs.encode(obs))).obs;
      if (env.oracle_success(obs)) {
        ++successes;
        break;
      }
    }
  }
  return static_cast<double>(successes) / episodes;
}

TttResult run_ttt(PolicyParams params, const RunConfig& config, MetricsSink* sink) {
  config.validate();
  const FeatureSpec fs = config.feature_spec();
  TttResult result;

  for (int i = 0; i < config.num_iterations; ++i) {
    const int h = horizon_at(config.schedule, static_cast<std::uint64_t>(i));
    GroupBatch batch = rollout_group(params, config, h, static_cast<std::uint64_t>(i));
    batch.advantages = compute_advantages(batch.rewards, config.grpo.std_floor);

    UpdateDiagnostics diag;
    params = grpo_update(batch, std::move(params), config.grpo, fs, config.temperature, &diag);

    IterationMetrics m;
    m.iteration = i;
    m.h_max = h;
    double mean = 0.0;
    for (double r : batch.rewards) mean += r;
    mean /= static_cast<double>(batch.rewards.size());
    double var = 0.0;
    for (double r : batch.rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(batch.rewards.size());
    m.mean_reward = mean;
    m.reward_std = std::sqrt(var);
    m.critic_calls = batch.critic_calls;
    m.clip_fraction = diag.clip_fraction;
    m.grad_norm = diag.grad_norm;
    if ((i + 1) % config.eval_interval == 0 || i + 1 == config.num_iterations)
      m.eval_sr = greedy_success_rate(params, config, config.eval_episodes);

    result.metrics.push_back(m);
    if (sink) sink->on_iteration(m);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace ttrl
