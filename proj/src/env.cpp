#include "ttrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ttrl/errors.hpp"
#include "ttrl/rng.hpp"
#include "ttrl/trajectory.hpp"

namespace ttrl {

void EnvConfig::validate() const {
  if (grid_size < 4)
    throw ConfigError("env.grid_size must be >= 4, got " + std::to_string(grid_size));
  if (num_stages < 1)
    throw ConfigError("env.num_stages must be >= 1, got " + std::to_string(num_stages));
  if (max_horizon_cap < 16 * num_stages)
    throw ConfigError("env.max_horizon_cap (" + std::to_string(max_horizon_cap) +
                      ") must be >= 16*num_stages (" + std::to_string(16 * num_stages) + ")");
}

ChainWorld::ChainWorld(EnvConfig config, TaskSpec task)
    : config_(config), task_(std::move(task)) {
  config_.validate();
  if (static_cast<int>(task_.stage_targets.size()) != config_.num_stages)
    throw ConfigError("task '" + task_.task_id + "' has " +
                      std::to_string(task_.stage_targets.size()) + " stage_targets, env expects " +
                      std::to_string(config_.num_stages));
  for (const GridPos& t : task_.stage_targets) {
    if (t.x < 0 || t.x >= config_.grid_size || t.y < 0 || t.y >= config_.grid_size)
      throw ConfigError("task '" + task_.task_id + "' stage target (" + std::to_string(t.x) +
                        "," + std::to_string(t.y) + ") outside grid of size " +
                        std::to_string(config_.grid_size));
  }
}

Observation ChainWorld::reset(std::uint64_t episode_seed) {
  Rng rng(derive_seed(config_.seed, "chainworld-reset", {episode_seed}));
  state_ = Observation{};
  state_.agent_pos = {rng.next_int(config_.grid_size), rng.next_int(config_.grid_size)};
  state_.item_flags.assign(static_cast<std::size_t>(config_.num_stages), 0);
  live_ = true;
  return state_;
}

StepResult ChainWorld::step(std::span<const int> action_chunk) {
  if (!live_) throw std::logic_error("step() before reset()");
  if (state_.step_index >= config_.max_horizon_cap)
    throw std::logic_error("step() past max_horizon_cap");

  const int n = config_.grid_size;
  for (int token : action_chunk) {
    if (state_.step_index >= config_.max_horizon_cap) break;
    switch (token) {
      case kLeft:  state_.agent_pos.x = std::max(0, state_.agent_pos.x - 1); break;
      case kRight: state_.agent_pos.x = std::min(n - 1, state_.agent_pos.x + 1); break;
      case kDown:  state_.agent_pos.y = std::max(0, state_.agent_pos.y - 1); break;
      case kUp:    state_.agent_pos.y = std::min(n - 1, state_.agent_pos.y + 1); break;
      case kGrip:
        state_.gripper = !state_.gripper;
        if (state_.stage_index < config_.num_stages &&
            state_.agent_pos == task_.stage_targets[static_cast<std::size_t>(state_.stage_index)]) {
          state_.item_flags[static_cast<std::size_t>(state_.stage_index)] = 1;
          ++state_.stage_index;
        }
        break;
      case kNoOp: break;
      default:
        throw std::invalid_argument("action token out of range: " + std::to_string(token));
    }
    ++state_.step_index;
  }
  return {state_, state_.step_index >= config_.max_horizon_cap};
}

double ChainWorld::oracle_progress(const Observation& obs) const {
  const int k = config_.num_stages;
  if (obs.stage_index >= k) return 100.0;
  // No shaping before the first stage completes: every reset state scores
  // exactly zero, which anchors the accumulation recursion.
  if (obs.stage_index == 0) return 0.0;
  const double base = 100.0 * obs.stage_index / k;
  const GridPos target = task_.stage_targets[static_cast<std::size_t>(obs.stage_index)];
  const double d_max = 2.0 * (config_.grid_size - 1);
  const double frac = (d_max - manhattan(obs.agent_pos, target)) / d_max;
  return base + (100.0 / k) * 0.95 * frac;
}

bool ChainWorld::oracle_success(const Observation& obs) const {
  for (std::uint8_t f : obs.item_flags)
    if (!f) return false;
  if (config_.mismatch_enabled && !(obs.agent_pos == terminal_cell())) return false;
  return true;
}

GridPos ChainWorld::terminal_cell() const {
  const GridPos origin{0, 0};
  if (task_.stage_targets.back() == origin) {
    const int m = config_.grid_size - 1;
    return {m, m};
  }
  return origin;
}

const Observation& ChainWorld::state() const {
  if (!live_) throw std::logic_error("state() before reset()");
  return state_;
}

Trajectory scripted_expert(const EnvConfig& config, const TaskSpec& task,
                           std::uint64_t episode_seed, int num_slots) {
  EnvConfig demo_config = config;
  demo_config.mismatch_enabled = false;
  ChainWorld env(demo_config, task);
  Observation obs = env.reset(episode_seed);

  std::vector<int> actions;
  GridPos pos = obs.agent_pos;
  for (const GridPos& target : task.stage_targets) {
    while (pos.x != target.x) {
      actions.push_back(pos.x < target.x ? kRight : kLeft);
      pos.x += pos.x < target.x ? 1 : -1;
    }
    while (pos.y != target.y) {
      actions.push_back(pos.y < target.y ? kUp : kDown);
      pos.y += pos.y < target.y ? 1 : -1;
    }
    actions.push_back(kGrip);
  }
  if (static_cast<int>(actions.size()) > demo_config.max_horizon_cap)
    throw std::runtime_error("expert trajectory for task '" + task.task_id +
                             "' exceeds max_horizon_cap");

  Trajectory traj;
  for (std::size_t i = 0; i < actions.size(); i += static_cast<std::size_t>(num_slots)) {
    ActionChunk chunk;
    chunk.log_prob = 0.0;  // deterministic demonstration
    for (int j = 0; j < num_slots; ++j) {
      const std::size_t k = i + static_cast<std::size_t>(j);
      chunk.tokens.push_back(k < actions.size() ? actions[k] : kNoOp);
    }
    traj.steps.push_back({obs, chunk});
    obs = env.step(chunk.tokens).obs;
  }
  traj.final_obs = obs;
  traj.reward = 1.0;
  traj.terminated_by_progress = true;
  return traj;
}

}  // namespace ttrl
