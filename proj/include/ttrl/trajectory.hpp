#pragma once

#include <cstdint>
#include <vector>

#include "ttrl/env.hpp"
#include "ttrl/policy.hpp"

namespace ttrl {

struct Step {
  Observation obs;  // state the chunk was sampled in
  ActionChunk chunk;
};

struct Trajectory {
  std::vector<Step> steps;
  Observation final_obs;
  double reward = 0.0;  // in [0, 1], assigned once after the rollout
  bool terminated_by_progress = false;

  int final_step_index() const { return final_obs.step_index; }

  // o_0, then the observation after every chunk; temporal order.
  std::vector<Observation> frames() const {
    std::vector<Observation> out;
    out.reserve(steps.size() + 1);
    for (const Step& s : steps) out.push_back(s.obs);
    out.push_back(final_obs);
    return out;
  }
};

// Greedy shortest-path demonstration: walk x then y to each stage target and
// toggle the gripper there. Succeeds with mismatch disabled; deterministic
// per episode_seed. Chunks shorter than num_slots are padded with no-ops.
Trajectory scripted_expert(const EnvConfig& config, const TaskSpec& task,
                           std::uint64_t episode_seed, int num_slots = 1);

}  // namespace ttrl
