#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ttrl {

struct GridPos {
  int x = 0;
  int y = 0;
  bool operator==(const GridPos&) const = default;
};

inline int manhattan(GridPos a, GridPos b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

struct EnvConfig {
  int grid_size = 8;
  int num_stages = 1;
  int max_horizon_cap = 512;
  bool mismatch_enabled = false;
  std::uint64_t seed = 0;

  bool operator==(const EnvConfig&) const = default;
  void validate() const;  // throws ConfigError
};

struct TaskSpec {
  std::string task_id;
  std::string instruction;
  std::vector<GridPos> stage_targets;

  bool operator==(const TaskSpec&) const = default;
};

struct Observation {
  GridPos agent_pos;
  int stage_index = 0;
  std::vector<std::uint8_t> item_flags;  // length num_stages, stage_index leading trues
  bool gripper = false;
  int step_index = 0;

  bool operator==(const Observation&) const = default;
};

// Action token alphabet.
enum Action : int {
  kLeft = 0,   // -x
  kRight = 1,  // +x
  kDown = 2,   // -y
  kUp = 3,     // +y
  kGrip = 4,
  kNoOp = 5,
  kNumActions = 6,
};

struct StepResult {
  Observation obs;
  bool done_by_cap = false;
};

// ChainWorld: a K-stage gridworld. Each stage has a target cell; toggling the
// gripper on the current stage's target completes it. Stages complete
// strictly in order. Moves clamp at the grid border.
class ChainWorld {
 public:
  ChainWorld(EnvConfig config, TaskSpec task);  // throws ConfigError on inconsistent inputs

  Observation reset(std::uint64_t episode_seed);
  StepResult step(std::span<const int> action_chunk);

  // Semantic completion in [0, 100]: 100*stage/K plus, once the first stage
  // is complete, an intra-stage shaping term from normalized inverse
  // Manhattan distance to the next target, capped at 95% of the stage
  // interval so only a completed stage crosses a stage boundary. Exactly 0
  // at every reset state and exactly 100 iff every stage is complete.
  double oracle_progress(const Observation& obs) const;

  // Rule-based success: all stages complete, and with mismatch enabled the
  // agent must additionally sit on the designated terminal cell.
  bool oracle_success(const Observation& obs) const;

  GridPos terminal_cell() const;

  const EnvConfig& config() const { return config_; }
  const TaskSpec& task() const { return task_; }
  const Observation& state() const;

 private:
  EnvConfig config_;
  TaskSpec task_;
  Observation state_;
  bool live_ = false;
};

}  // namespace ttrl
