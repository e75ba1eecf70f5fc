#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ttrl/critic.hpp"
#include "ttrl/env.hpp"

namespace ttrl {

struct ProgressConfig {
  int delta_milestone = 64;   // timesteps between stored milestone frames
  int delta_check = 16;       // timesteps between critic queries
  double tau_threshold = 0.95;  // terminate when estimated progress/100 exceeds this

  bool operator==(const ProgressConfig&) const = default;
  void validate() const;  // throws ConfigError
};

// One diminishing-returns accumulation step: v + (100 - v)*c/100, kept in [0, 100].
double accumulate_progress(double v, double c);

// Per-rollout milestone state: frames stored every delta_milestone steps, the
// critic queried against the most recent milestone every delta_check steps,
// and queries at milestone ticks folded into the running value. Intermediate
// queries fold a provisional value used only for termination; when it crosses
// tau the provisional value is committed as the final estimate.
class MilestoneTracker {
 public:
  MilestoneTracker(ProgressConfig config, Observation initial_frame);

  // Call with the observation after each environment step; t must equal
  // obs.step_index and increase strictly. Returns true when the rollout
  // should stop because the task is deemed complete.
  bool observe(ProgressCritic& critic, const Observation& obs, int t);

  // Fold one extra comparison against the last milestone without mutating
  // the tracker; used for end-of-trajectory estimates.
  double provisional_estimate(ProgressCritic& critic, const Observation& obs) const;

  double final_reward() const { return v_current_ / 100.0; }
  double v_current() const { return v_current_; }
  bool terminated() const { return terminated_; }
  std::uint64_t calls_made() const { return calls_made_; }

  const std::vector<Observation>& milestones() const { return milestones_; }
  const std::vector<double>& critic_history() const { return critic_history_; }
  const std::vector<double>& values() const { return values_; }

 private:
  ProgressConfig config_;
  std::vector<Observation> milestones_;
  std::vector<double> critic_history_;
  std::vector<double> values_;
  double v_current_ = 0.0;
  std::uint64_t calls_made_ = 0;
  int last_t_ = 0;
  bool terminated_ = false;
};

// Initial-vs-final critic value mapped to [0, 1] via (c + 100)/200.
double vanilla_reward(ProgressCritic& critic, const Observation& o_first,
                      const Observation& o_last);

// Accumulation over consecutive pairs of caller-supplied frames (N-1 calls).
double uniform_multiframe_reward(ProgressCritic& critic, std::span<const Observation> frames);

// Progress estimation strategies available to rollouts and the ablations.
enum class RewardMode { kAccumulative, kVanilla, kUniform };

// Rollout-side estimator: consumes every post-chunk observation, decides
// termination at check ticks, and produces the trajectory reward.
class RolloutEstimator {
 public:
  virtual ~RolloutEstimator() = default;
  virtual bool observe(const Observation& obs, int t) = 0;
  virtual double finalize(const Observation& final_obs) = 0;
  virtual std::uint64_t calls() const = 0;
};

std::unique_ptr<RolloutEstimator> make_rollout_estimator(RewardMode mode, int uniform_frames,
                                                         const ProgressConfig& config,
                                                         CriticStream critic,
                                                         const Observation& initial_frame);

}  // namespace ttrl
