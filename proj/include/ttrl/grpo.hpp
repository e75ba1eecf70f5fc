#pragma once

#include <span>
#include <vector>

#include "ttrl/policy.hpp"
#include "ttrl/trajectory.hpp"

namespace ttrl {

struct GrpoConfig {
  int group_size = 8;
  double clip_epsilon = 0.2;
  double step_size = 0.05;
  int epochs_per_batch = 2;
  double std_floor = 1e-6;

  bool operator==(const GrpoConfig&) const = default;
  void validate() const;  // throws ConfigError
};

// G trajectories sampled from one behavior-policy snapshot on one task.
struct GroupBatch {
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::uint64_t critic_calls = 0;  // reward-call accounting across the group
};

// Group-normalized advantages: (R - mean)/max(std, std_floor) with population
// std. An all-equal group yields exact zeros.
std::vector<double> compute_advantages(std::span<const double> rewards, double std_floor);

struct SurrogateStats {
  std::uint64_t clipped_steps = 0;
  std::uint64_t total_steps = 0;
};

// Ascent gradient of the clipped importance-ratio surrogate
//   L = (1/G) sum_i (1/|tau_i|) sum_t min(r_t A_i, clip(r_t, 1-eps, 1+eps) A_i)
// with r_t against the recorded behavior log-probs. Steps resolved to the
// clipped constant branch contribute nothing.
PolicyParams surrogate_gradient(const GroupBatch& batch, const PolicyParams& params,
                                const GrpoConfig& config, const FeatureSpec& features,
                                double temperature, SurrogateStats* stats = nullptr);

struct UpdateDiagnostics {
  double clip_fraction = 0.0;  // over all epochs
  double grad_norm = 0.0;      // L2 of the last epoch's gradient
};

// epochs_per_batch rounds of surrogate gradient ascent from the batch.
PolicyParams grpo_update(const GroupBatch& batch, PolicyParams params, const GrpoConfig& config,
                         const FeatureSpec& features, double temperature,
                         UpdateDiagnostics* diag = nullptr);

}  // namespace ttrl
