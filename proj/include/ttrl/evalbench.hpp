#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ttrl/trainer.hpp"
#include "ttrl/trajectory.hpp"

namespace ttrl {

struct FScoreReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double threshold_used = 0.0;
  int num_success_cases = 0;
  int num_failure_cases = 0;
};

double f1_score(double precision, double recall);

struct LabeledTrajectory {
  Trajectory trajectory;
  bool success = false;  // oracle_success at the final frame, mismatch disabled
};

// Greedy-decoded success rate; thin wrapper kept next to the other
// benchmark entry points.
double eval_success_rate(const PolicyParams& params, const RunConfig& config, int episodes);

// Balanced labeled set: successes are jittered shortest-path demonstrations,
// failures split between truncated demonstrations (near misses, capped below
// the termination band) and random-walk episodes. Deterministic per seed.
std::vector<LabeledTrajectory> build_validation_set(const RunConfig& config, int num_success,
                                                    int num_failure);

// Offline reward of one finished trajectory under the given estimator,
// replaying the rollout-time schedule; the accumulative estimator folds the
// final frame so end-of-trajectory progress is represented.
double estimator_reward(const RunConfig& config, RewardMode mode,
                        const Trajectory& trajectory, std::uint64_t stream_base);

// Precision/recall/F1 for the success class of "estimator reward > threshold".
FScoreReport critic_fscore(const RunConfig& config, RewardMode mode,
                           std::span<const LabeledTrajectory> validation_set, double threshold);

// Per-rollout critic calls implied by the estimator at full horizon.
std::uint64_t reward_calls_per_rollout(const RunConfig& config, RewardMode mode);

struct AblationVariant {
  std::string name;
  RunConfig config;
};

struct AblationRow {
  std::string name;
  double sr = 0.0;
  double f1 = 0.0;
  std::uint64_t reward_calls = 0;
  int seeds = 0;
  double wall_time_s = 0.0;
  bool failed = false;
};

// Runs each variant end to end (BC pretrain, TTT, greedy eval, F-score on a
// fresh validation set) over num_seeds shared seeds and reports means. A
// variant that throws is marked failed; the others still complete.
std::vector<AblationRow> run_ablation_table(std::span<const AblationVariant> variants,
                                            int num_seeds,
                                            std::vector<std::vector<IterationMetrics>>* logs = nullptr);

std::string ablation_csv(std::span<const AblationRow> rows);

}  // namespace ttrl
