#pragma once

#include <cstdint>

#include "ttrl/env.hpp"

namespace ttrl {

// Noise model wrapped around the oracle: i.i.d. Gaussian noise, a systematic
// bias, a drift component whose std grows with the temporal gap between the
// two frames, and a sign-flip gross-error mode.
struct CriticConfig {
  double sigma = 0.0;
  double bias = 0.0;
  double drift_per_step = 0.0;
  double flip_prob = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const CriticConfig&) const = default;
  void validate() const;  // throws ConfigError
};

struct CriticValue {
  double value = 0.0;  // clamped to [-100, 100]
};

// Fraction of the remaining task completed between the two frames, x100:
// 100*(p_b - p_a)/(100 - p_a), 0 once p_a = 100, clamped to [-100, 100].
// Negative when the second frame regressed.
double true_increment(const ChainWorld& env, const Observation& frame_a,
                      const Observation& frame_b);

// clamp(s * (true_increment + bias + eps), -100, 100) with
// eps ~ N(0, sigma^2 + (drift_per_step*gap)^2) and s = -1 w.p. flip_prob.
// The noise draw is a pure function of (config.seed, call_index), so replays
// are bit-exact regardless of scheduling. The task argument mirrors the
// two-frames-plus-instruction calling convention; the oracle ignores it.
CriticValue critic_estimate(const CriticConfig& config, const ChainWorld& env,
                            const Observation& frame_a, const Observation& frame_b,
                            const TaskSpec& task, std::uint64_t call_index);

// What the progress tracker queries. Tests inject scripted values here.
class ProgressCritic {
 public:
  virtual ~ProgressCritic() = default;
  virtual double incremental_progress(const Observation& reference,
                                      const Observation& current) = 0;
};

// Noisy critic bound to one rollout: consecutive calls use call indices
// base_index, base_index+1, ... so parallel rollouts draw independent noise.
class CriticStream : public ProgressCritic {
 public:
  CriticStream(const CriticConfig& config, const ChainWorld& env, std::uint64_t base_index)
      : config_(&config), env_(&env), base_(base_index) {}

  double incremental_progress(const Observation& reference, const Observation& current) override {
    return critic_estimate(*config_, *env_, reference, current, env_->task(), base_ + count_++).value;
  }

  std::uint64_t calls() const { return count_; }

 private:
  const CriticConfig* config_;
  const ChainWorld* env_;
  std::uint64_t base_ = 0;
  std::uint64_t count_ = 0;
};

}  // namespace ttrl
