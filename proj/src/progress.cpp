#include "ttrl/progress.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ttrl/errors.hpp"

namespace ttrl {

void ProgressConfig::validate() const {
  if (delta_milestone < 1)
    throw ConfigError("progress.delta_milestone must be >= 1");
  if (delta_check < 1)
    throw ConfigError("progress.delta_check must be >= 1");
  if (delta_check > delta_milestone)
    throw ConfigError("progress.delta_check (" + std::to_string(delta_check) +
                      ") must not exceed progress.delta_milestone (" +
                      std::to_string(delta_milestone) + ")");
  if (delta_milestone % delta_check != 0)
    throw ConfigError("progress.delta_check (" + std::to_string(delta_check) +
                      ") must divide progress.delta_milestone (" +
                      std::to_string(delta_milestone) + ")");
  if (!(tau_threshold > 0.0) || tau_threshold > 1.0)
    throw ConfigError("progress.tau_threshold must be in (0, 1]");
}

double accumulate_progress(double v, double c) {
  return std::clamp(v + (100.0 - v) * c / 100.0, 0.0, 100.0);
}

MilestoneTracker::MilestoneTracker(ProgressConfig config, Observation initial_frame)
    : config_(config) {
  config_.validate();
  last_t_ = initial_frame.step_index;
  milestones_.push_back(std::move(initial_frame));
  values_.push_back(0.0);
}

bool MilestoneTracker::observe(ProgressCritic& critic, const Observation& obs, int t) {
  if (obs.step_index != t)
    throw std::logic_error("observe(): obs.step_index does not match t");
  if (t <= last_t_)
    throw std::logic_error("observe(): timestep did not advance");
  last_t_ = t;

  if (t % config_.delta_check != 0) return false;

  const double c = critic.incremental_progress(milestones_.back(), obs);
  ++calls_made_;

  double provisional;
  if (t % config_.delta_milestone == 0) {
    milestones_.push_back(obs);
    critic_history_.push_back(c);
    v_current_ = accumulate_progress(v_current_, c);
    values_.push_back(v_current_);
    provisional = v_current_;
  } else {
    provisional = accumulate_progress(v_current_, c);
  }

  if (provisional / 100.0 > config_.tau_threshold) {
    v_current_ = provisional;
    terminated_ = true;
    return true;
  }
  return false;
}

double MilestoneTracker::provisional_estimate(ProgressCritic& critic,
                                              const Observation& obs) const {
  if (obs == milestones_.back()) return v_current_;
  const double c = critic.incremental_progress(milestones_.back(), obs);
  return accumulate_progress(v_current_, c);
}

double vanilla_reward(ProgressCritic& critic, const Observation& o_first,
                      const Observation& o_last) {
  return (critic.incremental_progress(o_first, o_last) + 100.0) / 200.0;
}

double uniform_multiframe_reward(ProgressCritic& critic, std::span<const Observation> frames) {
  if (frames.size() < 2)
    throw std::invalid_argument("uniform_multiframe_reward needs at least 2 frames");
  double v = 0.0;
  for (std::size_t i = 1; i < frames.size(); ++i)
    v = accumulate_progress(v, critic.incremental_progress(frames[i - 1], frames[i]));
  return v / 100.0;
}

namespace {

class AccumulativeEstimator final : public RolloutEstimator {
 public:
  AccumulativeEstimator(const ProgressConfig& config, CriticStream critic,
                        const Observation& initial_frame)
      : critic_(std::move(critic)), tracker_(config, initial_frame) {}

  bool observe(const Observation& obs, int t) override { return tracker_.observe(critic_, obs, t); }
  double finalize(const Observation&) override { return tracker_.final_reward(); }
  std::uint64_t calls() const override { return tracker_.calls_made(); }

 private:
  CriticStream critic_;
  MilestoneTracker tracker_;
};

class VanillaEstimator final : public RolloutEstimator {
 public:
  VanillaEstimator(const ProgressConfig& config, CriticStream critic, Observation initial_frame)
      : config_(config), critic_(std::move(critic)), o_first_(std::move(initial_frame)) {}

  bool observe(const Observation& obs, int t) override {
    if (t % config_.delta_check != 0) return false;
    last_c_ = critic_.incremental_progress(o_first_, obs);
    last_c_t_ = t;
    return last_c_ / 100.0 > config_.tau_threshold;
  }

  double finalize(const Observation& final_obs) override {
    if (last_c_t_ != final_obs.step_index)
      last_c_ = critic_.incremental_progress(o_first_, final_obs);
    return (last_c_ + 100.0) / 200.0;
  }

  std::uint64_t calls() const override { return critic_.calls(); }

 private:
  ProgressConfig config_;
  CriticStream critic_;
  Observation o_first_;
  double last_c_ = -100.0;
  int last_c_t_ = -1;
};

class UniformEstimator final : public RolloutEstimator {
 public:
  UniformEstimator(int num_frames, const ProgressConfig& config, CriticStream critic,
                   Observation initial_frame)
      : num_frames_(num_frames), config_(config), critic_(std::move(critic)) {
    if (num_frames_ < 2)
      throw std::invalid_argument("uniform estimator needs at least 2 frames");
    frames_.push_back(std::move(initial_frame));
  }

  bool observe(const Observation& obs, int t) override {
    frames_.push_back(obs);
    if (t % config_.delta_check != 0) return false;
    last_v_ = evaluate();
    last_v_t_ = t;
    return last_v_ / 100.0 > config_.tau_threshold;
  }

  double finalize(const Observation& final_obs) override {
    if (last_v_t_ != final_obs.step_index) last_v_ = evaluate();
    return last_v_ / 100.0;
  }

  std::uint64_t calls() const override { return critic_.calls(); }

 private:
  // Re-estimate over num_frames_ frames sampled uniformly from the prefix.
  double evaluate() {
    const std::size_t last = frames_.size() - 1;
    double v = 0.0;
    std::size_t prev = 0;
    for (int j = 1; j < num_frames_; ++j) {
      const std::size_t idx = static_cast<std::size_t>(
          std::llround(static_cast<double>(j) * static_cast<double>(last) / (num_frames_ - 1)));
      v = accumulate_progress(v, critic_.incremental_progress(frames_[prev], frames_[idx]));
      prev = idx;
    }
    return v;
  }

  int num_frames_;
  ProgressConfig config_;
  CriticStream critic_;
  std::vector<Observation> frames_;
  double last_v_ = 0.0;
  int last_v_t_ = -1;
};

}  // namespace

std::unique_ptr<RolloutEstimator> make_rollout_estimator(RewardMode mode, int uniform_frames,
                                                         const ProgressConfig& config,
                                                         CriticStream critic,
                                                         const Observation& initial_frame) {
  switch (mode) {
    case RewardMode::kAccumulative:
      return std::make_unique<AccumulativeEstimator>(config, std::move(critic), initial_frame);
    case RewardMode::kVanilla:
      return std::make_unique<VanillaEstimator>(config, std::move(critic), initial_frame);
    case RewardMode::kUniform:
      return std::make_unique<UniformEstimator>(uniform_frames, config, std::move(critic),
                                                initial_frame);
  }
  throw std::logic_error("unknown reward mode");
}

}  // namespace ttrl
