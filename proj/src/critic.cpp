#include "ttrl/critic.hpp"

#include <algorithm>
#include <cmath>

#include "ttrl/errors.hpp"
#include "ttrl/rng.hpp"

namespace ttrl {

void CriticConfig::validate() const {
  if (sigma < 0.0) throw ConfigError("critic.sigma must be >= 0");
  if (drift_per_step < 0.0) throw ConfigError("critic.drift_per_step must be >= 0");
  if (flip_prob < 0.0 || flip_prob >= 1.0)
    throw ConfigError("critic.flip_prob must be in [0, 1)");
}

double true_increment(const ChainWorld& env, const Observation& frame_a,
                      const Observation& frame_b) {
  const double p_a = env.oracle_progress(frame_a);
  if (p_a >= 100.0) return 0.0;
  const double p_b = env.oracle_progress(frame_b);
  const double raw = 100.0 * (p_b - p_a) / (100.0 - p_a);
  return std::clamp(raw, -100.0, 100.0);
}

CriticValue critic_estimate(const CriticConfig& config, const ChainWorld& env,
                            const Observation& frame_a, const Observation& frame_b,
                            const TaskSpec& task, std::uint64_t call_index) {
  (void)task;  // single-task oracle
  const double base = true_increment(env, frame_a, frame_b);
  const double gap = std::abs(static_cast<double>(frame_b.step_index) -
                              static_cast<double>(frame_a.step_index));
  const double std_dev = std::sqrt(config.sigma * config.sigma +
                                   config.drift_per_step * gap * config.drift_per_step * gap);

  Rng rng(derive_seed(config.seed, "critic-noise", {call_index}));
  const bool flip = rng.next_uniform() < config.flip_prob;
  const double eps = std_dev > 0.0 ? std_dev * rng.next_gaussian() : 0.0;
  const double signed_value = (flip ? -1.0 : 1.0) * (base + config.bias + eps);
  return {std::clamp(signed_value, -100.0, 100.0)};
}

}  // namespace ttrl
