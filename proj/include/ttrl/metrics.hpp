#pragma once

#include <ostream>

#include <json.hpp>

#include "ttrl/trainer.hpp"

namespace ttrl {

inline nlohmann::ordered_json to_json(const IterationMetrics& m) {
  nlohmann::ordered_json j;
  j["iteration"] = m.iteration;
  j["h_max"] = m.h_max;
  j["mean_reward"] = m.mean_reward;
  j["reward_std"] = m.reward_std;
  j["critic_calls"] = m.critic_calls;
  j["clip_fraction"] = m.clip_fraction;
  j["grad_norm"] = m.grad_norm;
  if (m.eval_sr) j["eval_sr"] = *m.eval_sr;
  return j;
}

// One JSON object per iteration, flushed per line so aborted runs keep their
// partial history.
class JsonlMetricsSink final : public MetricsSink {
 public:
  explicit JsonlMetricsSink(std::ostream& out) : out_(&out) {}

  void on_iteration(const IterationMetrics& metrics) override {
    (*out_) << to_json(metrics).dump() << '\n';
    out_->flush();
  }

 private:
  std::ostream* out_;
};

}  // namespace ttrl
