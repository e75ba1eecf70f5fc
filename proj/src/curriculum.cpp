#include "ttrl/curriculum.hpp"

#include <string>

#include "ttrl/errors.hpp"

namespace ttrl {

void HorizonSchedule::validate() const {
  if (stages.empty()) throw ConfigError("schedule has no stages");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].h_max < 1)
      throw ConfigError("schedule stage " + std::to_string(i) + " has h_max < 1");
    if (stages[i].iterations < 1)
      throw ConfigError("schedule stage " + std::to_string(i) + " has an empty iteration budget");
    if (i > 0 && stages[i].h_max <= stages[i - 1].h_max)
      throw ConfigError("schedule h_max must be strictly increasing (stage " +
                        std::to_string(i) + ")");
  }
}

int horizon_at(const HorizonSchedule& schedule, std::uint64_t iteration) {
  schedule.validate();
  std::uint64_t start = 0;
  for (const HorizonStage& stage : schedule.stages) {
    if (iteration < start + stage.iterations) return stage.h_max;
    start += stage.iterations;
  }
  return schedule.stages.back().h_max;
}

HorizonSchedule default_schedule(int full_horizon, int num_stages,
                                 std::uint64_t iterations_per_stage) {
  HorizonSchedule schedule;
  for (int k = 1; k <= num_stages; ++k) {
    const std::uint64_t div = 1ull << (num_stages - k);
    const int h = static_cast<int>((static_cast<std::uint64_t>(full_horizon) + div - 1) / div);
    if (!schedule.stages.empty() && schedule.stages.back().h_max == h) {
      schedule.stages.back().iterations += iterations_per_stage;  // merge degenerate rungs
    } else {
      schedule.stages.push_back({h, iterations_per_stage});
    }
  }
  return schedule;
}

}  // namespace ttrl
