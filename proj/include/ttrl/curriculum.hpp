#pragma once

#include <cstdint>
#include <vector>

namespace ttrl {

struct HorizonStage {
  int h_max = 0;
  std::uint64_t iterations = 1;  // budget; the last stage never expires
  bool operator==(const HorizonStage&) const = default;
};

struct HorizonSchedule {
  std::vector<HorizonStage> stages;
  bool operator==(const HorizonSchedule&) const = default;

  void validate() const;  // throws ConfigError
};

// h_max of the stage containing the iteration; stages consume their budgets
// in order and iterations past the schedule stay at the final h_max.
int horizon_at(const HorizonSchedule& schedule, std::uint64_t iteration);

// Geometric doubling ladder ending at full_horizon: stage k of n gets
// ceil(full_horizon / 2^(n-k)). Adjacent equal horizons merge their budgets.
HorizonSchedule default_schedule(int full_horizon, int num_stages,
                                 std::uint64_t iterations_per_stage);

}  // namespace ttrl
