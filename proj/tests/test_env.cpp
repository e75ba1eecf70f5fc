#include <doctest.h>

#include <vector>

#include "ttrl/env.hpp"
#include "ttrl/errors.hpp"
#include "ttrl/rng.hpp"
#include "ttrl/trajectory.hpp"

using namespace ttrl;

namespace {

EnvConfig small_env(int grid, int stages, int cap, bool mismatch = false) {
  EnvConfig c;
  c.grid_size = grid;
  c.num_stages = stages;
  c.max_horizon_cap = cap;
  c.mismatch_enabled = mismatch;
  c.seed = 11;
  return c;
}

TaskSpec corner_tour_3(int grid) {
  const int m = grid - 1;
  return {"tour3", "visit the corners in order", {{m, m}, {0, m}, {0, 0}}};
}

Observation synthetic(int stages_done, int total_stages, GridPos pos, int step = 0) {
  Observation o;
  o.agent_pos = pos;
  o.stage_index = stages_done;
  o.item_flags.assign(static_cast<std::size_t>(total_stages), 0);
  for (int i = 0; i < stages_done; ++i) o.item_flags[static_cast<std::size_t>(i)] = 1;
  o.step_index = step;
  return o;
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("reset starts at zero progress and is deterministic") {
  ChainWorld env(small_env(6, 4, 64), {"t", "", {{1, 1}, {2, 2}, {3, 3}, {4, 4}}});
  const Observation a = env.reset(7);
  CHECK(a.stage_index == 0);
  CHECK(a.step_index == 0);
  CHECK(a.gripper == false);
  for (auto f : a.item_flags) CHECK(f == 0);

  ChainWorld env2(small_env(6, 4, 64), {"t", "", {{1, 1}, {2, 2}, {3, 3}, {4, 4}}});
  CHECK(env2.reset(7) == a);
}

TEST_CASE("target outside the grid is a configuration error") {
  CHECK_THROWS_AS(ChainWorld(small_env(4, 1, 16), {"t", "", {{4, 0}}}), ConfigError);
  CHECK_THROWS_AS(ChainWorld(small_env(4, 1, 16), {"t", "", {{0, -1}}}), ConfigError);
  CHECK_THROWS_AS(ChainWorld(small_env(4, 2, 32), {"t", "", {{0, 0}}}), ConfigError);
}

TEST_CASE("config invariants") {
  CHECK_THROWS_AS(small_env(3, 1, 16).validate(), ConfigError);
  CHECK_THROWS_AS(small_env(4, 0, 16).validate(), ConfigError);
  CHECK_THROWS_AS(small_env(4, 2, 31).validate(), ConfigError);
  CHECK_NOTHROW(small_env(4, 2, 32).validate());
}

TEST_CASE("no-op chunk changes only step_index") {
  ChainWorld env(small_env(5, 1, 16), {"t", "", {{4, 4}}});
  const Observation before = env.reset(3);
  const auto [after, cap] = env.step(std::vector<int>{kNoOp, kNoOp});
  CHECK(after.step_index == 2);
  CHECK_FALSE(cap);
  Observation expect = before;
  expect.step_index = 2;
  CHECK(after == expect);
}

TEST_CASE("grip at the current target completes the stage") {
  ChainWorld env(small_env(5, 2, 32), {"t", "", {{2, 2}, {0, 0}}});
  Observation obs = env.reset(1);
  std::vector<int> to_target;
  for (int i = 0; i < obs.agent_pos.x - 2; ++i) to_target.push_back(kLeft);
  for (int i = 0; i < 2 - obs.agent_pos.x; ++i) to_target.push_back(kRight);
  for (int i = 0; i < obs.agent_pos.y - 2; ++i) to_target.push_back(kDown);
  for (int i = 0; i < 2 - obs.agent_pos.y; ++i) to_target.push_back(kUp);
  to_target.push_back(kGrip);
  obs = env.step(to_target).obs;
  CHECK(obs.item_flags[0] == 1);
  CHECK(obs.stage_index == 1);
  CHECK(obs.agent_pos == GridPos{2, 2});
}

TEST_CASE("out-of-order stage target does not complete") {
  // agent toggles on the stage-1 target while stage 0 is incomplete
  ChainWorld env(small_env(5, 2, 32), {"t", "", {{4, 4}, {2, 2}}});
  Observation obs = env.reset(1);
  std::vector<int> to_later_target;
  for (int i = 0; i < obs.agent_pos.x - 2; ++i) to_later_target.push_back(kLeft);
  for (int i = 0; i < 2 - obs.agent_pos.x; ++i) to_later_target.push_back(kRight);
  for (int i = 0; i < obs.agent_pos.y - 2; ++i) to_later_target.push_back(kDown);
  for (int i = 0; i < 2 - obs.agent_pos.y; ++i) to_later_target.push_back(kUp);
  to_later_target.push_back(kGrip);
  obs = env.step(to_later_target).obs;
  CHECK(obs.stage_index == 0);
  CHECK(obs.item_flags[0] == 0);
  CHECK(obs.item_flags[1] == 0);
  CHECK(obs.gripper == true);  // the toggle itself still happens
}

TEST_CASE("moves clamp at the border") {
  ChainWorld env(small_env(4, 1, 16), {"t", "", {{3, 3}}});
  Observation obs = env.reset(0);
  for (int i = 0; i < 8; ++i) obs = env.step(std::vector<int>{kLeft}).obs;
  CHECK(obs.agent_pos.x == 0);
  for (int i = 0; i < 7; ++i) obs = env.step(std::vector<int>{kDown}).obs;
  CHECK(obs.agent_pos.y == 0);
  CHECK(obs.step_index == 15);
}

TEST_CASE("step past cap is a state error, done_by_cap at the cap") {
  ChainWorld env(small_env(4, 1, 16), {"t", "", {{3, 3}}});
  env.reset(0);
  for (int i = 0; i < 15; ++i) CHECK_FALSE(env.step(std::vector<int>{kNoOp}).done_by_cap);
  CHECK(env.step(std::vector<int>{kNoOp}).done_by_cap);
  CHECK_THROWS_AS(env.step(std::vector<int>{kNoOp}), std::logic_error);
}

TEST_CASE("oracle_progress anchors") {
  const int grid = 6;
  ChainWorld env(small_env(grid, 4, 64), {"t", "", {{5, 5}, {0, 5}, {5, 0}, {0, 0}}});

  // all stages complete -> 100 regardless of position
  CHECK(env.oracle_progress(synthetic(4, 4, {2, 3})) == 100.0);

  // reset-state observations score exactly zero, anywhere on the grid
  CHECK(env.oracle_progress(synthetic(0, 4, {0, 0})) == 0.0);
  CHECK(env.oracle_progress(synthetic(0, 4, {3, 2})) == 0.0);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    ChainWorld fresh(small_env(grid, 4, 64), {"t", "", {{5, 5}, {0, 5}, {5, 0}, {0, 0}}});
    CHECK(fresh.oracle_progress(fresh.reset(seed)) == 0.0);
  }

  // 3 of 4 stages done, adjacent to the final target
  const double p = env.oracle_progress(synthetic(3, 4, {0, 1}));
  CHECK(p > 75.0);
  CHECK(p < 100.0);
  // hand evaluation: 75 + 25 * 0.95 * (d_max - 1)/d_max with d_max = 10
  CHECK(p == doctest::Approx(75.0 + 25.0 * 0.95 * 0.9).epsilon(1e-12));
}

TEST_CASE("intra-stage shaping never crosses the stage boundary") {
  const int grid = 5;
  ChainWorld env(small_env(grid, 2, 32), {"t", "", {{2, 2}, {0, 0}}});
  for (int x = 0; x < grid; ++x)
    for (int y = 0; y < grid; ++y) {
      const double p0 = env.oracle_progress(synthetic(0, 2, {x, y}));
      CHECK(p0 < 50.0);
      const double p1 = env.oracle_progress(synthetic(1, 2, {x, y}));
      CHECK(p1 >= 50.0);
      CHECK(p1 < 100.0);
    }
}

TEST_CASE("oracle_success and the injected mismatch") {
  const int grid = 5;
  const TaskSpec task{"t", "", {{2, 2}, {4, 4}}};

  ChainWorld plain(small_env(grid, 2, 32), task);
  CHECK(plain.oracle_success(synthetic(2, 2, {4, 4})));
  CHECK_FALSE(plain.oracle_success(synthetic(1, 2, {4, 4})));

  ChainWorld mism(small_env(grid, 2, 32, true), task);
  CHECK_FALSE(mism.oracle_success(synthetic(2, 2, {4, 4})));  // off the terminal cell
  CHECK(mism.oracle_success(synthetic(2, 2, mism.terminal_cell())));
  CHECK(mism.oracle_progress(synthetic(2, 2, {4, 4})) == 100.0);
}

TEST_CASE("terminal cell avoids the final target") {
  ChainWorld a(small_env(5, 1, 16, true), {"t", "", {{2, 2}}});
  CHECK(a.terminal_cell() == GridPos{0, 0});
  ChainWorld b(small_env(5, 1, 16, true), {"t", "", {{0, 0}}});
  CHECK(b.terminal_cell() == GridPos{4, 4});
}

TEST_CASE("scripted expert produces a shortest-path success") {
  const EnvConfig cfg = small_env(6, 1, 16);
  // discover the seeded start, then place the target 3 cells away
  ChainWorld probe(cfg, {"probe", "", {{0, 0}}});
  const GridPos start = probe.reset(5).agent_pos;
  GridPos target = start;
  target.x += target.x + 3 < 6 ? 3 : -3;
  const TaskSpec task{"t", "", {target}};

  const Trajectory traj = scripted_expert(cfg, task, 5);
  CHECK(traj.steps.size() == 4);  // 3 moves + grip toggle
  ChainWorld env(cfg, task);
  CHECK(env.oracle_progress(traj.final_obs) == 100.0);
  CHECK(env.oracle_success(traj.final_obs));

  const Trajectory again = scripted_expert(cfg, task, 5);
  REQUIRE(again.steps.size() == traj.steps.size());
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    CHECK(again.steps[i].chunk.tokens == traj.steps[i].chunk.tokens);
    CHECK(again.steps[i].obs == traj.steps[i].obs);
  }
}

TEST_CASE("expert succeeds and progress is monotone along its path") {
  const EnvConfig cfg = small_env(6, 3, 48);
  const TaskSpec task = corner_tour_3(6);
  ChainWorld env(cfg, task);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Trajectory traj = scripted_expert(cfg, task, seed);
    CHECK(env.oracle_progress(traj.final_obs) == 100.0);
    double prev = -1.0;
    for (const Observation& f : traj.frames()) {
      const double p = env.oracle_progress(f);
      CHECK(p >= prev);
      prev = p;
    }
  }
}

TEST_CASE("expert that cannot finish inside the cap is a generation error") {
  EnvConfig cfg = small_env(32, 1, 16);  // worst-case path 63 > cap 16
  ChainWorld probe(cfg, {"probe", "", {{0, 0}}});
  const GridPos start = probe.reset(2).agent_pos;
  const GridPos far{start.x < 16 ? 31 : 0, start.y < 16 ? 31 : 0};
  CHECK_THROWS_AS(scripted_expert(cfg, {"t", "", {far}}, 2), std::runtime_error);
}

TEST_CASE("full observation sequence is deterministic") {
  const EnvConfig cfg = small_env(6, 3, 96);
  const TaskSpec task = corner_tour_3(6);
  Rng actions(42);
  std::vector<int> tokens;
  for (int i = 0; i < 90; ++i) tokens.push_back(actions.next_int(kNumActions));

  ChainWorld a(cfg, task), b(cfg, task);
  a.reset(9);
  b.reset(9);
  for (int t : tokens) {
    const std::vector<int> chunk{t};
    CHECK(a.step(chunk).obs == b.step(chunk).obs);
  }
}

TEST_CASE("progress-success consistency with mismatch disabled") {
  const EnvConfig cfg = small_env(5, 2, 96);
  const TaskSpec task{"t", "", {{4, 4}, {0, 0}}};
  ChainWorld env(cfg, task);
  Observation obs = env.reset(3);
  Rng rng(17);
  for (int i = 0; i < 90; ++i) {
    obs = env.step(std::vector<int>{rng.next_int(kNumActions)}).obs;
    CHECK((env.oracle_progress(obs) == 100.0) == env.oracle_success(obs));
  }
}

TEST_CASE("mismatch: a reachable state has progress 100 but no success") {
  const EnvConfig cfg = small_env(5, 2, 96, true);
  const TaskSpec task{"t", "", {{4, 4}, {2, 2}}};
  const Trajectory demo = scripted_expert(cfg, task, 1);
  ChainWorld replay(cfg, task);
  Observation obs = replay.reset(1);
  for (const Step& s : demo.steps) obs = replay.step(s.chunk.tokens).obs;
  CHECK(replay.oracle_progress(obs) == 100.0);
  CHECK_FALSE(replay.oracle_success(obs));
}

}  // TEST_SUITE
