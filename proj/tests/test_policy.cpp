#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "ttrl/env.hpp"
#include "ttrl/policy.hpp"
#include "ttrl/rng.hpp"

using namespace ttrl;

namespace {

PolicyParams random_params(int slots, int vocab, int feat, std::uint64_t seed, double scale = 1.0) {
  PolicyParams p = PolicyParams::zeros(slots, vocab, feat);
  Rng rng(seed);
  for (double& w : p.weights) w = scale * (rng.next_uniform() * 2.0 - 1.0);
  return p;
}

Observation sample_obs(int grid, int stages, std::uint64_t seed) {
  Rng rng(seed);
  Observation o;
  o.agent_pos = {rng.next_int(grid), rng.next_int(grid)};
  o.stage_index = rng.next_int(stages + 1);
  o.item_flags.assign(static_cast<std::size_t>(stages), 0);
  for (int i = 0; i < o.stage_index; ++i) o.item_flags[static_cast<std::size_t>(i)] = 1;
  o.gripper = rng.next_int(2) == 1;
  o.step_index = rng.next_int(100);
  return o;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("featurize layout and determinism") {
  const FeatureSpec fs{5, 3};
  CHECK(fs.dim() == 25 + 4 + 3 + 1);

  Observation reset_obs;
  reset_obs.agent_pos = {2, 1};
  reset_obs.item_flags = {0, 0, 0};
  const std::vector<double> f = fs.encode(reset_obs);
  CHECK(static_cast<int>(f.size()) == fs.dim());
  CHECK(f[1 * 5 + 2] == 1.0);  // position one-hot
  CHECK(f[25 + 0] == 1.0);     // stage one-hot at index 0
  CHECK(f[25 + 1] == 0.0);
  double sum = 0.0;
  for (double x : f) sum += x;
  CHECK(sum == 2.0);  // position + stage; no flags, no gripper

  CHECK(fs.encode(reset_obs) == f);

  const Observation other = sample_obs(5, 3, 77);
  CHECK(fs.encode(other) == fs.encode(other));
}

TEST_CASE("near-zero temperature samples the argmax with probability ~1") {
  const FeatureSpec fs{5, 2};
  const PolicyParams params = random_params(1, kNumActions, fs.dim(), 3);
  const Observation obs = sample_obs(5, 2, 4);
  const std::vector<double> phi = fs.encode(obs);

  const std::vector<int> argmax = greedy_chunk(params, phi);
  for (std::uint64_t s = 0; s < 32; ++s) {
    const ActionChunk c = sample_chunk(params, phi, 1e-6, s);
    CHECK(c.tokens == argmax);
    CHECK(c.log_prob == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("all-zero weights sample uniformly") {
  const FeatureSpec fs{4, 1};
  const PolicyParams params = PolicyParams::zeros(2, kNumActions, fs.dim());
  const std::vector<double> phi = fs.encode(sample_obs(4, 1, 5));

  const ActionChunk c = sample_chunk(params, phi, 1.0, 9);
  CHECK(c.log_prob == doctest::Approx(-2.0 * std::log(6.0)).epsilon(1e-12));

  std::vector<int> counts(kNumActions, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i)
    counts[static_cast<std::size_t>(
        sample_chunk(params, phi, 1.0, static_cast<std::uint64_t>(i)).tokens[0])]++;
  const double p = 1.0 / 6.0;
  const double sigma = std::sqrt(p * (1 - p) / n);
  for (int a = 0; a < kNumActions; ++a)
    CHECK(std::abs(static_cast<double>(counts[static_cast<std::size_t>(a)]) / n - p) < 3 * sigma);
}

TEST_CASE("sampling frequency matches the softmax within 3 sigma") {
  const FeatureSpec fs{4, 1};
  const PolicyParams params = random_params(1, kNumActions, fs.dim(), 21, 1.5);
  const std::vector<double> phi = fs.encode(sample_obs(4, 1, 22));
  const double temperature = 1.3;
  const std::vector<double> probs = slot_probs(params, 0, phi, temperature);

  const int n = 100000;
  std::vector<int> counts(kNumActions, 0);
  for (int i = 0; i < n; ++i)
    counts[static_cast<std::size_t>(
        sample_chunk(params, phi, temperature, static_cast<std::uint64_t>(i)).tokens[0])]++;
  for (int a = 0; a < kNumActions; ++a) {
    const double p = probs[static_cast<std::size_t>(a)];
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(counts[static_cast<std::size_t>(a)]) / n - p) <=
          3 * sigma + 1e-9);
  }
}

TEST_CASE("sampler and scorer agree exactly") {
  const FeatureSpec fs{6, 3};
  for (std::uint64_t s = 0; s < 50; ++s) {
    const PolicyParams params = random_params(2, kNumActions, fs.dim(), 100 + s, 2.0);
    const std::vector<double> phi = fs.encode(sample_obs(6, 3, 200 + s));
    const ActionChunk c = sample_chunk(params, phi, 1.2, s);
    CHECK(chunk_log_prob(params, phi, c.tokens, 1.2) == c.log_prob);
  }
}

TEST_CASE("uniform log_prob and exhaustive normalization") {
  const FeatureSpec fs{4, 1};
  const PolicyParams uniform = PolicyParams::zeros(1, kNumActions, fs.dim());
  const std::vector<double> phi = fs.encode(sample_obs(4, 1, 6));
  const std::vector<int> tokens{3};
  CHECK(chunk_log_prob(uniform, phi, tokens, 1.0) ==
        doctest::Approx(-std::log(6.0)).epsilon(1e-12));

  // exp(log_prob) sums to 1 over all 6 outcomes for num_slots = 1
  const PolicyParams params = random_params(1, kNumActions, fs.dim(), 7, 1.7);
  double total = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    const std::vector<int> t{a};
    total += std::exp(chunk_log_prob(params, phi, t, 0.9));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("log_prob is invariant to a constant logit shift in one slot") {
  const FeatureSpec fs{5, 2};
  const PolicyParams params = random_params(2, kNumActions, fs.dim(), 8);
  const Observation obs = sample_obs(5, 2, 9);
  const std::vector<double> phi = fs.encode(obs);
  const std::vector<int> tokens{1, 4};

  PolicyParams shifted = params;
  for (int a = 0; a < shifted.vocab_size; ++a)
    for (int f = 0; f < shifted.feature_dim; ++f) shifted.at(0, a, f) += 0.37;

  CHECK(chunk_log_prob(shifted, phi, tokens, 1.1) ==
        doctest::Approx(chunk_log_prob(params, phi, tokens, 1.1)).epsilon(1e-12));
}

TEST_CASE("out-of-range token is an argument error") {
  const FeatureSpec fs{4, 1};
  const PolicyParams params = PolicyParams::zeros(1, kNumActions, fs.dim());
  const std::vector<double> phi = fs.encode(sample_obs(4, 1, 2));
  const std::vector<int> bad{6};
  CHECK_THROWS_AS(chunk_log_prob(params, phi, bad, 1.0), std::invalid_argument);
  const std::vector<int> neg{-1};
  CHECK_THROWS_AS(grad_log_prob(params, phi, neg, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(chunk_log_prob(params, phi, std::vector<int>{0}, 0.0), std::invalid_argument);
}

TEST_CASE("non-finite logits are a numerical error") {
  const FeatureSpec fs{4, 1};
  PolicyParams params = PolicyParams::zeros(1, kNumActions, fs.dim());
  params.at(0, 0, 0) = std::numeric_limits<double>::infinity();
  Observation obs;
  obs.agent_pos = {0, 0};
  obs.item_flags = {0};
  const std::vector<double> phi = fs.encode(obs);
  CHECK_THROWS_AS(chunk_log_prob(params, phi, std::vector<int>{0}, 1.0), std::runtime_error);
}

TEST_CASE("closed-form gradient at the symmetric two-token point") {
  // vocab 2, zero weights, token 0: sampled row (1 - 0.5)/T * phi, other -0.5/T * phi
  const int feat = 3;
  const PolicyParams params = PolicyParams::zeros(1, 2, feat);
  const std::vector<double> phi{1.0, 0.0, 1.0};
  const double temperature = 2.0;
  const PolicyParams g = grad_log_prob(params, phi, std::vector<int>{0}, temperature);
  CHECK(g.at(0, 0, 0) == 0.5 / temperature);
  CHECK(g.at(0, 0, 1) == 0.0);
  CHECK(g.at(0, 0, 2) == 0.5 / temperature);
  CHECK(g.at(0, 1, 0) == -0.5 / temperature);
  CHECK(g.at(0, 1, 2) == -0.5 / temperature);
}

TEST_CASE("analytic gradient matches central finite differences") {
  const FeatureSpec fs{5, 3};
  const double h = 1e-5;
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 24; ++trial) {
    PolicyParams params = random_params(1, kNumActions, fs.dim(), 300 + trial, 1.2);
    const Observation obs = sample_obs(5, 3, 400 + trial);
    const std::vector<double> phi = fs.encode(obs);
    Rng rng(500 + trial);
    const std::vector<int> tokens{rng.next_int(kNumActions)};
    const double temperature = 0.7 + rng.next_uniform();

    const PolicyParams analytic = grad_log_prob(params, phi, tokens, temperature);
    for (int a = 0; a < params.vocab_size; ++a)
      for (int f = 0; f < params.feature_dim; ++f) {
        const double keep = params.at(0, a, f);
        params.at(0, a, f) = keep + h;
        const double up = chunk_log_prob(params, phi, tokens, temperature);
        params.at(0, a, f) = keep - h;
        const double dn = chunk_log_prob(params, phi, tokens, temperature);
        params.at(0, a, f) = keep;
        const double numeric = (up - dn) / (2 * h);
        const double rel = std::abs(analytic.at(0, a, f) - numeric) /
                           std::max(1.0, std::abs(numeric));
        worst = std::max(worst, rel);
      }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("gradient rows of a slot sum to zero") {
  const FeatureSpec fs{5, 2};
  const PolicyParams params = random_params(2, kNumActions, fs.dim(), 31);
  const std::vector<double> phi = fs.encode(sample_obs(5, 2, 32));
  const PolicyParams g = grad_log_prob(params, phi, std::vector<int>{2, 5}, 1.4);
  for (int j = 0; j < g.num_slots; ++j)
    for (int f = 0; f < g.feature_dim; ++f) {
      double col = 0.0;
      for (int a = 0; a < g.vocab_size; ++a) col += g.at(j, a, f);
      CHECK(std::abs(col) < 1e-12);
    }
}

TEST_CASE("apply_update identities") {
  const FeatureSpec fs{4, 1};
  PolicyParams params = PolicyParams::zeros(1, kNumActions, fs.dim());
  for (std::size_t i = 0; i < params.weights.size(); ++i)
    params.weights[i] = 0.25 * static_cast<double>(i % 7) - 0.5;  // dyadic values
  PolicyParams g = PolicyParams::zeros(1, kNumActions, fs.dim());
  for (std::size_t i = 0; i < g.weights.size(); ++i)
    g.weights[i] = 0.5 * static_cast<double>(i % 5) - 1.0;

  CHECK(apply_update(params, PolicyParams::zeros(1, kNumActions, fs.dim()), 0.5).weights ==
        params.weights);
  CHECK(apply_update(params, g, 0.0).weights == params.weights);

  const PolicyParams forward = apply_update(params, g, 0.25);
  const PolicyParams back = apply_update(forward, g, -0.25);
  CHECK(back.weights == params.weights);

  const PolicyParams wrong_shape = PolicyParams::zeros(1, kNumActions, fs.dim() + 1);
  CHECK_THROWS_AS(apply_update(params, wrong_shape, 1.0), std::invalid_argument);
}

TEST_CASE("softmax normalization over random inputs") {
  const FeatureSpec fs{6, 4};
  for (std::uint64_t s = 0; s < 30; ++s) {
    const PolicyParams params = random_params(1, kNumActions, fs.dim(), 600 + s, 3.0);
    const std::vector<double> phi = fs.encode(sample_obs(6, 4, 700 + s));
    const std::vector<double> probs = slot_probs(params, 0, phi, 0.8);
    double total = 0.0;
    for (double p : probs) total += p;
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("argmax token is temperature independent") {
  const FeatureSpec fs{5, 2};
  const PolicyParams params = random_params(1, kNumActions, fs.dim(), 41);
  const std::vector<double> phi = fs.encode(sample_obs(5, 2, 42));
  const std::vector<int> ref = greedy_chunk(params, phi);
  for (double t : {0.05, 0.5, 1.0, 1.2, 4.0, 50.0}) {
    const std::vector<double> probs = slot_probs(params, 0, phi, t);
    int best = 0;
    for (int a = 1; a < kNumActions; ++a)
      if (probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(best)]) best = a;
    CHECK(best == ref[0]);
  }
}

TEST_CASE("params serialize to a bit-exact round trip") {
  const PolicyParams params = random_params(2, kNumActions, 37, 55, 4.0);
  const auto path = std::filesystem::temp_directory_path() / "ttrl_params_test.bin";
  save_params(params, path);

  CHECK(std::filesystem::file_size(path) == 16 + params.weights.size() * 8);
  const PolicyParams loaded = load_params(path);
  CHECK(loaded.num_slots == params.num_slots);
  CHECK(loaded.vocab_size == params.vocab_size);
  CHECK(loaded.feature_dim == params.feature_dim);
  CHECK(loaded.weights == params.weights);
  std::filesystem::remove(path);

  CHECK_THROWS(load_params(std::filesystem::temp_directory_path() / "ttrl_missing.bin"));
}

}  // TEST_SUITE
