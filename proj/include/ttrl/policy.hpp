#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ttrl/env.hpp"

namespace ttrl {

// Per-slot linear softmax weights: [slot][token][feature], row-major.
struct PolicyParams {
  int num_slots = 1;
  int vocab_size = kNumActions;
  int feature_dim = 0;
  std::vector<double> weights;

  static PolicyParams zeros(int num_slots, int vocab_size, int feature_dim);

  double at(int slot, int token, int feature) const {
    return weights[static_cast<std::size_t>((slot * vocab_size + token) * feature_dim + feature)];
  }
  double& at(int slot, int token, int feature) {
    return weights[static_cast<std::size_t>((slot * vocab_size + token) * feature_dim + feature)];
  }
  bool same_shape(const PolicyParams& other) const {
    return num_slots == other.num_slots && vocab_size == other.vocab_size &&
           feature_dim == other.feature_dim;
  }
};

struct ActionChunk {
  std::vector<int> tokens;  // length num_slots
  double log_prob = 0.0;    // joint log-probability under the sampling distribution
};

// Observation encoding: position one-hot, stage one-hot, item flags, gripper.
struct FeatureSpec {
  int grid_size = 0;
  int num_stages = 0;

  int dim() const { return grid_size * grid_size + (num_stages + 1) + num_stages + 1; }
  std::vector<double> encode(const Observation& obs) const;
};

// Temperature-scaled softmax over one slot's logits. Shared by the sampler,
// the scorer and the gradient so they agree exactly.
std::vector<double> slot_probs(const PolicyParams& params, int slot,
                               std::span<const double> features, double temperature);

ActionChunk sample_chunk(const PolicyParams& params, std::span<const double> features,
                         double temperature, std::uint64_t rng_seed);

double chunk_log_prob(const PolicyParams& params, std::span<const double> features,
                      std::span<const int> tokens, double temperature);

// d(chunk_log_prob)/dW, returned in PolicyParams shape.
PolicyParams grad_log_prob(const PolicyParams& params, std::span<const double> features,
                           std::span<const int> tokens, double temperature);

// W + step_size * gradient; inputs untouched.
PolicyParams apply_update(const PolicyParams& params, const PolicyParams& gradient,
                          double step_size);

// Argmax decoding (evaluation); ties break toward the lowest token index.
std::vector<int> greedy_chunk(const PolicyParams& params, std::span<const double> features);

// Flat little-endian binary format, 16-byte header then f64 weights.
void save_params(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_params(const std::filesystem::path& path);

}  // namespace ttrl
