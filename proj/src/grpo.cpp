#include "ttrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ttrl/errors.hpp"

namespace ttrl {

void GrpoConfig::validate() const {
  if (group_size < 2) throw ConfigError("grpo.group_size must be >= 2");
  if (!(clip_epsilon > 0.0) || clip_epsilon >= 1.0)
    throw ConfigError("grpo.clip_epsilon must be in (0, 1)");
  if (!(step_size > 0.0)) throw ConfigError("grpo.step_size must be > 0");
  if (epochs_per_batch < 0) throw ConfigError("grpo.epochs_per_batch must be >= 0");
  if (!(std_floor > 0.0)) throw ConfigError("grpo.std_floor must be > 0");
}

std::vector<double> compute_advantages(std::span<const double> rewards, double std_floor) {
  const std::size_t g = rewards.size();
  if (g < 2) throw std::invalid_argument("compute_advantages needs a group of >= 2 rewards");

  const bool all_equal = std::all_of(rewards.begin(), rewards.end(),
                                     [&](double r) { return r == rewards[0]; });
  if (all_equal) return std::vector<double>(g, 0.0);

  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);

  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);
  const double denom = std::max(std::sqrt(var), std_floor);

  std::vector<double> advantages(g);
  for (std::size_t i = 0; i < g; ++i) advantages[i] = (rewards[i] - mean) / denom;
  return advantages;
}

PolicyParams surrogate_gradient(const GroupBatch& batch, const PolicyParams& params,
                                const GrpoConfig& config, const FeatureSpec& features,
                                double temperature, SurrogateStats* stats) {
  const std::size_t g = batch.trajectories.size();
  if (g == 0 || batch.advantages.size() != g)
    throw std::logic_error("surrogate_gradient: advantages not computed for this batch");

  PolicyParams grad = PolicyParams::zeros(params.num_slots, params.vocab_size, params.feature_dim);
  const double lo = 1.0 - config.clip_epsilon;
  const double hi = 1.0 + config.clip_epsilon;

  for (std::size_t i = 0; i < g; ++i) {
    const Trajectory& traj = batch.trajectories[i];
    const double advantage = batch.advantages[i];
    if (traj.steps.empty()) throw std::logic_error("surrogate_gradient: empty trajectory");
    const double scale = 1.0 / (static_cast<double>(g) * static_cast<double>(traj.steps.size()));

    for (const Step& step : traj.steps) {
      if (stats) ++stats->total_steps;
      if (advantage == 0.0) continue;
      const std::vector<double> phi = features.encode(step.obs);
      const double lp = chunk_log_prob(params, phi, step.chunk.tokens, temperature);
      const double ratio = std::exp(lp - step.chunk.log_prob);

      const bool clipped = (advantage > 0.0 && ratio > hi) || (advantage < 0.0 && ratio < lo);
      if (clipped) {
        if (stats) ++stats->clipped_steps;
        continue;
      }
      const double coeff = scale * advantage * ratio;
      const PolicyParams step_grad = grad_log_prob(params, phi, step.chunk.tokens, temperature);
      for (std::size_t w = 0; w < grad.weights.size(); ++w)
        grad.weights[w] += coeff * step_grad.weights[w];
    }
  }
  return grad;
}

PolicyParams grpo_update(const GroupBatch& batch, PolicyParams params, const GrpoConfig& config,
                         const FeatureSpec& features, double temperature,
                         UpdateDiagnostics* diag) {
  SurrogateStats stats;
  double last_norm = 0.0;
  for (int epoch = 0; epoch < config.epochs_per_batch; ++epoch) {
    const PolicyParams grad = surrogate_gradient(batch, params, config, features, temperature,
                                                 &stats);
    double sq = 0.0;
    for (double w : grad.weights) sq += w * w;
    last_norm = std::sqrt(sq);
    params = apply_update(params, grad, config.step_size);
  }
  if (diag) {
    diag->clip_fraction = stats.total_steps
                              ? static_cast<double>(stats.clipped_steps) /
                                    static_cast<double>(stats.total_steps)
                              : 0.0;
    diag->grad_norm = last_norm;
  }
  return params;
}

}  // namespace ttrl
