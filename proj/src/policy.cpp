#include "ttrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ttrl/rng.hpp"

namespace ttrl {

PolicyParams PolicyParams::zeros(int num_slots, int vocab_size, int feature_dim) {
  if (num_slots < 1 || vocab_size < 2 || feature_dim < 1)
    throw std::invalid_argument("bad policy shape");
  PolicyParams p;
  p.num_slots = num_slots;
  p.vocab_size = vocab_size;
  p.feature_dim = feature_dim;
  p.weights.assign(static_cast<std::size_t>(num_slots) * vocab_size * feature_dim, 0.0);
  return p;
}

std::vector<double> FeatureSpec::encode(const Observation& obs) const {
  std::vector<double> f(static_cast<std::size_t>(dim()), 0.0);
  const int cells = grid_size * grid_size;
  f[static_cast<std::size_t>(obs.agent_pos.y * grid_size + obs.agent_pos.x)] = 1.0;
  f[static_cast<std::size_t>(cells + obs.stage_index)] = 1.0;
  for (int i = 0; i < num_stages; ++i)
    f[static_cast<std::size_t>(cells + num_stages + 1 + i)] = obs.item_flags[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  f[static_cast<std::size_t>(dim() - 1)] = obs.gripper ? 1.0 : 0.0;
  return f;
}

std::vector<double> slot_probs(const PolicyParams& params, int slot,
                               std::span<const double> features, double temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("temperature must be > 0");
  if (static_cast<int>(features.size()) != params.feature_dim)
    throw std::invalid_argument("feature size mismatch");

  std::vector<double> logits(static_cast<std::size_t>(params.vocab_size));
  for (int a = 0; a < params.vocab_size; ++a) {
    double z = 0.0;
    for (int f = 0; f < params.feature_dim; ++f)
      z += params.at(slot, a, f) * features[static_cast<std::size_t>(f)];
    if (!std::isfinite(z)) throw std::runtime_error("non-finite logit");
    logits[static_cast<std::size_t>(a)] = z;
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  std::vector<double> probs(logits.size());
  for (std::size_t a = 0; a < logits.size(); ++a) {
    probs[a] = std::exp((logits[a] - zmax) / temperature);
    total += probs[a];
  }
  for (double& p : probs) p /= total;
  return probs;
}

static void check_tokens(const PolicyParams& params, std::span<const int> tokens) {
  if (static_cast<int>(tokens.size()) != params.num_slots)
    throw std::invalid_argument("token count does not match num_slots");
  for (int t : tokens)
    if (t < 0 || t >= params.vocab_size)
      throw std::invalid_argument("token out of range: " + std::to_string(t));
}

ActionChunk sample_chunk(const PolicyParams& params, std::span<const double> features,
                         double temperature, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  ActionChunk chunk;
  chunk.tokens.resize(static_cast<std::size_t>(params.num_slots));
  for (int j = 0; j < params.num_slots; ++j) {
    const std::vector<double> probs = slot_probs(params, j, features, temperature);
    const double u = rng.next_uniform();
    double cdf = 0.0;
    int picked = params.vocab_size - 1;
    for (int a = 0; a < params.vocab_size; ++a) {
      cdf += probs[static_cast<std::size_t>(a)];
      if (u < cdf) {
        picked = a;
        break;
      }
    }
    chunk.tokens[static_cast<std::size_t>(j)] = picked;
    chunk.log_prob += std::log(probs[static_cast<std::size_t>(picked)]);
  }
  return chunk;
}

double chunk_log_prob(const PolicyParams& params, std::span<const double> features,
                      std::span<const int> tokens, double temperature) {
  check_tokens(params, tokens);
  double lp = 0.0;
  for (int j = 0; j < params.num_slots; ++j) {
    const std::vector<double> probs = slot_probs(params, j, features, temperature);
    lp += std::log(probs[static_cast<std::size_t>(tokens[static_cast<std::size_t>(j)])]);
  }
  return lp;
}

PolicyParams grad_log_prob(const PolicyParams& params, std::span<const double> features,
                           std::span<const int> tokens, double temperature) {
  check_tokens(params, tokens);
  PolicyParams grad = PolicyParams::zeros(params.num_slots, params.vocab_size, params.feature_dim);
  for (int j = 0; j < params.num_slots; ++j) {
    const std::vector<double> probs = slot_probs(params, j, features, temperature);
    const int tok = tokens[static_cast<std::size_t>(j)];
    for (int a = 0; a < params.vocab_size; ++a) {
      const double coeff = ((a == tok ? 1.0 : 0.0) - probs[static_cast<std::size_t>(a)]) / temperature;
      if (coeff == 0.0) continue;
      for (int f = 0; f < params.feature_dim; ++f) {
        const double x = features[static_cast<std::size_t>(f)];
        if (x != 0.0) grad.at(j, a, f) += coeff * x;
      }
    }
  }
  return grad;
}

PolicyParams apply_update(const PolicyParams& params, const PolicyParams& gradient,
                          double step_size) {
  if (!params.same_shape(gradient)) throw std::invalid_argument("gradient shape mismatch");
  PolicyParams out = params;
  for (std::size_t i = 0; i < out.weights.size(); ++i)
    out.weights[i] += step_size * gradient.weights[i];
  return out;
}

std::vector<int> greedy_chunk(const PolicyParams& params, std::span<const double> features) {
  std::vector<int> tokens(static_cast<std::size_t>(params.num_slots));
  for (int j = 0; j < params.num_slots; ++j) {
    int best = 0;
    double best_z = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < params.vocab_size; ++a) {
      double z = 0.0;
      for (int f = 0; f < params.feature_dim; ++f)
        z += params.at(j, a, f) * features[static_cast<std::size_t>(f)];
      if (z > best_z) {
        best_z = z;
        best = a;
      }
    }
    tokens[static_cast<std::size_t>(j)] = best;
  }
  return tokens;
}

namespace {

constexpr char kMagic[4] = {'T', 'T', 'T', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  double d;
  std::memcpy(&d, &v, sizeof d);
  return d;
}

}  // namespace

void save_params(const PolicyParams& params, const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(16 + params.weights.size() * 8);
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u16(buf, static_cast<std::uint16_t>(params.num_slots));
  put_u16(buf, static_cast<std::uint16_t>(params.vocab_size));
  put_u32(buf, static_cast<std::uint32_t>(params.feature_dim));
  for (double w : params.weights) put_f64(buf, w);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

PolicyParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 16 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw std::runtime_error("bad params file: " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  if (get_u32(p + 4) != kVersion)
    throw std::runtime_error("unsupported params version in " + path.string());
  const int num_slots = get_u16(p + 8);
  const int vocab_size = get_u16(p + 10);
  const int feature_dim = static_cast<int>(get_u32(p + 12));
  PolicyParams params = PolicyParams::zeros(num_slots, vocab_size, feature_dim);
  const std::size_t expect = 16 + params.weights.size() * 8;
  if (buf.size() != expect)
    throw std::runtime_error("truncated params file: " + path.string());
  for (std::size_t i = 0; i < params.weights.size(); ++i)
    params.weights[i] = get_f64(p + 16 + i * 8);
  return params;
}

}  // namespace ttrl
