#include "ttrl/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ttrl/errors.hpp"
#include "ttrl/rng.hpp"

namespace ttrl {

namespace {

struct Entry {
  std::string value;
  std::string where;  // "<source>:<line>" for diagnostics
  bool used = false;
};

using SectionMap = std::map<std::string, std::map<std::string, Entry>>;

const std::map<std::string, std::vector<std::string>> kSchema = {
    {"env", {"grid_size", "num_stages", "max_horizon_cap", "mismatch_enabled", "seed"}},
    {"task", {"task_id", "instruction", "stage_targets"}},
    {"critic", {"sigma", "bias", "drift_per_step", "flip_prob", "seed"}},
    {"progress", {"delta_milestone", "delta_check", "tau_threshold"}},
    {"grpo", {"group_size", "clip_epsilon", "step_size", "epochs_per_batch", "std_floor"}},
    {"schedule", {"num_stages", "iterations_per_stage", "stages"}},
    {"run",
     {"estimator", "uniform_frames", "num_slots", "temperature", "gamma", "num_iterations",
      "bc_demos", "bc_epochs", "bc_step_size", "eval_interval", "eval_episodes", "master_seed"}},
};

std::string join_keys(const std::vector<std::string>& keys) {
  std::string out;
  for (const std::string& k : keys) {
    if (!out.empty()) out += ", ";
    out += k;
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strip an unquoted trailing comment.
std::string strip_comment(const std::string& line) {
  bool in_quote = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_quote = !in_quote;
    if (line[i] == '#' && !in_quote) return line.substr(0, i);
  }
  return line;
}

void check_known(const std::string& section, const std::string& key, const std::string& where) {
  auto it = kSchema.find(section);
  if (it == kSchema.end()) {
    std::vector<std::string> names;
    for (const auto& [name, keys] : kSchema) names.push_back(name);
    throw ConfigError(where + ": unknown section [" + section + "]; valid sections: " +
                      join_keys(names));
  }
  if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
    throw ConfigError(where + ": unknown key '" + key + "' in [" + section +
                      "]; valid keys: " + join_keys(it->second));
}

SectionMap read_entries(const std::string& text, const std::string& source,
                        const std::vector<std::string>& overrides) {
  SectionMap sections;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(where + ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (kSchema.find(section) == kSchema.end()) check_known(section, "", where);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    if (section.empty())
      throw ConfigError(where + ": key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    check_known(section, key, where);
    sections[section][key] = Entry{value, where, false};
  }

  for (const std::string& ov : overrides) {
    const std::size_t eq = ov.find('=');
    const std::size_t dot = ov.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw ConfigError("override '" + ov + "' must look like section.key=value");
    const std::string section_name = trim(ov.substr(0, dot));
    const std::string key = trim(ov.substr(dot + 1, eq - dot - 1));
    const std::string value = trim(ov.substr(eq + 1));
    check_known(section_name, key, "override '" + ov + "'");
    sections[section_name][key] = Entry{value, "override '" + ov + "'", false};
  }
  return sections;
}

class Reader {
 public:
  explicit Reader(SectionMap sections) : sections_(std::move(sections)) {}

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  const Entry& entry(const std::string& section, const std::string& key) {
    return sections_[section][key];
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) {
    if (!has(section, key)) return fallback;
    std::string v = entry(section, key).value;
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
  }

  long long get_int(const std::string& section, const std::string& key, long long fallback) {
    if (!has(section, key)) return fallback;
    const Entry& e = entry(section, key);
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(e.where + ": '" + e.value + "' is not an integer for " + section + "." + key);
    }
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) {
    if (!has(section, key)) return fallback;
    const Entry& e = entry(section, key);
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(e.where + ": '" + e.value + "' is not an unsigned integer for " +
                        section + "." + key);
    }
  }

  double get_double(const std::string& section, const std::string& key, double fallback) {
    if (!has(section, key)) return fallback;
    const Entry& e = entry(section, key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(e.where + ": '" + e.value + "' is not a number for " + section + "." + key);
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) {
    if (!has(section, key)) return fallback;
    const Entry& e = entry(section, key);
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw ConfigError(e.where + ": '" + e.value + "' is not true/false for " + section + "." + key);
  }

 private:
  SectionMap sections_;
};

std::vector<GridPos> parse_targets(const std::string& text, const std::string& where) {
  std::vector<GridPos> targets;
  std::istringstream in(text);
  std::string pair;
  while (in >> pair) {
    const std::size_t comma = pair.find(',');
    if (comma == std::string::npos)
      throw ConfigError(where + ": stage target '" + pair + "' must be 'x,y'");
    try {
      targets.push_back({std::stoi(pair.substr(0, comma)), std::stoi(pair.substr(comma + 1))});
    } catch (const std::exception&) {
      throw ConfigError(where + ": stage target '" + pair + "' must be 'x,y' with integers");
    }
  }
  if (targets.empty()) throw ConfigError(where + ": task.stage_targets is empty");
  return targets;
}

HorizonSchedule parse_stages(const std::string& text, const std::string& where) {
  HorizonSchedule schedule;
  std::istringstream in(text);
  std::string pair;
  while (in >> pair) {
    const std::size_t colon = pair.find(':');
    if (colon == std::string::npos)
      throw ConfigError(where + ": schedule stage '" + pair + "' must be 'h_max:iterations'");
    try {
      schedule.stages.push_back({std::stoi(pair.substr(0, colon)),
                                 std::stoull(pair.substr(colon + 1))});
    } catch (const std::exception&) {
      throw ConfigError(where + ": schedule stage '" + pair + "' must be 'h_max:iterations'");
    }
  }
  if (schedule.stages.empty()) throw ConfigError(where + ": schedule.stages is empty");
  return schedule;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RewardMode reward_mode_from_name(const std::string& name) {
  if (name == "accumulative") return RewardMode::kAccumulative;
  if (name == "vanilla") return RewardMode::kVanilla;
  if (name == "uniform") return RewardMode::kUniform;
  throw ConfigError("unknown estimator '" + name +
                    "'; valid values: accumulative, vanilla, uniform");
}

std::string reward_mode_name(RewardMode mode) {
  switch (mode) {
    case RewardMode::kAccumulative: return "accumulative";
    case RewardMode::kVanilla: return "vanilla";
    case RewardMode::kUniform: return "uniform";
  }
  return "accumulative";
}

RunConfig parse_config(const std::string& text, const std::string& source_name,
                       const std::vector<std::string>& overrides) {
  Reader r(read_entries(text, source_name, overrides));
  RunConfig cfg;

  if (!r.has("task", "stage_targets"))
    throw ConfigError(source_name + ": missing required key task.stage_targets");
  cfg.task.stage_targets = parse_targets(r.get_string("task", "stage_targets", ""),
                                         r.entry("task", "stage_targets").where);
  cfg.task.task_id = r.get_string("task", "task_id", "task");
  cfg.task.instruction =
      r.get_string("task", "instruction", "complete the staged targets in order");

  cfg.master_seed = r.get_u64("run", "master_seed", 0);

  cfg.env.grid_size = static_cast<int>(r.get_int("env", "grid_size", 8));
  cfg.env.num_stages = static_cast<int>(
      r.get_int("env", "num_stages", static_cast<long long>(cfg.task.stage_targets.size())));
  cfg.env.max_horizon_cap = static_cast<int>(r.get_int(
      "env", "max_horizon_cap", std::max(512, 16 * cfg.env.num_stages)));
  cfg.env.mismatch_enabled = r.get_bool("env", "mismatch_enabled", false);
  cfg.env.seed = r.get_u64("env", "seed", derive_seed(cfg.master_seed, "env"));

  cfg.critic.sigma = r.get_double("critic", "sigma", 0.0);
  cfg.critic.bias = r.get_double("critic", "bias", 0.0);
  cfg.critic.drift_per_step = r.get_double("critic", "drift_per_step", 0.0);
  cfg.critic.flip_prob = r.get_double("critic", "flip_prob", 0.0);
  cfg.critic.seed = r.get_u64("critic", "seed", derive_seed(cfg.master_seed, "critic"));

  cfg.progress.delta_milestone = static_cast<int>(r.get_int("progress", "delta_milestone", 64));
  cfg.progress.delta_check = static_cast<int>(r.get_int("progress", "delta_check", 16));
  cfg.progress.tau_threshold = r.get_double("progress", "tau_threshold", 0.95);

  cfg.grpo.group_size = static_cast<int>(r.get_int("grpo", "group_size", 8));
  cfg.grpo.clip_epsilon = r.get_double("grpo", "clip_epsilon", 0.2);
  cfg.grpo.step_size = r.get_double("grpo", "step_size", 0.05);
  cfg.grpo.epochs_per_batch = static_cast<int>(r.get_int("grpo", "epochs_per_batch", 2));
  cfg.grpo.std_floor = r.get_double("grpo", "std_floor", 1e-6);

  if (r.has("schedule", "stages")) {
    cfg.schedule = parse_stages(r.get_string("schedule", "stages", ""),
                                r.entry("schedule", "stages").where);
  } else {
    cfg.schedule = default_schedule(
        cfg.env.max_horizon_cap, static_cast<int>(r.get_int("schedule", "num_stages", 1)),
        r.get_u64("schedule", "iterations_per_stage", 10));
  }

  cfg.reward_mode = reward_mode_from_name(r.get_string("run", "estimator", "accumulative"));
  cfg.uniform_frames = static_cast<int>(r.get_int("run", "uniform_frames", 4));
  cfg.num_slots = static_cast<int>(r.get_int("run", "num_slots", 1));
  cfg.temperature = r.get_double("run", "temperature", 1.2);
  cfg.gamma = r.get_double("run", "gamma", 1.0);
  cfg.num_iterations = static_cast<int>(r.get_int("run", "num_iterations", 100));
  cfg.bc_demos = static_cast<int>(r.get_int("run", "bc_demos", 0));
  cfg.bc_epochs = static_cast<int>(r.get_int("run", "bc_epochs", 200));
  cfg.bc_step_size = r.get_double("run", "bc_step_size", 0.05);
  cfg.eval_interval = static_cast<int>(r.get_int("run", "eval_interval", 5));
  cfg.eval_episodes = static_cast<int>(r.get_int("run", "eval_episodes", 50));

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.filename().string(), overrides);
}

std::string format_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[env]\n";
  out << "grid_size = " << cfg.env.grid_size << "\n";
  out << "num_stages = " << cfg.env.num_stages << "\n";
  out << "max_horizon_cap = " << cfg.env.max_horizon_cap << "\n";
  out << "mismatch_enabled = " << (cfg.env.mismatch_enabled ? "true" : "false") << "\n";
  out << "seed = " << cfg.env.seed << "\n\n";

  out << "[task]\n";
  out << "task_id = \"" << cfg.task.task_id << "\"\n";
  out << "instruction = \"" << cfg.task.instruction << "\"\n";
  out << "stage_targets = \"";
  for (std::size_t i = 0; i < cfg.task.stage_targets.size(); ++i) {
    if (i) out << ' ';
    out << cfg.task.stage_targets[i].x << ',' << cfg.task.stage_targets[i].y;
  }
  out << "\"\n\n";

  out << "[critic]\n";
  out << "sigma = " << fmt_double(cfg.critic.sigma) << "\n";
  out << "bias = " << fmt_double(cfg.critic.bias) << "\n";
  out << "drift_per_step = " << fmt_double(cfg.critic.drift_per_step) << "\n";
  out << "flip_prob = " << fmt_double(cfg.critic.flip_prob) << "\n";
  out << "seed = " << cfg.critic.seed << "\n\n";

  out << "[progress]\n";
  out << "delta_milestone = " << cfg.progress.delta_milestone << "\n";
  out << "delta_check = " << cfg.progress.delta_check << "\n";
  out << "tau_threshold = " << fmt_double(cfg.progress.tau_threshold) << "\n\n";

  out << "[grpo]\n";
  out << "group_size = " << cfg.grpo.group_size << "\n";
  out << "clip_epsilon = " << fmt_double(cfg.grpo.clip_epsilon) << "\n";
  out << "step_size = " << fmt_double(cfg.grpo.step_size) << "\n";
  out << "epochs_per_batch = " << cfg.grpo.epochs_per_batch << "\n";
  out << "std_floor = " << fmt_double(cfg.grpo.std_floor) << "\n\n";

  out << "[schedule]\n";
  out << "stages = \"";
  for (std::size_t i = 0; i < cfg.schedule.stages.size(); ++i) {
    if (i) out << ' ';
    out << cfg.schedule.stages[i].h_max << ':' << cfg.schedule.stages[i].iterations;
  }
  out << "\"\n\n";

  out << "[run]\n";
  out << "estimator = \"" << reward_mode_name(cfg.reward_mode) << "\"\n";
  out << "uniform_frames = " << cfg.uniform_frames << "\n";
  out << "num_slots = " << cfg.num_slots << "\n";
  out << "temperature = " << fmt_double(cfg.temperature) << "\n";
  out << "gamma = " << fmt_double(cfg.gamma) << "\n";
  out << "num_iterations = " << cfg.num_iterations << "\n";
  out << "bc_demos = " << cfg.bc_demos << "\n";
  out << "bc_epochs = " << cfg.bc_epochs << "\n";
  out << "bc_step_size = " << fmt_double(cfg.bc_step_size) << "\n";
  out << "eval_interval = " << cfg.eval_interval << "\n";
  out << "eval_episodes = " << cfg.eval_episodes << "\n";
  out << "master_seed = " << cfg.master_seed << "\n";
  return out.str();
}

}  // namespace ttrl
