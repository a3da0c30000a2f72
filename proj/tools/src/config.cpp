#include "anicemc_cli/config.hpp"

#include <anicemc/chain_io.hpp>
#include <anicemc/checkpoint.hpp>
#include <anicemc/errors.hpp>
#include <anicemc/logistic.hpp>

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#ifndef ANICEMC_PRESET_DIR
#define ANICEMC_PRESET_DIR "presets"
#endif

namespace anicemc::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_widths(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    const std::size_t w = to_size(key, trim(item));
    if (w == 0) throw ConfigError(key + ": layer widths must be positive");
    out.push_back(w);
  }
  if (out.empty()) throw ConfigError(key + ": expected comma-separated layer widths");
  return out;
}

std::string from_widths(const std::vector<std::size_t>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) out += (i ? "," : "") + std::to_string(w[i]);
  return out;
}

// nice.hidden: one width list per coupling layer, layers separated by '|'.
std::vector<std::vector<std::size_t>> to_layer_widths(const std::string& key, const std::string& v) {
  std::vector<std::vector<std::size_t>> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, '|');) out.push_back(to_widths(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": expected '|'-separated layer width lists");
  return out;
}

std::string from_layer_widths(const std::vector<std::vector<std::size_t>>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) out += (i ? "|" : "") + from_widths(w[i]);
  return out;
}

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string& key, const std::string&)> set;
};

template <class T>
Field size_field(T ExperimentConfig::*member) {
  return {[member](const ExperimentConfig& c) { return std::to_string(c.*member); },
          [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = static_cast<T>(to_size(k, v));
          }};
}

Field double_field(double ExperimentConfig::*member) {
  return {[member](const ExperimentConfig& c) { return format_double(c.*member); },
          [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = to_double(k, v);
          }};
}

template <class T>
Field train_size(T TrainConfig::*member) {
  return {[member](const ExperimentConfig& c) { return std::to_string(c.train.*member); },
          [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.train.*member = static_cast<T>(to_size(k, v));
          }};
}

Field train_double(double TrainConfig::*member) {
  return {[member](const ExperimentConfig& c) { return format_double(c.train.*member); },
          [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.train.*member = to_double(k, v);
          }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("target", Field{[](const ExperimentConfig& c) { return c.target; },
                                   [](ExperimentConfig& c, const std::string&, const std::string& v) {
                                     c.target = v;
                                   }});
    t.emplace_back("data_path",
                   Field{[](const ExperimentConfig& c) { return c.data_path.string(); },
                         [](ExperimentConfig& c, const std::string&, const std::string& v) { c.data_path = v; }});
    t.emplace_back("prior_variance", double_field(&ExperimentConfig::prior_variance));
    t.emplace_back("mog6_radius", double_field(&ExperimentConfig::mog6_radius));
    t.emplace_back("mog_literal_sum",
                   Field{[](const ExperimentConfig& c) { return std::string(c.mog_literal_sum ? "true" : "false"); },
                         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.mog_literal_sum = to_bool(k, v);
                         }});
    t.emplace_back("kernel", Field{[](const ExperimentConfig& c) { return c.kernel; },
                                   [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                                     if (v != "hmc" && v != "anicemc") {
                                       throw ConfigError(k + ": expected hmc or anicemc, got '" + v + "'");
                                     }
                                     c.kernel = v;
                                   }});
    t.emplace_back("hmc.step_size",
                   Field{[](const ExperimentConfig& c) { return format_double(c.hmc.step_size); },
                         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.hmc.step_size = to_double(k, v);
                         }});
    t.emplace_back("hmc.leapfrog_steps",
                   Field{[](const ExperimentConfig& c) { return std::to_string(c.hmc.leapfrog_steps); },
                         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.hmc.leapfrog_steps = static_cast<int>(to_size(k, v));
                         }});
    t.emplace_back("chains", size_field(&ExperimentConfig::chains));
    t.emplace_back("burn_in", size_field(&ExperimentConfig::burn_in));
    t.emplace_back("steps", size_field(&ExperimentConfig::steps));
    t.emplace_back("init_sigma", double_field(&ExperimentConfig::init_sigma));
    t.emplace_back("seed", size_field(&ExperimentConfig::seed));
    t.emplace_back("threads", size_field(&ExperimentConfig::threads));
    t.emplace_back("out_dir",
                   Field{[](const ExperimentConfig& c) { return c.out_dir.string(); },
                         [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }});
    t.emplace_back("checkpoint",
                   Field{[](const ExperimentConfig& c) { return c.checkpoint.string(); },
                         [](ExperimentConfig& c, const std::string&, const std::string& v) { c.checkpoint = v; }});
    t.emplace_back("reference.samples", size_field(&ExperimentConfig::reference_samples));
    t.emplace_back("reference.chains", size_field(&ExperimentConfig::reference_chains));
    t.emplace_back("reference.burn_in", size_field(&ExperimentConfig::reference_burn_in));
    t.emplace_back("reference.steps", size_field(&ExperimentConfig::reference_steps));

    t.emplace_back("train.B", train_size(&TrainConfig::max_b));
    t.emplace_back("train.M", train_size(&TrainConfig::max_m));
    t.emplace_back("train.lambda", train_double(&TrainConfig::lambda));
    t.emplace_back("train.gamma", train_double(&TrainConfig::gamma));
    t.emplace_back("train.pairwise",
                   Field{[](const ExperimentConfig& c) { return std::string(c.train.pairwise ? "true" : "false"); },
                         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.train.pairwise = to_bool(k, v);
                         }});
    t.emplace_back("train.learning_rate", train_double(&TrainConfig::learning_rate));
    t.emplace_back("train.adam_beta1", train_double(&TrainConfig::adam_beta1));
    t.emplace_back("train.adam_beta2", train_double(&TrainConfig::adam_beta2));
    t.emplace_back("train.batch_size", train_size(&TrainConfig::batch_size));
    t.emplace_back("train.iterations", train_size(&TrainConfig::iterations));
    t.emplace_back("train.critic_steps", train_size(&TrainConfig::critic_steps));
    t.emplace_back("train.lipschitz_mode",
                   Field{[](const ExperimentConfig& c) { return std::string(lipschitz_mode_name(c.train.lipschitz)); },
                         [](ExperimentConfig& c, const std::string&, const std::string& v) {
                           c.train.lipschitz = parse_lipschitz_mode(v);
                         }});
    t.emplace_back("train.penalty_weight", train_double(&TrainConfig::penalty_weight));
    t.emplace_back("train.penalty_delta", train_double(&TrainConfig::penalty_delta));
    t.emplace_back("train.clip_value", train_double(&TrainConfig::clip_value));
    t.emplace_back("train.buffer_capacity", train_size(&TrainConfig::buffer_capacity));
    t.emplace_back("train.refresh_interval", train_size(&TrainConfig::bootstrap_refresh_interval));
    t.emplace_back("train.bootstrap_chains", train_size(&TrainConfig::bootstrap_chains));
    t.emplace_back("train.bootstrap_initial_burn_in", train_size(&TrainConfig::bootstrap_initial_burn_in));
    t.emplace_back("train.bootstrap_burn_in", train_size(&TrainConfig::bootstrap_burn_in));
    t.emplace_back("train.bootstrap_thin", train_size(&TrainConfig::bootstrap_thin));
    t.emplace_back("train.init_sigma", train_double(&TrainConfig::init_sigma));
    t.emplace_back("train.eval_interval", train_size(&TrainConfig::eval_interval));
    t.emplace_back("train.eval_chains", train_size(&TrainConfig::eval_chains));
    t.emplace_back("train.eval_burn_in", train_size(&TrainConfig::eval_burn_in));
    t.emplace_back("train.eval_steps", train_size(&TrainConfig::eval_steps));
    t.emplace_back("train.checkpoint_interval", train_size(&TrainConfig::checkpoint_interval));
    t.emplace_back("nice.v_dim",
                   Field{[](const ExperimentConfig& c) { return std::to_string(c.train.nice.v_dim); },
                         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.train.nice.v_dim = to_size(k, v);
                         }});
    t.emplace_back("nice.pattern", Field{[](const ExperimentConfig& c) { return c.train.nice.pattern; },
                                         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                                           if (v.empty() || v.find_first_not_of("XV") != std::string::npos) {
                                             throw ConfigError(k + ": expected a string of X and V, got '" + v + "'");
                                           }
                                           c.train.nice.pattern = v;
                                         }});
    t.emplace_back("nice.hidden",
                   Field{[](const ExperimentConfig& c) { return from_layer_widths(c.train.nice.hidden); },
                         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.train.nice.hidden = to_layer_widths(k, v);
                         }});
    t.emplace_back("nice.activation",
                   Field{[](const ExperimentConfig& c) { return std::string(activation_name(c.train.nice.activation)); },
                         [](ExperimentConfig& c, const std::string&, const std::string& v) {
                           c.train.nice.activation = parse_activation(v);
                         }});
    t.emplace_back("critic.hidden",
                   Field{[](const ExperimentConfig& c) { return from_widths(c.train.discriminator_hidden); },
                         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.train.discriminator_hidden = to_widths(k, v);
                         }});
    return t;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [k, f] : fields()) {
    if (k == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

const std::set<std::string> kAnalytic{"ring", "mog2", "mog6", "ring5"};
const std::set<std::string> kDatasets{"german", "heart", "australian"};

}  // namespace

bool ExperimentConfig::is_blr() const { return kDatasets.count(target) > 0; }

void ExperimentConfig::validate() const {
  if (!kAnalytic.count(target) && !kDatasets.count(target)) {
    throw ConfigError("target: unknown target '" + target +
                      "' (expected ring, mog2, mog6, ring5, german, heart or australian)");
  }
  if (is_blr()) {
    if (data_path.empty()) throw ConfigError("target " + target + " needs data_path");
    if (!std::filesystem::exists(data_path)) {
      throw ConfigError("data_path: file '" + data_path.string() + "' does not exist");
    }
  }
  if (!checkpoint.empty() && !std::filesystem::exists(checkpoint)) {
    throw ConfigError("checkpoint: file '" + checkpoint.string() + "' does not exist");
  }
  if (!(prior_variance > 0.0)) throw ConfigError("prior_variance must be positive");
  if (!(hmc.step_size > 0.0) || hmc.leapfrog_steps < 1) {
    throw ConfigError("hmc.step_size must be positive and hmc.leapfrog_steps at least 1");
  }
  if (chains == 0) throw ConfigError("chains must be at least 1");
  if (!(init_sigma > 0.0)) throw ConfigError("init_sigma must be positive");
  if (threads == 0) throw ConfigError("threads must be at least 1");
  if (train.nice.hidden.size() != train.nice.pattern.size()) {
    throw ConfigError("nice.hidden lists " + std::to_string(train.nice.hidden.size()) +
                      " layers but nice.pattern has " + std::to_string(train.nice.pattern.size()));
  }
  if (train.nice.v_dim == 0) throw ConfigError("nice.v_dim must be positive");
  train.validate();
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  field(key).set(config, key, value);
}

std::string get_config_value(const ExperimentConfig& config, const std::string& key) {
  return field(key).get(config);
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key + "' repeated");
    }
    try {
      set_config_value(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  try {
    return parse_config(read_file(path), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string emit_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [key, f] : fields()) out += key + " = " + f.get(config) + "\n";
  return out;
}

std::filesystem::path preset_directory() {
  if (const char* env = std::getenv("ANICEMC_PRESET_DIR"); env && *env) return env;
  return ANICEMC_PRESET_DIR;
}

ExperimentConfig load_preset(const std::string& name) {
  const std::filesystem::path direct(name);
  if (direct.has_extension() || direct.has_parent_path()) return load_config_file(direct);
  const auto path = preset_directory() / (name + ".conf");
  if (!std::filesystem::exists(path)) {
    throw ConfigError("unknown preset '" + name + "' (looked in " + preset_directory().string() + ")");
  }
  return load_config_file(path);
}

}  // namespace anicemc::cli
