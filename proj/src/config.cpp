#include "tigh/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include "tigh/csv.hpp"
#include "tigh/errors.hpp"

extern char** environ;

namespace tigh {

namespace {

struct SchemaEntry {
  const char* key;
  const char* value;
};

// Single source of truth for recognized keys and their defaults.
const SchemaEntry kSchema[] = {
    {"seed", "42"},
    {"threads", "1"},
    {"run.dir", "runs/default"},

    {"synth.n_train", "96"},
    {"synth.n_test", "24"},
    {"synth.n_aux", "160"},
    {"synth.n_species", "48"},
    {"synth.n_pa_species", "40"},
    {"synth.n_regions", "3"},
    {"synth.n_clusters", "8"},
    {"synth.cluster_radius_km", "1.5"},
    {"synth.years", "2019,2020,2021"},
    {"synth.pool_size", "10"},
    {"synth.pool_extra_po", "2"},
    {"synth.presence_prob", "0.85"},
    {"synth.aux_presence_prob", "0.8"},
    {"synth.missing_rate", "0.02"},
    {"synth.env_features", "8"},
    {"synth.image_size", "64"},
    {"synth.image_channels", "4"},

    {"prep.outlier_z", "6.0"},
    {"prep.clip_columns", "human_footprint"},

    {"graph.enabled", "1"},
    {"graph.d_max_km", "10.0"},
    {"graph.weight_constant", "6731"},
    {"graph.shortlist_n", "5"},
    {"graph.shortlist_l", "4"},
    {"graph.shortlist_a", "10"},
    {"graph.shortlist_m", "8"},

    {"temporal.embed_dim", "48"},
    {"temporal.familyA.shape", "4x19x12"},
    {"temporal.familyA.patch", "3x3"},
    {"temporal.familyA.window", "3x2"},
    {"temporal.familyB.shape", "6x4x21"},
    {"temporal.familyB.patch", "2x5"},
    {"temporal.familyB.window", "2x3"},
    {"temporal.depths", "2,6"},
    {"temporal.heads", "12,24"},

    {"image.size", "64"},
    {"image.channels", "4"},
    {"image.patch", "8"},
    {"image.window", "4x4"},
    {"image.depths", "2,2"},
    {"image.heads", "6,12"},
    {"image.tokens", "16"},

    {"fusion.width", "96"},
    {"tabular.hidden", "256"},
    {"tabular.tokens", "4"},
    {"gfv.tokens", "4"},

    {"hcam.enabled", "1"},
    {"hcam.heads_ca", "4"},
    {"hcam.heads_mhca", "4"},

    {"train.folds", "10"},
    {"train.lr", "0.001"},
    {"train.batch", "16"},
    {"train.max_epochs", "24"},
    {"train.patience", "5"},
    {"train.mixup_alpha", "0.4"},
    {"train.finetune_epochs", "3"},

    {"topk.mode", "union"},
    {"topk.k_min", "1"},
    {"topk.k_max", "100"},
    {"topk.theta_min", "0.10"},
    {"topk.theta_max", "0.50"},
    {"topk.theta_step", "0.01"},
};

std::string trim_ws(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  for (const auto& e : kSchema) c.kv_[e.key] = e.value;
  return c;
}

std::string RunConfig::env_name(const std::string& key) {
  std::string s = "TIGHNARI_";
  for (char c : key) s += (c == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

RunConfig RunConfig::load(const std::string& path) {
  RunConfig c = defaults();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string t = trim_ws(line);
      if (t.empty() || t[0] == '#') continue;
      auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
      c.set(trim_ws(t.substr(0, eq)), trim_ws(t.substr(eq + 1)));
    }
  }
  // Environment overrides win over the file. Unknown TIGHNARI_ variables are
  // rejected rather than silently ignored, with the same error a bad file key
  // would produce.
  std::map<std::string, std::string> by_env;
  for (const auto& e : kSchema) by_env[env_name(e.key)] = e.key;
  for (char** p = environ; *p; ++p) {
    std::string entry = *p;
    auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = entry.substr(0, eq);
    if (name.rfind("TIGHNARI_", 0) != 0) continue;
    auto it = by_env.find(name);
    if (it == by_env.end()) throw ConfigError("unknown environment override '" + name + "'");
    c.kv_[it->second] = entry.substr(eq + 1);
  }
  return c;
}

const std::string& RunConfig::str(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::num(const std::string& key) const {
  const std::string& v = str(key);
  try {
    return cell_to_double(v);
  } catch (const InputError&) {
    throw ConfigError("config key '" + key + "' is not a number: '" + v + "'");
  }
}

long long RunConfig::integer(const std::string& key) const {
  const std::string& v = str(key);
  try {
    return cell_to_int(v);
  } catch (const InputError&) {
    throw ConfigError("config key '" + key + "' is not an integer: '" + v + "'");
  }
}

bool RunConfig::flag(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("config key '" + key + "' is not a flag: '" + v + "'");
}

std::vector<int> RunConfig::dims(const std::string& key) const {
  const std::string& v = str(key);
  std::vector<int> out;
  std::string cur;
  for (char c : v + "x") {
    if (c == 'x') {
      try {
        out.push_back(static_cast<int>(cell_to_int(trim_ws(cur))));
      } catch (const InputError&) {
        throw ConfigError("config key '" + key + "' is not a dim list: '" + v + "'");
      }
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

std::pair<int, int> RunConfig::dims2(const std::string& key) const {
  auto d = dims(key);
  if (d.size() != 2) throw ConfigError("config key '" + key + "' must be RxC");
  return {d[0], d[1]};
}

std::vector<std::string> RunConfig::str_list(const std::string& key) const {
  const std::string& v = str(key);
  std::vector<std::string> out;
  std::string cur;
  for (char c : v + ",") {
    if (c == ',') {
      std::string t = trim_ws(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

std::vector<int> RunConfig::int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& s : str_list(key)) {
    try {
      out.push_back(static_cast<int>(cell_to_int(s)));
    } catch (const InputError&) {
      throw ConfigError("config key '" + key + "' is not an integer list");
    }
  }
  return out;
}

}  // namespace tigh
