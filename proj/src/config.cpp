#include "aniso/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

namespace aniso {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, int line) {
  std::size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": bad number '" + v +
                      "'");
  }
  if (pos != v.size())
    throw ConfigError("line " + std::to_string(line) + ": bad number '" + v +
                      "'");
  return x;
}

std::uint64_t to_u64(const std::string& v, int line) {
  std::size_t pos = 0;
  unsigned long long x;
  try {
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": bad integer '" + v +
                      "'");
  }
  if (pos != v.size())
    throw ConfigError("line " + std::to_string(line) + ": bad integer '" + v +
                      "'");
  return x;
}

std::vector<double> to_list(const std::string& v, int line) {
  std::vector<double> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) out.push_back(to_double(trim(cur), line));
  if (out.empty())
    throw ConfigError("line " + std::to_string(line) + ": empty list");
  return out;
}

}  // namespace

struct ConfigParserAccess {
  static void assign(ExperimentConfig& cfg, const std::string& key,
                     const std::string& value, int line) {
    if (key == "experiment") {
      cfg.experiment = value;
    } else if (key == "dim") {
      cfg.dim = static_cast<int>(to_u64(value, line));
    } else if (key == "phi") {
      cfg.phi = value;
    } else if (key == "multiplier") {
      cfg.multiplier = value;
    } else if (key == "lambda") {
      cfg.lambda = to_double(value, line);
    } else if (key == "process") {
      if (value != "z" && value != "x")
        throw ConfigError("line " + std::to_string(line) +
                          ": process must be z or x");
      cfg.process = value;
    } else if (key == "eps") {
      cfg.eps = to_double(value, line);
    } else if (key == "eps_rel") {
      cfg.eps_rel = to_double(value, line);
    } else if (key == "t") {
      cfg.t = to_double(value, line);
    } else if (key == "horizon") {
      cfg.horizon = to_double(value, line);
    } else if (key == "small_jumps") {
      if (value != "gaussian" && value != "drop")
        throw ConfigError("line " + std::to_string(line) +
                          ": small_jumps must be gaussian or drop");
      cfg.small_jumps = value;
    } else if (key == "n_paths") {
      cfg.n_paths = to_u64(value, line);
    } else if (key == "seed") {
      cfg.seed = to_u64(value, line);
    } else if (key == "start") {
      cfg.start = to_list(value, line);
    } else if (key == "bin_width_rel") {
      cfg.bin_width_rel = to_double(value, line);
    } else if (key == "box_halfwidth_rel") {
      cfg.box_halfwidth_rel = to_double(value, line);
    } else if (key == "radii") {
      cfg.radii = to_list(value, line);
    } else if (key == "t_list") {
      cfg.t_list = to_list(value, line);
    } else if (key == "radius") {
      cfg.radius = to_double(value, line);
    } else if (key == "alpha_lower") {
      cfg.alpha_lower = to_double(value, line);
    } else if (key == "alpha_upper") {
      cfg.alpha_upper = to_double(value, line);
    } else if (key == "workers") {
      cfg.workers = static_cast<int>(to_u64(value, line));
    } else if (key == "out") {
      cfg.out = value;
    } else if (key == "csv") {
      cfg.csv = value;
    } else if (key == "events") {
      if (value != "true" && value != "false")
        throw ConfigError("line " + std::to_string(line) +
                          ": events must be true or false");
      cfg.events = value == "true";
    } else {
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" +
                        key + "'");
    }
    cfg.set_keys_[key] = value;
  }
};

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string stripped =
        trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) +
                        ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(line) +
                        ": expected key = value");
    ConfigParserAccess::assign(cfg, key, value, line);
  }
  if (cfg.experiment.empty())
    throw ConfigError("config: missing required key 'experiment'");
  if (cfg.set_keys_.find("phi") == cfg.set_keys_.end() &&
      cfg.experiment != "ladder" && cfg.experiment != "boxes")
    throw ConfigError("config: missing required key 'phi'");
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  for (const auto& [k, v] : set_keys_) {
    if (k == "out" || k == "csv" || k == "workers") continue;  // not law-relevant
    out << k << "=" << v << "\n";
  }
  return out.str();
}

std::uint64_t ExperimentConfig::digest() const {
  // FNV-1a over the canonical text.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : canonical()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace aniso
