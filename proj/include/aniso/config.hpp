#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace aniso {

// Thrown for malformed or inconsistent configuration; carries the line
// number when the problem is anchored to one.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Flat key-value experiment description parsed from "key = value" lines
// ('#' starts a comment). Unknown keys are rejected. The canonical form
// (sorted explicit keys) feeds a stable 64-bit digest that identifies
// the run; every report embeds it.
struct ExperimentConfig {
  std::string experiment;  // envelope|exit|mean-exit|diag|ladder|nash|
                           // boxes|phi-check|simulate
  int dim = 1;
  std::string phi = "power:alpha=1,scale=1";
  std::string multiplier = "constant:1";
  double lambda = 1.0;
  std::string process = "z";        // z | x
  double eps = 1e-3;
  double eps_rel = 0.0;             // > 0: eps = eps_rel * phi^{-1}(t)
  double t = 1.0;
  double horizon = 0.0;             // 0: derived per experiment
  std::string small_jumps = "gaussian";  // gaussian | drop
  std::uint64_t n_paths = 1000;
  std::uint64_t seed = 1;
  std::vector<double> start;        // defaults to the origin
  double bin_width_rel = 0.25;      // histogram bin, in phi^{-1}(t) units
  double box_halfwidth_rel = 16.0;  // histogram half-width, same units
  std::vector<double> radii;        // exit: in phi^{-1}(t) units
  std::vector<double> t_list;       // diag
  double radius = 1.0;              // mean-exit: absolute
  double alpha_lower = 1.0;         // ladder
  double alpha_upper = 1.0;
  int workers = 0;                  // 0: hardware concurrency
  std::string out;
  std::string csv;                  // optional CSV dump of the table rows
  bool events = false;

  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_text(const std::string& text);

  std::string canonical() const;
  std::uint64_t digest() const;

 private:
  std::map<std::string, std::string> set_keys_;
  friend struct ConfigParserAccess;
};

}  // namespace aniso
