#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracfk/estimators.hpp"
#include "fracfk/paths.hpp"
#include "fracfk/potentials.hpp"

namespace fracfk {

enum class Command { paths, energy, density, dfa, analytic, reproduce_tables };

std::string to_string(Command command);
Command parse_command(const std::string& name);

/// Raw key/value pairs before typing; keys use the canonical underscore form.
using KeyValues = std::map<std::string, std::string>;

struct KeyInfo {
  std::string key;
  std::string help;
  std::vector<Command> commands;
};

/// Every recognised configuration key and the subcommands that read it.
const std::vector<KeyInfo>& config_keys();

/// Flag spelling of a key: `n_rep` -> `--n-rep`.
std::string flag_name(const std::string& key);

/// `key = value` lines; blank lines and `#` comments ignored.
KeyValues parse_config_text(std::istream& in, const std::string& origin);
KeyValues read_config_file(const std::string& path);

struct PotentialConfig {
  std::string kind = "free";  // free | harmonic | power | delta | constant
  double q2 = 0.5;
  double gamma = 2.0;
  double g = 1.0;  // well strength; the bound state has coupling g / 2
  double width = 0.01;
  BumpShape shape = BumpShape::top_hat;
  double value = 0.0;

  PotentialSpec build() const;
};

struct TrialConfig {
  std::string kind = "none";  // none | gaussian | constant
  double c = 0.5;
  double e0 = 0.5;

  std::optional<TrialFunction> build() const;
};

struct RunConfig {
  Command command = Command::energy;
  FractionalIndices indices;
  std::uint64_t n = 100;
  double t = 10.0;
  int d = 1;
  double diffusion = 0.5;
  std::vector<double> x0{0.0};
  JumpScaling jump_scaling = JumpScaling::per_event;
  BrownianGenerator brownian = BrownianGenerator::lattice;
  PotentialConfig potential;
  TrialConfig trial;
  std::size_t n_rep = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  MergeMode merge = MergeMode::sequential;
  std::size_t checkpoints = 8;
  std::optional<std::pair<double, double>> window;
  double lo = -10.0;
  double hi = 10.0;
  int bins = 200;
  std::size_t grid = 16384;
  std::string formula;
  unsigned level = 0;
  double hbar = 1.0;
  std::pair<double, double> beta_args{1.0, 1.0};
  std::string input;
  std::string out;
  std::string amplitude_out;
  std::string curve_out;
  std::string outdir = "tables";
  std::string scale = "full";

  WalkConfig walk() const;
  ExecutionPolicy policy() const { return {threads, merge}; }
  std::pair<double, double> energy_window() const;
  /// Throws ConfigError naming the first offending key.
  void validate() const;
};

/// Defaults, then the config file, then flags; the result is validated.
RunConfig resolve_config(Command command, const KeyValues& file, const KeyValues& flags);

/// Settings read by the command, as a single-line JSON object in key-table order.
std::string config_json(const RunConfig& config);

}  // namespace fracfk
