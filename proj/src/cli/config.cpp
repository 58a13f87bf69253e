#include "fracfk/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "config_json.hpp"
#include "fracfk/errors.hpp"

namespace fracfk {

namespace {

using enum Command;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw ConfigError("key '" + key + "': expected " + expected + ", got '" + value + "'");
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw ConfigError("key '" + key + "': " + why);
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || !std::isfinite(out)) bad_value(key, value, "a number");
  return out;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) bad_value(key, value, "a non-negative integer");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) bad_value(key, value, "a comma-separated list of numbers");
  return out;
}

std::string one_of(const std::string& key, const std::string& value,
                   std::initializer_list<const char*> choices) {
  std::string expected;
  for (const char* c : choices) {
    if (value == c) return value;
    expected += expected.empty() ? "" : "|";
    expected += c;
  }
  bad_value(key, value, expected);
}

bool uses(const RunConfig& c, std::initializer_list<Command> commands) {
  return std::find(commands.begin(), commands.end(), c.command) != commands.end();
}

void apply(RunConfig& c, const std::string& key, const std::string& v) {
  if (key == "alpha") c.indices.alpha = to_double(key, v);
  else if (key == "beta") c.indices.beta = to_double(key, v);
  else if (key == "n") c.n = to_unsigned(key, v);
  else if (key == "t") c.t = to_double(key, v);
  else if (key == "d") c.d = static_cast<int>(std::min<std::uint64_t>(to_unsigned(key, v), 1u << 20));
  else if (key == "D") c.diffusion = to_double(key, v);
  else if (key == "x0") c.x0 = to_list(key, v);
  else if (key == "jump_scaling") {
    c.jump_scaling = one_of(key, v, {"per-event", "base-step"}) == "per-event"
                         ? JumpScaling::per_event
                         : JumpScaling::base_step;
  } else if (key == "brownian") {
    c.brownian = one_of(key, v, {"lattice", "gaussian"}) == "lattice" ? BrownianGenerator::lattice
                                                                       : BrownianGenerator::gaussian;
  } else if (key == "potential") {
    c.potential.kind = one_of(key, v, {"free", "harmonic", "power", "delta", "constant"});
  } else if (key == "q2") c.potential.q2 = to_double(key, v);
  else if (key == "gamma") c.potential.gamma = to_double(key, v);
  else if (key == "g") c.potential.g = to_double(key, v);
  else if (key == "width") c.potential.width = to_double(key, v);
  else if (key == "shape") {
    c.potential.shape = one_of(key, v, {"top-hat", "gaussian"}) == "top-hat" ? BumpShape::top_hat
                                                                            : BumpShape::gaussian;
  } else if (key == "value") c.potential.value = to_double(key, v);
  else if (key == "trial") c.trial.kind = one_of(key, v, {"none", "gaussian", "constant"});
  else if (key == "c") c.trial.c = to_double(key, v);
  else if (key == "e0") c.trial.e0 = to_double(key, v);
  else if (key == "n_rep") c.n_rep = to_unsigned(key, v);
  else if (key == "seed") c.seed = to_unsigned(key, v);
  else if (key == "threads") c.threads = static_cast<unsigned>(std::min<std::uint64_t>(to_unsigned(key, v), 4096));
  else if (key == "merge") {
    c.merge = one_of(key, v, {"sequential", "unordered"}) == "sequential" ? MergeMode::sequential
                                                                         : MergeMode::unordered;
  } else if (key == "checkpoints") c.checkpoints = to_unsigned(key, v);
  else if (key == "window") {
    const auto w = to_list(key, v);
    if (w.size() != 2) bad_value(key, v, "t_min,t_max");
    c.window = std::make_pair(w[0], w[1]);
  } else if (key == "bins") c.bins = static_cast<int>(std::min<std::uint64_t>(to_unsigned(key, v), 1u << 24));
  else if (key == "lo") c.lo = to_double(key, v);
  else if (key == "hi") c.hi = to_double(key, v);
  else if (key == "grid") c.grid = to_unsigned(key, v);
  else if (key == "formula") c.formula = one_of(key, v, {"fho", "delta", "fractal-dim", "beta"});
  else if (key == "level") c.level = static_cast<unsigned>(std::min<std::uint64_t>(to_unsigned(key, v), 1u << 20));
  else if (key == "hbar") c.hbar = to_double(key, v);
  else if (key == "a") c.beta_args.first = to_double(key, v);
  else if (key == "b") c.beta_args.second = to_double(key, v);
  else if (key == "input") c.input = v;
  else if (key == "out") c.out = v;
  else if (key == "amplitude_out") c.amplitude_out = v;
  else if (key == "curve_out") c.curve_out = v;
  else if (key == "outdir") c.outdir = v;
  else if (key == "scale") c.scale = one_of(key, v, {"full", "quick"});
  else throw ConfigError("unknown key '" + key + "'");
}

void require_positive(const std::string& key, double value) {
  if (!(value > 0.0)) invalid(key, "must be positive");
}

}  // namespace

std::string to_string(Command command) {
  switch (command) {
    case paths: return "paths";
    case energy: return "energy";
    case density: return "density";
    case dfa: return "dfa";
    case analytic: return "analytic";
    case reproduce_tables: return "reproduce-tables";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  for (Command c : {paths, energy, density, dfa, analytic, reproduce_tables}) {
    if (to_string(c) == name) return c;
  }
  throw ConfigError("unknown command '" + name + "'");
}

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = [] {
    const std::vector<Command> w{paths, energy, density};
    const std::vector<Command> weighted{energy, density};
    const std::vector<Command> with_analytic{paths, energy, density, analytic};
    return std::vector<KeyInfo>{
        {"alpha", "space index in (0, 2]", with_analytic},
        {"beta", "time index in (0, 1]", with_analytic},
        {"n", "steps per unit time", w},
        {"t", "horizon", w},
        {"d", "dimension (d > 1 only for alpha=2, beta=1)", w},
        {"D", "diffusion constant", with_analytic},
        {"x0", "start point, comma separated", w},
        {"jump_scaling", "per-event | base-step", w},
        {"brownian", "generator for (2, 1): lattice | gaussian", w},
        {"potential", "free | harmonic | power | delta | constant", weighted},
        {"q2", "power-law strength: V = q2 |x|^gamma", {energy, density, analytic}},
        {"gamma", "power-law exponent", {energy, density, analytic}},
        {"g", "delta well strength: V = -(g/2) bump", {energy, density, analytic}},
        {"width", "delta well regularisation width", weighted},
        {"shape", "delta well bump: top-hat | gaussian", weighted},
        {"value", "constant potential value", weighted},
        {"trial", "importance-sampling trial: none | gaussian | constant", weighted},
        {"c", "gaussian trial exp(-c x^2)", weighted},
        {"e0", "trial energy", weighted},
        {"n_rep", "replica count", weighted},
        {"seed", "master seed", {paths, energy, density, reproduce_tables}},
        {"threads", "worker threads (0: FRACFK_THREADS, then hardware)",
         {energy, density, reproduce_tables}},
        {"merge", "sequential | unordered", weighted},
        {"checkpoints", "checkpoint count on the geometric grid", {energy}},
        {"window", "fit window t_min,t_max (default t/2,t)", {energy}},
        {"bins", "histogram bins", {density}},
        {"lo", "histogram lower edge", {density}},
        {"hi", "histogram upper edge", {density}},
        {"amplitude_out", "optional CSV of the weighted endpoint histogram", {density}},
        {"grid", "uniform grid points for DFA", {dfa}},
        {"input", "trajectory CSV", {dfa}},
        {"curve_out", "optional CSV of (n, F)", {dfa}},
        {"formula", "fho | delta | fractal-dim | beta", {analytic}},
        {"level", "oscillator level", {analytic}},
        {"hbar", "Planck constant", {analytic}},
        {"a", "first Beta argument", {analytic}},
        {"b", "second Beta argument", {analytic}},
        {"out", "output file (stdout when omitted for JSON)", {paths, energy, density, dfa, analytic}},
        {"outdir", "report directory", {reproduce_tables}},
        {"scale", "full | quick", {reproduce_tables}},
    };
  }();
  return keys;
}

std::string flag_name(const std::string& key) {
  std::string out = "--" + key;
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

KeyValues parse_config_text(std::istream& in, const std::string& origin) {
  KeyValues out;
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    const bool known = std::any_of(config_keys().begin(), config_keys().end(),
                                   [&](const KeyInfo& k) { return k.key == key; });
    if (!known) throw ConfigError(origin + ":" + std::to_string(number) + ": unknown key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  return parse_config_text(in, path);
}

PotentialSpec PotentialConfig::build() const {
  if (kind == "free") return PotentialSpec::free();
  if (kind == "harmonic") return PotentialSpec::harmonic(q2);
  if (kind == "power") return PotentialSpec::power_law(q2, gamma);
  if (kind == "delta") return PotentialSpec::delta_well(g, width, shape);
  if (kind == "constant") return PotentialSpec::constant(value);
  throw ConfigError("key 'potential': unknown kind '" + kind + "'");
}

std::optional<TrialFunction> TrialConfig::build() const {
  if (kind == "gaussian") return gaussian_trial(c, e0);
  if (kind == "constant") return constant_trial(e0);
  return std::nullopt;
}

WalkConfig RunConfig::walk() const {
  WalkConfig w;
  w.indices = indices;
  w.horizon = t;
  w.steps_per_unit = n;
  w.dimension = d;
  if (x0.size() == 1) {
    w.start = Eigen::VectorXd::Constant(d, x0[0]);
  } else {
    w.start = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  }
  w.diffusion = diffusion;
  w.jump_scaling = jump_scaling;
  w.brownian = brownian;
  return w;
}

std::pair<double, double> RunConfig::energy_window() const {
  return window.value_or(std::make_pair(t / 2.0, t));
}

void RunConfig::validate() const {
  const bool walks = uses(*this, {paths, energy, density});
  const bool weighted = uses(*this, {energy, density});
  if (walks || command == analytic) {
    if (!(indices.alpha > 0.0 && indices.alpha <= 2.0)) invalid("alpha", "must lie in (0, 2]");
    if (!(indices.beta > 0.0 && indices.beta <= 1.0)) invalid("beta", "must lie in (0, 1]");
    require_positive("D", diffusion);
  }
  if (walks) {
    if (n == 0) invalid("n", "must be at least 1");
    require_positive("t", t);
    if (static_cast<double>(n) * t > 1e10) invalid("n", "n * t exceeds 1e10 steps");
    if (d < 1) invalid("d", "must be at least 1");
    if (d > 1 && !indices.is_brownian()) invalid("d", "d > 1 requires alpha = 2 and beta = 1");
    if (x0.size() != 1 && x0.size() != static_cast<std::size_t>(d)) {
      invalid("x0", "needs 1 or d values");
    }
  }
  if (weighted) {
    const auto& p = potential;
    if (p.kind == "harmonic" || p.kind == "power") require_positive("q2", p.q2);
    if (p.kind == "power") require_positive("gamma", p.gamma);
    if (p.kind == "delta") {
      require_positive("g", p.g);
      require_positive("width", p.width);
      if (d != 1) invalid("potential", "delta well needs d = 1");
    }
    if (trial.kind == "gaussian") require_positive("c", trial.c);
    if (n_rep < 2) invalid("n_rep", "must be at least 2");
  }
  if (command == energy) {
    if (checkpoints < 3) invalid("checkpoints", "must be at least 3");
    if (window) {
      const auto [a, b] = *window;
      if (!(a >= 0.0 && a < b && b <= t)) invalid("window", "needs 0 <= t_min < t_max <= t");
    }
  }
  if (command == density) {
    if (bins < 1) invalid("bins", "must be at least 1");
    if (!(lo < hi)) invalid("hi", "must exceed lo");
  }
  if (command == dfa) {
    if (input.empty()) invalid("input", "a trajectory CSV is required");
    if (grid < 64) invalid("grid", "must be at least 64");
  }
  if (command == analytic) {
    if (formula.empty()) invalid("formula", "required (fho | delta | fractal-dim | beta)");
    if (formula == "fho") {
      require_positive("q2", potential.q2);
      require_positive("gamma", potential.gamma);
      require_positive("hbar", hbar);
    }
    if (formula == "delta") {
      if (!(indices.alpha > 1.0)) invalid("alpha", "delta well needs alpha in (1, 2]");
      require_positive("g", potential.g);
      require_positive("hbar", hbar);
    }
    if (formula == "beta") {
      require_positive("a", beta_args.first);
      require_positive("b", beta_args.second);
    }
  }
}

RunConfig resolve_config(Command command, const KeyValues& file, const KeyValues& flags) {
  RunConfig config;
  config.command = command;
  for (const auto* layer : {&file, &flags}) {
    for (const auto& [key, value] : *layer) apply(config, key, value);
  }
  config.validate();
  return config;
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json all;
  const char* scaling = c.jump_scaling == JumpScaling::per_event ? "per-event" : "base-step";
  const char* generator = c.brownian == BrownianGenerator::lattice ? "lattice" : "gaussian";
  const char* shape = c.potential.shape == BumpShape::top_hat ? "top-hat" : "gaussian";
  all["command"] = to_string(c.command);
  all["alpha"] = c.indices.alpha;
  all["beta"] = c.indices.beta;
  all["n"] = c.n;
  all["t"] = c.t;
  all["d"] = c.d;
  all["D"] = c.diffusion;
  all["x0"] = c.x0;
  all["jump_scaling"] = scaling;
  all["brownian"] = generator;
  all["potential"] = c.potential.kind;
  all["q2"] = c.potential.q2;
  all["gamma"] = c.potential.gamma;
  all["g"] = c.potential.g;
  all["width"] = c.potential.width;
  all["shape"] = shape;
  all["value"] = c.potential.value;
  all["trial"] = c.trial.kind;
  all["c"] = c.trial.c;
  all["e0"] = c.trial.e0;
  all["n_rep"] = c.n_rep;
  all["seed"] = c.seed;
  all["threads"] = c.threads;
  all["merge"] = c.merge == MergeMode::sequential ? "sequential" : "unordered";
  all["checkpoints"] = c.checkpoints;
  const auto [a, b] = c.energy_window();
  all["window"] = {a, b};
  all["bins"] = c.bins;
  all["lo"] = c.lo;
  all["hi"] = c.hi;
  all["grid"] = c.grid;
  all["formula"] = c.formula;
  all["level"] = c.level;
  all["hbar"] = c.hbar;
  all["a"] = c.beta_args.first;
  all["b"] = c.beta_args.second;
  all["scale"] = c.scale;

  nlohmann::ordered_json out;
  out["command"] = all["command"];
  // File locations are not settings; leaving them out keeps artifacts comparable across paths.
  const std::vector<std::string> locations{"input", "out", "amplitude_out", "curve_out", "outdir"};
  for (const auto& info : config_keys()) {
    if (std::find(locations.begin(), locations.end(), info.key) != locations.end()) continue;
    const auto& cmds = info.commands;
    if (std::find(cmds.begin(), cmds.end(), c.command) != cmds.end()) out[info.key] = all[info.key];
  }
  return out;
}

std::string config_json(const RunConfig& config) { return config_to_json(config).dump(); }

}  // namespace fracfk
