#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "config_json.hpp"
#include "fracfk/analytics.hpp"
#include "fracfk/cli.hpp"
#include "fracfk/errors.hpp"
#include "fracfk/estimators.hpp"
#include "fracfk/fractal.hpp"
#include "fracfk/paths.hpp"
#include "fracfk/sampling.hpp"
#include "fracfk/suite.hpp"

namespace fracfk {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void close_checked(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path);
}

std::vector<std::string> provenance(const RunConfig& c) { return {"config: " + config_json(c)}; }

/// JSON goes to `out` when set (with a summary line), else compact to stdout.
void emit_json(const RunConfig& c, const json& doc, const std::string& summary, std::ostream& log) {
  if (c.out.empty()) {
    log << doc.dump() << '\n';
    return;
  }
  auto file = open_out(c.out);
  file << doc.dump(2) << '\n';
  close_checked(file, c.out);
  log << summary << " -> " << c.out << '\n';
}

void run_paths(const RunConfig& c, std::ostream& log) {
  RngStream rng(c.seed, 0);
  const auto traj = generate_walk(c.walk(), rng);
  std::ostringstream body;
  write_trajectory_csv(body, traj, provenance(c));
  const std::string summary = "paths: " + std::to_string(traj.size()) + " events over t=" +
                              std::to_string(traj.terminal_time());
  if (c.out.empty()) {
    log << body.str();
    return;
  }
  auto file = open_out(c.out);
  file << body.str();
  close_checked(file, c.out);
  log << summary << " -> " << c.out << '\n';
}

FunctionalRun weighted_run(const RunConfig& c, std::span<const double> checkpoints, bool endpoints) {
  RunOptions options;
  options.seed = c.seed;
  options.policy = c.policy();
  options.keep_endpoints = endpoints;
  const auto v = c.potential.build();
  if (const auto trial = c.trial.build()) {
    return run_gfk(c.walk(), v, *trial, checkpoints, c.n_rep, options);
  }
  return run_fk(c.walk(), v, checkpoints, c.n_rep, options);
}

void run_energy(const RunConfig& c, std::ostream& log) {
  const auto cps = geometric_checkpoints(c.t, c.checkpoints);
  const auto run = weighted_run(c, cps, false);
  const auto [a, b] = c.energy_window();
  const auto e = energy_from_decay(run.series, a, b);
  json doc;
  doc["method"] = to_string(e.method);
  doc["alpha"] = c.indices.alpha;
  doc["beta"] = c.indices.beta;
  doc["potential"] = c.potential.build().describe();
  doc["value"] = e.value;
  doc["stderr"] = e.stderr;
  doc["window"] = {e.t_min, e.t_max};
  doc["n_rep"] = c.n_rep;
  doc["seed"] = c.seed;
  doc["flagged"] = run.series.flagged;
  doc["trial_domain_failures"] = run.trial_domain_failures;
  doc["config"] = config_to_json(c);
  std::ostringstream summary;
  summary << "energy (" << to_string(e.method) << "): " << std::setprecision(6) << e.value
          << " +- " << std::setprecision(2) << e.stderr;
  emit_json(c, doc, summary.str(), log);
}

void write_histogram(const RunConfig& c, const DensityHistogram& h, const std::string& path,
                     const std::string& label, std::ostream* fallback) {
  auto comments = provenance(c);
  comments.push_back("quantity: " + label);
  if (path.empty()) {
    write_density_csv(*fallback, h, comments);
    return;
  }
  auto file = open_out(path);
  write_density_csv(file, h, comments);
  close_checked(file, path);
}

void run_density(const RunConfig& c, std::ostream& log) {
  const std::vector<double> cps{c.t};
  const auto run = weighted_run(c, cps, true);
  const auto points = to_weighted_points(run.endpoints);
  const auto est = density_estimate(points, uniform_edges(c.lo, c.hi, c.bins));
  write_histogram(c, est.density, c.out, "density (normalised square of the weighted endpoint histogram)",
                  &log);
  if (!c.amplitude_out.empty()) {
    write_histogram(c, est.amplitude, c.amplitude_out, "amplitude (weighted endpoint histogram)", nullptr);
  }
  if (!c.out.empty()) {
    log << "density: " << c.bins << " bins on [" << c.lo << ", " << c.hi << "], peak bin mass "
        << peak_bin_mass(est.density) << " -> " << c.out << '\n';
  }
}

void run_dfa(const RunConfig& c, std::ostream& log) {
  std::ifstream in(c.input);
  if (!in) throw IoError("cannot open trajectory " + c.input);
  const auto traj = read_trajectory_csv(in);
  const auto inc = grid_increments(traj, c.grid);
  const auto result = hurst_exponent(inc, default_windows(inc.size()));
  json doc;
  doc["H"] = result.hurst;
  doc["D"] = result.dimension;
  doc["r2"] = result.fit_r2;
  doc["windows"] = result.window_sizes;
  doc["F"] = std::vector<double>(result.fluctuations.begin(), result.fluctuations.end());
  doc["config"] = config_to_json(c);
  if (!c.curve_out.empty()) {
    auto file = open_out(c.curve_out);
    write_dfa_csv(file, result, provenance(c));
    close_checked(file, c.curve_out);
  }
  std::ostringstream summary;
  summary << "dfa: H=" << result.hurst << " D=" << result.dimension << " r2=" << result.fit_r2;
  emit_json(c, doc, summary.str(), log);
}

void run_analytic(const RunConfig& c, std::ostream& log) {
  json params;
  double value = 0.0;
  if (c.formula == "fho") {
    OscillatorParams<double> p;
    p.alpha = c.indices.alpha;
    p.gamma = c.potential.gamma;
    p.diffusion = c.diffusion;
    p.q = std::sqrt(c.potential.q2);
    p.level = c.level;
    p.hbar = c.hbar;
    value = fho_energy(p);
    params = {{"alpha", p.alpha}, {"gamma", p.gamma}, {"D", p.diffusion}, {"q2", c.potential.q2},
              {"level", p.level}, {"hbar", p.hbar}};
  } else if (c.formula == "delta") {
    DeltaParams<double> p;
    p.alpha = c.indices.alpha;
    p.g = c.potential.g / 2.0;
    p.diffusion = c.diffusion;
    p.hbar = c.hbar;
    value = delta_energy(p);
    params = {{"alpha", p.alpha}, {"g", c.potential.g}, {"coupling", p.g}, {"D", p.diffusion},
              {"hbar", p.hbar}};
  } else if (c.formula == "fractal-dim") {
    value = ctrw_fractal_dimension(c.indices.alpha, c.indices.beta);
    params = {{"alpha", c.indices.alpha}, {"beta", c.indices.beta}};
  } else {
    value = beta_function(c.beta_args.first, c.beta_args.second);
    params = {{"a", c.beta_args.first}, {"b", c.beta_args.second}};
  }
  json doc;
  doc["formula"] = c.formula;
  doc["params"] = params;
  doc["value"] = value;
  doc["config"] = config_to_json(c);
  std::ostringstream summary;
  summary << "analytic " << c.formula << ": " << std::setprecision(10) << value;
  emit_json(c, doc, summary.str(), log);
}

std::string cell(const std::optional<double>& v, int precision = 6) {
  if (!v) return "";
  std::ostringstream s;
  s << std::setprecision(precision) << *v;
  return s.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

int dispatch(const RunConfig& c, std::ostream& log) {
  switch (c.command) {
    case Command::paths: run_paths(c, log); break;
    case Command::energy: run_energy(c, log); break;
    case Command::density: run_density(c, log); break;
    case Command::dfa: run_dfa(c, log); break;
    case Command::analytic: run_analytic(c, log); break;
    case Command::reproduce_tables: {
      const int failed = reproduce_tables(c.outdir, c.scale, c.seed, c.threads);
      log << "reproduce-tables: " << failed << " failed row(s) -> " << c.outdir << '\n';
      break;
    }
  }
  return kExitOk;
}

int report_error(std::ostream& err, const std::string& what, int code) {
  err << "error: " << what << '\n';
  return code;
}

}  // namespace

int run(const RunConfig& config, std::ostream& log, std::ostream& err) {
  try {
    config.validate();
    return dispatch(config, log);
  } catch (const Error& e) {
    return report_error(err, e.what(), static_cast<int>(e.category()));
  } catch (const fs::filesystem_error& e) {
    return report_error(err, e.what(), kExitIo);
  } catch (const std::exception& e) {
    return report_error(err, e.what(), kExitNumerical);
  }
}

int run(const RunConfig& config) { return run(config, std::cout, std::cerr); }

int run(Command command, const std::string& config_file, const KeyValues& flags) {
  try {
    const KeyValues file = config_file.empty() ? KeyValues{} : read_config_file(config_file);
    return run(resolve_config(command, file, flags));
  } catch (const Error& e) {
    return report_error(std::cerr, e.what(), static_cast<int>(e.category()));
  }
}

int reproduce_tables(const std::string& outdir, const std::string& scale, std::uint64_t seed,
                     unsigned threads) {
  const fs::path dir(outdir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + outdir + ": " + ec.message());

  SuiteOptions options;
  options.scale = scale == "quick" ? SuiteScale::quick : SuiteScale::full;
  options.seed = seed;
  options.threads = threads;
  options.scratch_dir = (dir / "determinism").string();
  const auto report = run_suite(options);

  int failed = 0;
  const std::string csv_path = (dir / "report.csv").string();
  auto csv = open_out(csv_path);
  csv << "# scale=" << scale << " seed=" << options.seed << '\n';
  csv << "system,method,alpha,beta,reference,analytic,estimate,stderr,tolerance,pass,note\n";
  for (const auto& row : report.rows) {
    failed += row.passed ? 0 : 1;
    csv << csv_field(row.system) << ',' << csv_field(row.method) << ',' << row.alpha << ','
        << row.beta << ',' << cell(row.reference, 10) << ',' << cell(row.analytic, 10) << ','
        << cell(row.estimate, 10) << ',' << cell(row.stderr, 4) << ',' << csv_field(row.tolerance)
        << ',' << (row.passed ? "pass" : "FAIL") << ',' << csv_field(row.note) << '\n';
  }
  close_checked(csv, csv_path);

  const std::string md_path = (dir / "report.md").string();
  auto md = open_out(md_path);
  md << "# Reproduced tables\n\nScale: " << scale << ", seed " << options.seed << ".\n\n";
  md << "| system | method | alpha | beta | reference | closed form | estimate | stderr | tolerance | result | note |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& row : report.rows) {
    md << "| " << row.system << " | " << row.method << " | " << row.alpha << " | " << row.beta
       << " | " << cell(row.reference, 10) << " | " << cell(row.analytic, 10) << " | "
       << cell(row.estimate, 6) << " | " << cell(row.stderr, 2) << " | " << row.tolerance << " | "
       << (row.passed ? "pass" : "**FAIL**") << " | " << row.note << " |\n";
  }
  md << "\n## Acceptance checks\n\n| # | check | result | measured | seconds |\n|---|---|---|---|---|\n";
  for (const auto& c : report.criteria) {
    md << "| " << c.id << " | " << c.title << " | " << (c.passed ? "pass" : "**FAIL**") << " | "
       << c.measured << " | " << std::fixed << std::setprecision(1) << c.seconds
       << std::defaultfloat << " |\n";
  }
  close_checked(md, md_path);
  return failed;
}

}  // namespace fracfk
