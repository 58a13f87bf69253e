#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <optional>

#include "fracfk/cli.hpp"
#include "fracfk/config.hpp"

int main(int argc, char** argv) {
  using namespace fracfk;
  CLI::App app{"Fractional Feynman-Kac path-integral Monte Carlo"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  const std::vector<Command> commands{Command::paths,    Command::energy,   Command::density,
                                      Command::dfa,      Command::analytic, Command::reproduce_tables};
  std::map<Command, std::map<std::string, std::optional<std::string>>> values;
  std::map<Command, std::string> config_files;
  std::map<Command, CLI::App*> subs;
  const std::map<Command, std::string> about{
      {Command::paths, "simulate one trajectory, write CSV"},
      {Command::energy, "FK or GFK ground-state energy, write JSON"},
      {Command::density, "endpoint amplitude and density histograms, write CSV"},
      {Command::dfa, "Hurst exponent and fractal dimension of a trajectory CSV"},
      {Command::analytic, "closed-form reference values"},
      {Command::reproduce_tables, "run the experiment suite, write report.csv and report.md"},
  };
  for (const Command command : commands) {
    auto* sub = app.add_subcommand(to_string(command), about.at(command));
    subs[command] = sub;
    sub->add_option("--config", config_files[command], "key = value config file (flags win)");
    for (const auto& info : config_keys()) {
      if (std::find(info.commands.begin(), info.commands.end(), command) == info.commands.end()) continue;
      sub->add_option(flag_name(info.key), values[command][info.key], info.help);
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (const Command command : commands) {
    if (!subs[command]->parsed()) continue;
    KeyValues flags;
    for (const auto& [key, value] : values[command]) {
      if (value) flags[key] = *value;
    }
    return run(command, config_files[command], flags);
  }
  return kExitConfig;
}
