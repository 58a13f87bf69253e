#pragma once

#include <iosfwd>
#include <string>

#include "fracfk/config.hpp"

namespace fracfk {

/// Exit codes by error category.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Runs one command, writes its artifacts and prints a one-line summary to
/// stdout. Errors are reported on stderr and mapped to their exit code.
int run(const RunConfig& config);
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

/// Resolves defaults < config file < flags, then runs.
int run(Command command, const std::string& config_file, const KeyValues& flags);

/// Writes report.md and report.csv under `outdir`; returns the number of
/// failed rows. Sub-run failures mark the row failed and do not abort.
int reproduce_tables(const std::string& outdir, const std::string& scale, std::uint64_t seed,
                     unsigned threads);

}  // namespace fracfk
