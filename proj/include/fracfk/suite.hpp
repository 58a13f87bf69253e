#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fracfk {

enum class SuiteScale { full, quick };

struct SuiteOptions {
  SuiteScale scale = SuiteScale::full;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string scratch_dir;  // determinism check writes here; temp dir when empty
  std::vector<int> only;    // criterion ids to run; all when empty
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string measured;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

/// One line of the reproduced tables: a reference value, the closed-form
/// value at the simulated parameters, and a fresh estimate.
struct TableRow {
  std::string system;
  std::string method;
  double alpha = 2.0;
  double beta = 1.0;
  std::optional<double> reference;
  std::optional<double> analytic;
  std::optional<double> estimate;
  std::optional<double> stderr;
  std::string tolerance;
  bool passed = false;
  std::string note;
};

struct SuiteReport {
  std::vector<CriterionResult> criteria;
  std::vector<TableRow> rows;
};

/// Runs the fixed experiment suite. `on_result` fires after each criterion.
SuiteReport run_suite(const SuiteOptions& options,
                      const std::function<void(const CriterionResult&)>& on_result = {});

/// Well strength g (potential convention, coupling g/2) whose delta-well
/// eigenvalue equals `energy` at the given alpha and D.
double calibrated_well_strength(double energy, double alpha, double diffusion);

}  // namespace fracfk
