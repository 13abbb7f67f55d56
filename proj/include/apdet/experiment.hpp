#pragma once

// Batch experiments: a JSON configuration in, a CSV table out.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace apdet {

const char* version();

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"trace",       "ratio",   "uniform",     "theta",
                                                 "szego-block", "mathieu", "audit-weight"};
  return kinds;
}

struct Finding {
  enum class Severity { warning, error };
  Severity severity = Severity::warning;
  std::string message;
};

bool has_errors(const std::vector<Finding>& findings);

/// Schema and cross-field checks; never throws.
std::vector<Finding> validate(const std::string& kind, const nlohmann::json& config);

struct RunOptions {
  unsigned threads = 1;
  bool force = false;
};

struct ExperimentResult {
  std::string kind;
  std::vector<std::string> header;  // comment lines without the leading '#'
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  /// 0 on success, 2 when a numerical budget, cap or ladder failed; the rows
  /// computed before the failure are kept.
  int status = 0;
  std::string failure;
};

/// FNV-1a 64 of the canonical (sorted-key, compact) serialization.
std::uint64_t config_hash(const nlohmann::json& config);

/// Runs a validated configuration. Throws apdet::Error only for problems
/// found while interpreting the configuration.
ExperimentResult run_experiment(const std::string& kind, const nlohmann::json& config,
                                const RunOptions& opts = {});

/// '#' header block (with a timestamp) followed by the table.
void write_csv(const ExperimentResult& result, std::ostream& out, bool timestamp = true);

}  // namespace apdet
