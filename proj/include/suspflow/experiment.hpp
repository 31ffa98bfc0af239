#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "suspflow/error.hpp"
#include "suspflow/parallel.hpp"

namespace suspflow::experiment {

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"transversality", "mixing",   "spectrum", "correlations",
                                              "norms",          "genericity", "branches"};
  return names;
}

/// Fully defaulted configuration tree: top-level scalars plus one object per
/// experiment section. Keys are addressed as "key" or "section.key".
class ExperimentConfig {
 public:
  ExperimentConfig();

  const json& tree() const noexcept { return tree_; }
  /// Assigns a JSON value with type checking only; call validate() afterwards.
  void set(const std::string& key, const json& value);
  /// Assigns from a literal as written in a config file (bare words are strings).
  void set_literal(const std::string& key, const std::string& literal);
  const json& get(const std::string& key) const;

  /// All semantic violations, each {"key", "message"}; empty when valid.
  std::vector<json> violations() const;
  /// Throws validation-error listing every violation.
  void validate() const;

  /// Canonical echo (no runtime-only keys) and its git-style blob SHA-1.
  json echo() const;
  std::string hash() const;

 private:
  json tree_;
};

/// Syntax and type checks only. Parse-error detail carries line and column.
ExperimentConfig parse_config_text(const std::string& text);

/// Parses, applies overrides as literals, then validates. Every syntax-free
/// problem (unknown keys, type errors, semantic violations) is reported at once.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::pair<std::string, std::string>>& overrides);

struct RunReport {
  json config;
  std::string config_hash;
  std::string experiment;
  ErrorCode status = ErrorCode::InvalidArgument;
  bool ok = false;
  json payload = json::object();  // {"summary": {...}, "records": [...]} or {"error": {...}}
  std::vector<std::string> caveats;
  double wall_time = 0.0;
  bool report_timing = false;
};

/// Runs the configured experiment. Resource and numerical failures inside the
/// modules are captured in the report; configuration errors throw.
RunReport run(const ExperimentConfig& config, const Exec& exec = {});

/// Process exit code: 0 ok, 1 parse/validation/argument, 2 resource, 3 numerical.
int exit_code(const RunReport& report);
int exit_code(ErrorCode code);

/// "json", "jsonl" or "csv"; anything else is invalid-argument. An empty
/// payload emits "[]" as JSON and nothing as CSV.
std::string emit(const RunReport& report, const std::string& format);

/// JSON text with floats at 17 significant digits and stable key order.
std::string dump_json(const json& value, int indent = -1);

/// Records as CSV: columns are the union of record keys in first-seen order,
/// nested objects flattened to dotted names.
std::string records_csv(const json& records);

/// Lowercase hex SHA-1 of "blob <len>\0<text>".
std::string git_blob_sha1(const std::string& text);

}  // namespace suspflow::experiment
