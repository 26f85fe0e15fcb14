#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advtrade/model.hpp"
#include "json.hpp"

namespace advtrade {

inline constexpr const char* kSchemaVersion = "1";
inline constexpr const char* kToolVersion = "advtrade 1.0.0";

struct SweepRow {
  double axis_value = 0.0;
  double sr_theory = 0.0;
  double ar_theory = 0.0;
  // Present iff the table was produced with empirical columns.
  std::optional<double> sr_empirical;
  std::optional<double> ar_empirical;
  std::optional<int> n_seeds;
  std::optional<double> stderr_sr;
  std::optional<double> stderr_ar;

  bool operator==(const SweepRow&) const = default;
};

struct Provenance {
  std::uint64_t master_seed = 0;
  std::optional<std::string> timestamp;  ///< null unless SOURCE_DATE_EPOCH is set
  std::string tool_version = kToolVersion;

  bool operator==(const Provenance&) const = default;
};

struct SweepTable {
  std::string schema_version = kSchemaVersion;
  std::string command;
  AsymptoticConfig config;
  std::string axis_name;
  std::vector<SweepRow> rows;
  Provenance provenance;
  /// Command-specific header fields (skipped points, sample sizes, ...).
  nlohmann::json extra = nlohmann::json::object();

  bool empirical() const;
  /// Throws InvalidArgument unless rows are strictly increasing in
  /// axis_value and empirical columns are all present or all absent.
  void check() const;
};

/// ISO-8601 UTC time from SOURCE_DATE_EPOCH, or nullopt when unset.
std::optional<std::string> reproducible_timestamp();

/// "# <json header>\n<column names>\n<rows>..." with 17 significant digits.
std::string to_csv(const SweepTable& table);
/// Several tables back to back.
std::string to_csv(const std::vector<SweepTable>& tables);
/// Parses one or more concatenated tables.
std::vector<SweepTable> parse_csv(std::string_view text);

nlohmann::json to_json(const SweepTable& table);
SweepTable table_from_json(const nlohmann::json& doc);
/// {"tables": [...]} document.
std::string to_json_document(const std::vector<SweepTable>& tables);
std::vector<SweepTable> parse_json_document(std::string_view text);

nlohmann::json config_to_json(const AsymptoticConfig& cfg);
AsymptoticConfig config_from_json(const nlohmann::json& j);

/// %.17g, round-trip exact.
std::string format_double(double x);

}  // namespace advtrade
