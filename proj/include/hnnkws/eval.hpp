#pragma once

// ROC sweeps, complexity tables and operating-point comparisons.
// False alarms are normalized by the duration of negative utterances only.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hnnkws/catalog.hpp"
#include "hnnkws/decoder.hpp"

namespace hnnkws {

struct ScoredUtterance {
  std::string id;
  bool is_positive = false;
  double duration_seconds = 0.0;
  double confidence = 0.0;
};

struct RocPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double fa_per_hour = 0.0;
  bool operator==(const RocPoint&) const = default;
};

// 101 evenly spaced values over [0, 1] plus every observed confidence, sorted, unique.
std::vector<double> default_thresholds(std::span<const ScoredUtterance> scored);

// One point per threshold, sorted by threshold; wake <=> confidence >= threshold.
// Throws ConfigError without positives or without negative duration.
std::vector<RocPoint> sweep_roc(std::span<const ScoredUtterance> scored,
                                std::span<const double> thresholds);

struct ComplexityRow {
  std::string model;
  std::optional<bool> all_bn;      // set for hierarchical models
  std::optional<bool> all_output;  // set for hierarchical models
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
  std::string paper_reference;
};

// MACs / parameters executed by one forward pass of `model`.
std::uint64_t model_macs(const KwsModel& model, OutputMode outputs);
std::uint64_t model_params(const KwsModel& model, OutputMode outputs);

// Four rows (all_bn x all_output, TT/FT/TF/FF) per hierarchical entry, one otherwise.
std::vector<ComplexityRow> complexity_report(const Catalog& catalog);

struct NamedRoc {
  std::string name;
  std::vector<RocPoint> points;
};

struct SummaryRow {
  double fa_point = 0.0;
  std::string model;
  std::optional<double> recall;  // empty when the FA point is outside the ROC range
  bool best = false;
};

// Linear interpolation of recall at a given FA rate. An exact FA match uses the
// highest recall measured there; otherwise the bracketing points are the best
// recall at the largest FA below and the lowest recall at the smallest FA above.
std::optional<double> recall_at_fa(std::span<const RocPoint> roc, double fa);

// Rows ordered by FA point, then by model name; `best` marks the highest recall
// per point, ties going to the first name.
std::vector<SummaryRow> compare_models(std::span<const NamedRoc> rocs,
                                       std::span<const double> fa_points);

// CSV writers. Every file starts with a "# " comment line echoing `config`,
// followed by the header row.
void write_roc_csv(std::ostream& out, std::span<const NamedRoc> rocs, const nlohmann::json& config);
void write_complexity_csv(std::ostream& out, std::span<const ComplexityRow> rows,
                          const nlohmann::json& config);
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows,
                       const nlohmann::json& config);

struct DecodedUtterance {
  std::string id;
  Decision decision;
};

void write_decisions_csv(std::ostream& out, std::span<const DecodedUtterance> rows,
                         const nlohmann::json& config);

// Shortest round-trip text of a double, as used in every CSV.
std::string format_double(double value);

}  // namespace hnnkws
