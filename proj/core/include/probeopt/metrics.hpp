#ifndef PROBEOPT_METRICS_HPP
#define PROBEOPT_METRICS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "probeopt/core.hpp"

namespace probeopt {

/// One optimization step as recorded in the metrics file. Every record
/// carries all six fields; an unobservable loss is an explicit null in the
/// serialized form, never an omitted key.
struct IterationRecord {
  std::int64_t iteration = 0;
  std::string phase;
  double radius = 0.0;
  Verdict verdict = Verdict::Deny;
  std::optional<double> loss;
  std::uint64_t cumulative_queries = 0;
};

/// End-of-run summary. Wall time is kept in memory for console reporting but
/// never serialized: metrics files are byte-identical across reruns of the
/// same config.
struct RunSummary {
  std::string status = "ok";  ///< ok | region-unreachable | budget-exhausted
  std::string pipeline;
  std::uint64_t seed = 0;
  std::optional<double> final_loss;
  std::optional<double> final_boundary_distance;
  Verdict final_verdict = Verdict::Deny;
  bool success = false;
  std::uint64_t total_queries = 0;
  std::map<std::string, std::uint64_t> queries_by_phase;
  bool oscillation_warning = false;
  double wall_time_seconds = 0.0;  // not serialized
};

struct RunMetrics {
  std::string config_json;  ///< canonical config echo, written as a header line
  std::vector<IterationRecord> records;
  RunSummary summary;
};

/// Write metrics as line-delimited JSON: one meta line, one line per record,
/// one summary line.
void write_metrics(const RunMetrics& metrics, const std::string& path);

/// Parse a metrics file. Throws ParseError naming the file and 1-based line
/// of the first malformed record.
RunMetrics read_metrics(const std::string& path);

}  // namespace probeopt

#endif  // PROBEOPT_METRICS_HPP
