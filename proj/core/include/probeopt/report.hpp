#ifndef PROBEOPT_REPORT_HPP
#define PROBEOPT_REPORT_HPP

#include <string>
#include <vector>

#include "probeopt/metrics.hpp"
#include "probeopt/oracles.hpp"

namespace probeopt {

// ---------------------------------------------------------------------------
// Run comparison

struct RunRow {
  std::string file;
  RunSummary summary;
};

struct SummaryTable {
  std::vector<RunRow> rows;
  std::optional<double> mean_final_loss;      ///< over rows with an observable loss
  std::optional<double> mean_final_distance;  ///< over rows with a distance
  double mean_total_queries = 0.0;
  double success_rate = 0.0;
};

/// Read one or more metrics files and aggregate them. Propagates ParseError
/// (with file and line) from any malformed input.
SummaryTable summarize(const std::vector<std::string>& metric_files);

/// Fixed-width text rendering of the table, one row per run plus aggregates.
std::string format_table(const SummaryTable& table);

// ---------------------------------------------------------------------------
// Candidate ranking

struct Candidate {
  std::string id;
  Vec embedding;
};

/// Load candidates from line-delimited JSON objects {"id": ..., "embedding":
/// [...]}. Throws ParseError naming file and line.
std::vector<Candidate> load_candidates(const std::string& path);

/// Sort candidates ascending by alignment loss against the scenario's text
/// and target embeddings. The sort is stable: equal losses keep input order.
std::vector<Candidate> rank_candidates(std::vector<Candidate> candidates,
                                       const ScenarioSpec& scenario);

/// Loss used by the ranking, exposed for reporting.
double candidate_loss(const Candidate& candidate, const ScenarioSpec& scenario);

}  // namespace probeopt

#endif  // PROBEOPT_REPORT_HPP
