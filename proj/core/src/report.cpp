#include "probeopt/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "probeopt/sel.hpp"

namespace probeopt {

using nlohmann::json;

SummaryTable summarize(const std::vector<std::string>& metric_files) {
  if (metric_files.empty()) throw InvalidArgument("summarize: no metrics files given");
  SummaryTable table;
  double loss_sum = 0.0;
  std::size_t loss_n = 0;
  double dist_sum = 0.0;
  std::size_t dist_n = 0;
  double query_sum = 0.0;
  std::size_t successes = 0;
  for (const auto& file : metric_files) {
    RunMetrics m = read_metrics(file);
    if (m.summary.final_loss) {
      loss_sum += *m.summary.final_loss;
      ++loss_n;
    }
    if (m.summary.final_boundary_distance) {
      dist_sum += *m.summary.final_boundary_distance;
      ++dist_n;
    }
    query_sum += static_cast<double>(m.summary.total_queries);
    if (m.summary.success) ++successes;
    table.rows.push_back({file, std::move(m.summary)});
  }
  if (loss_n > 0) table.mean_final_loss = loss_sum / static_cast<double>(loss_n);
  if (dist_n > 0) table.mean_final_distance = dist_sum / static_cast<double>(dist_n);
  table.mean_total_queries = query_sum / static_cast<double>(table.rows.size());
  table.success_rate = static_cast<double>(successes) / static_cast<double>(table.rows.size());
  return table;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::setprecision(6) << *v;
  return os.str();
}

}  // namespace

std::string format_table(const SummaryTable& table) {
  std::ostringstream os;
  os << std::left << std::setw(32) << "file" << std::setw(12) << "pipeline" << std::setw(12)
     << "status" << std::setw(12) << "final_loss" << std::setw(12) << "distance" << std::setw(10)
     << "queries" << std::setw(8) << "success" << "\n";
  for (const auto& row : table.rows) {
    os << std::left << std::setw(32) << row.file << std::setw(12) << row.summary.pipeline
       << std::setw(12) << row.summary.status << std::setw(12) << fmt_opt(row.summary.final_loss)
       << std::setw(12) << fmt_opt(row.summary.final_boundary_distance) << std::setw(10)
       << row.summary.total_queries << std::setw(8) << (row.summary.success ? "yes" : "no")
       << "\n";
  }
  os << "runs: " << table.rows.size() << "  success_rate: " << std::setprecision(4)
     << table.success_rate << "  mean_final_loss: " << fmt_opt(table.mean_final_loss)
     << "  mean_distance: " << fmt_opt(table.mean_final_distance)
     << "  mean_queries: " << std::setprecision(10) << table.mean_total_queries << "\n";
  return os.str();
}

std::vector<Candidate> load_candidates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open candidates file");
  std::vector<Candidate> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("embedding")) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": candidate needs \"id\" and \"embedding\"");
    }
    Candidate c;
    try {
      c.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      c.embedding = j.at("embedding").get<Vec>();
    } catch (const json::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed candidate fields");
    }
    if (c.embedding.empty()) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": empty embedding");
    }
    out.push_back(std::move(c));
  }
  return out;
}

double candidate_loss(const Candidate& candidate, const ScenarioSpec& scenario) {
  return mma_loss(candidate.embedding, scenario.text_embedding,
                  scenario.target_image_embedding);
}

std::vector<Candidate> rank_candidates(std::vector<Candidate> candidates,
                                       const ScenarioSpec& scenario) {
  if (candidates.empty()) throw InvalidArgument("rank_candidates: empty candidate list");
  std::vector<double> losses;
  losses.reserve(candidates.size());
  for (const auto& c : candidates) losses.push_back(candidate_loss(c, scenario));
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
  std::vector<Candidate> ranked;
  ranked.reserve(candidates.size());
  for (std::size_t idx : order) ranked.push_back(std::move(candidates[idx]));
  return ranked;
}

}  // namespace probeopt
