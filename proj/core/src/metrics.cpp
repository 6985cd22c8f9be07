#include "probeopt/metrics.hpp"

#include <fstream>

#include "json.hpp"

namespace probeopt {

using nlohmann::json;

namespace {

json record_to_json(const IterationRecord& r) {
  json j;
  j["type"] = "record";
  j["iteration"] = r.iteration;
  j["phase"] = r.phase;
  j["radius"] = r.radius;
  j["verdict"] = std::string(to_string(r.verdict));
  if (r.loss) {
    j["loss"] = *r.loss;
  } else {
    j["loss"] = nullptr;
  }
  j["queries"] = r.cumulative_queries;
  return j;
}

json summary_to_json(const RunSummary& s) {
  json j;
  j["type"] = "summary";
  j["status"] = s.status;
  j["pipeline"] = s.pipeline;
  j["seed"] = s.seed;
  j["final_loss"] = s.final_loss ? json(*s.final_loss) : json(nullptr);
  j["final_boundary_distance"] =
      s.final_boundary_distance ? json(*s.final_boundary_distance) : json(nullptr);
  j["final_verdict"] = std::string(to_string(s.final_verdict));
  j["success"] = s.success;
  j["total_queries"] = s.total_queries;
  j["queries_by_phase"] = s.queries_by_phase;
  j["oscillation_warning"] = s.oscillation_warning;
  return j;
}

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

template <typename T>
T field(const json& j, const char* key, const std::string& path, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) fail(path, line, std::string("missing field \"") + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(path, line, std::string("field \"") + key + "\" has the wrong type");
  }
}

std::optional<double> nullable_double(const json& j, const char* key, const std::string& path,
                                      std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) fail(path, line, std::string("missing field \"") + key + "\"");
  if (it->is_null()) return std::nullopt;
  if (!it->is_number()) fail(path, line, std::string("field \"") + key + "\" must be a number or null");
  return it->get<double>();
}

}  // namespace

void write_metrics(const RunMetrics& metrics, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open metrics file for writing: " + path);
  json meta;
  meta["type"] = "meta";
  meta["schema"] = "probeopt-metrics";
  meta["schema_version"] = 1;
  meta["config"] = json::parse(metrics.config_json.empty() ? "null" : metrics.config_json);
  out << meta.dump() << "\n";
  for (const auto& r : metrics.records) out << record_to_json(r).dump() << "\n";
  out << summary_to_json(metrics.summary).dump() << "\n";
  if (!out) throw Error("failed writing metrics file: " + path);
}

RunMetrics read_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open metrics file");
  RunMetrics metrics;
  bool saw_meta = false;
  bool saw_summary = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(path, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail(path, lineno, "line is not a JSON object");
    std::string type = field<std::string>(j, "type", path, lineno);
    if (type == "meta") {
      saw_meta = true;
      if (j.contains("config") && !j.at("config").is_null()) {
        metrics.config_json = j.at("config").dump();
      }
    } else if (type == "record") {
      if (saw_summary) fail(path, lineno, "record after summary line");
      IterationRecord r;
      r.iteration = field<std::int64_t>(j, "iteration", path, lineno);
      r.phase = field<std::string>(j, "phase", path, lineno);
      r.radius = field<double>(j, "radius", path, lineno);
      try {
        r.verdict = verdict_from_string(field<std::string>(j, "verdict", path, lineno));
      } catch (const ParseError&) {
        fail(path, lineno, "unknown verdict value");
      }
      r.loss = nullable_double(j, "loss", path, lineno);
      r.cumulative_queries = field<std::uint64_t>(j, "queries", path, lineno);
      metrics.records.push_back(std::move(r));
    } else if (type == "summary") {
      if (saw_summary) fail(path, lineno, "duplicate summary line");
      saw_summary = true;
      RunSummary& s = metrics.summary;
      s.status = field<std::string>(j, "status", path, lineno);
      s.pipeline = field<std::string>(j, "pipeline", path, lineno);
      s.seed = field<std::uint64_t>(j, "seed", path, lineno);
      s.final_loss = nullable_double(j, "final_loss", path, lineno);
      s.final_boundary_distance = nullable_double(j, "final_boundary_distance", path, lineno);
      try {
        s.final_verdict = verdict_from_string(field<std::string>(j, "final_verdict", path, lineno));
      } catch (const ParseError&) {
        fail(path, lineno, "unknown verdict value");
      }
      s.success = field<bool>(j, "success", path, lineno);
      s.total_queries = field<std::uint64_t>(j, "total_queries", path, lineno);
      s.queries_by_phase =
          field<std::map<std::string, std::uint64_t>>(j, "queries_by_phase", path, lineno);
      s.oscillation_warning = field<bool>(j, "oscillation_warning", path, lineno);
    } else {
      fail(path, lineno, "unknown line type \"" + type + "\"");
    }
  }
  if (!saw_meta) throw ParseError(path + ":1: missing meta line");
  if (!saw_summary) throw ParseError(path + ": missing summary line");
  return metrics;
}

}  // namespace probeopt
