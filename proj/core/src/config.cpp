#include "probeopt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "probeopt/oracles.hpp"

namespace probeopt {

using nlohmann::json;

std::string_view to_string(Pipeline p) {
  switch (p) {
    case Pipeline::SplOnly: return "spl-only";
    case Pipeline::SplSel: return "spl+sel";
    case Pipeline::Tal: return "tal";
    case Pipeline::ProtocolB: return "protocol-b";
  }
  return "spl+sel";
}

Pipeline pipeline_from_string(std::string_view s) {
  if (s == "spl-only") return Pipeline::SplOnly;
  if (s == "spl+sel") return Pipeline::SplSel;
  if (s == "tal") return Pipeline::Tal;
  if (s == "protocol-b") return Pipeline::ProtocolB;
  throw ConfigError("unknown pipeline \"" + std::string(s) + "\"");
}

namespace {

ProbeWeighting weighting_from_string(std::string_view s) {
  if (s == "pass-only") return ProbeWeighting::PassOnly;
  if (s == "deny-only") return ProbeWeighting::DenyOnly;
  if (s == "pass-and-deny") return ProbeWeighting::PassAndDeny;
  throw ConfigError("unknown probe weighting \"" + std::string(s) + "\"");
}

/// Pull `key` from `obj` into `out` when present, with type checking.
template <typename T>
void take(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field \"" + key + "\" has the wrong type");
  }
}

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.contains(it.key())) {
      throw ConfigError(where + ": unknown field \"" + it.key() + "\"");
    }
  }
}

void parse_spl(const json& obj, SplConfig& cfg, const std::string& where) {
  reject_unknown(obj,
                 {"probes", "step_divisor", "r_init", "growth", "decay", "r_min", "r_max",
                  "max_stage1_iters", "max_stage2_adjusts", "weighting"},
                 where);
  take(obj, "probes", cfg.probes, where);
  take(obj, "step_divisor", cfg.step_divisor, where);
  take(obj, "r_init", cfg.r_init, where);
  take(obj, "growth", cfg.growth, where);
  take(obj, "decay", cfg.decay, where);
  take(obj, "r_min", cfg.r_min, where);
  take(obj, "r_max", cfg.r_max, where);
  take(obj, "max_stage1_iters", cfg.max_stage1_iters, where);
  take(obj, "max_stage2_adjusts", cfg.max_stage2_adjusts, where);
  if (obj.contains("weighting")) {
    cfg.weighting = weighting_from_string(obj.at("weighting").get<std::string>());
  }
}

void parse_sel(const json& obj, ExperimentConfig& out, const std::string& where) {
  SelConfig& cfg = out.sel;
  reject_unknown(obj,
                 {"c", "beta", "pairs_per_estimate", "max_resample", "tol_orth",
                  "momentum_decay", "iters", "plateau_window", "plateau_tolerance"},
                 where);
  take(obj, "c", cfg.c, where);
  take(obj, "beta", cfg.beta, where);
  take(obj, "pairs_per_estimate", cfg.pairs_per_estimate, where);
  take(obj, "max_resample", cfg.max_resample, where);
  take(obj, "tol_orth", cfg.tol_orth, where);
  take(obj, "momentum_decay", cfg.momentum_decay, where);
  take(obj, "iters", out.sel_iters, where);
  take(obj, "plateau_window", out.sel_plateau_window, where);
  take(obj, "plateau_tolerance", out.sel_plateau_tolerance, where);
}

void parse_tal(const json& obj, ExperimentConfig& cfg, const std::string& where) {
  reject_unknown(obj,
                 {"epsilon", "few_shot_budget", "val_window", "max_offline_iters",
                  "train_members", "val_members"},
                 where);
  take(obj, "epsilon", cfg.tal.epsilon, where);
  take(obj, "few_shot_budget", cfg.tal.few_shot_budget, where);
  take(obj, "val_window", cfg.tal.val_window, where);
  take(obj, "max_offline_iters", cfg.tal.max_offline_iters, where);
  take(obj, "train_members", cfg.tal_train_members, where);
  take(obj, "val_members", cfg.tal_val_members, where);
}

ExperimentConfig parse_json(const json& root, const std::string& origin) {
  if (!root.is_object()) throw ConfigError(origin + ": config root must be an object");
  reject_unknown(root,
                 {"schema_version", "seed", "dimension", "embedding_dim", "scenario", "pipeline",
                  "output", "spl", "sel", "tal", "success_loss_threshold", "ablations"},
                 origin);

  ExperimentConfig cfg;
  if (!root.contains("schema_version")) {
    throw ConfigError(origin + ": missing schema_version");
  }
  take(root, "schema_version", cfg.schema_version, origin);
  if (cfg.schema_version != 1) {
    throw ConfigError(origin + ": unsupported schema_version " +
                      std::to_string(cfg.schema_version));
  }
  take(root, "seed", cfg.seed, origin);
  take(root, "dimension", cfg.dimension, origin);
  take(root, "embedding_dim", cfg.embedding_dim, origin);
  take(root, "output", cfg.output, origin);
  take(root, "success_loss_threshold", cfg.success_loss_threshold, origin);
  if (root.contains("pipeline")) {
    cfg.pipeline = pipeline_from_string(root.at("pipeline").get<std::string>());
  }
  if (root.contains("scenario")) {
    const json& sc = root.at("scenario");
    reject_unknown(sc, {"family", "count"}, origin + ".scenario");
    take(sc, "family", cfg.scenario.family, origin);
    take(sc, "count", cfg.scenario.count, origin);
  }
  if (root.contains("spl")) parse_spl(root.at("spl"), cfg.spl, origin + ".spl");
  if (root.contains("sel")) parse_sel(root.at("sel"), cfg, origin + ".sel");
  if (root.contains("tal")) parse_tal(root.at("tal"), cfg, origin + ".tal");
  if (root.contains("ablations")) {
    const json& ab = root.at("ablations");
    reject_unknown(ab, {"skip_spl", "skip_harmonization"}, origin + ".ablations");
    take(ab, "skip_spl", cfg.ablations.skip_spl, origin);
    take(ab, "skip_harmonization", cfg.ablations.skip_harmonization, origin);
  }
  cfg.validate();
  return cfg;
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    spl.validate();
    sel.validate();
    tal.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (dimension == 0) throw ConfigError("dimension must be >= 1");
  if (embedding_dim == 0) throw ConfigError("embedding_dim must be >= 1");
  if (scenario.count < 1) throw ConfigError("scenario.count must be >= 1");
  if (scenario.family != kFamilyHalfspace && scenario.family != kFamilyBall &&
      scenario.family != kFamilyShifted) {
    throw ConfigError("unknown scenario family \"" + scenario.family + "\"");
  }
  if (sel_iters < 0) throw ConfigError("sel.iters must be >= 0");
  if (sel_plateau_window < 1) throw ConfigError("sel.plateau_window must be >= 1");
  if (!(sel_plateau_tolerance > 0.0)) throw ConfigError("sel.plateau_tolerance must be > 0");
  if (tal_train_members < 1) throw ConfigError("tal.train_members must be >= 1");
  if (tal_val_members < 1) throw ConfigError("tal.val_members must be >= 1");
  if (!(success_loss_threshold > 0.0)) throw ConfigError("success_loss_threshold must be > 0");
  if (output.empty()) throw ConfigError("output path must not be empty");
  if (pipeline == Pipeline::Tal && scenario.family != kFamilyShifted) {
    throw ConfigError("pipeline \"tal\" requires scenario.family \"shifted-family\"");
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": invalid JSON: " + e.what());
  }
  return parse_json(root, origin);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json root;
  root["schema_version"] = cfg.schema_version;
  root["seed"] = cfg.seed;
  root["dimension"] = cfg.dimension;
  root["embedding_dim"] = cfg.embedding_dim;
  root["scenario"] = {{"family", cfg.scenario.family}, {"count", cfg.scenario.count}};
  root["pipeline"] = std::string(to_string(cfg.pipeline));
  root["spl"] = {{"probes", cfg.spl.probes},
                 {"step_divisor", cfg.spl.step_divisor},
                 {"r_init", cfg.spl.r_init},
                 {"growth", cfg.spl.growth},
                 {"decay", cfg.spl.decay},
                 {"r_min", cfg.spl.r_min},
                 {"r_max", cfg.spl.r_max},
                 {"max_stage1_iters", cfg.spl.max_stage1_iters},
                 {"max_stage2_adjusts", cfg.spl.max_stage2_adjusts},
                 {"weighting", std::string(to_string(cfg.spl.weighting))}};
  root["sel"] = {{"c", cfg.sel.c},
                 {"beta", cfg.sel.beta},
                 {"pairs_per_estimate", cfg.sel.pairs_per_estimate},
                 {"max_resample", cfg.sel.max_resample},
                 {"tol_orth", cfg.sel.tol_orth},
                 {"momentum_decay", cfg.sel.momentum_decay},
                 {"iters", cfg.sel_iters},
                 {"plateau_window", cfg.sel_plateau_window},
                 {"plateau_tolerance", cfg.sel_plateau_tolerance}};
  root["tal"] = {{"epsilon", cfg.tal.epsilon},
                 {"few_shot_budget", cfg.tal.few_shot_budget},
                 {"val_window", cfg.tal.val_window},
                 {"max_offline_iters", cfg.tal.max_offline_iters},
                 {"train_members", cfg.tal_train_members},
                 {"val_members", cfg.tal_val_members}};
  root["success_loss_threshold"] = cfg.success_loss_threshold;
  root["ablations"] = {{"skip_spl", cfg.ablations.skip_spl},
                       {"skip_harmonization", cfg.ablations.skip_harmonization}};
  return root.dump();
}

}  // namespace probeopt
