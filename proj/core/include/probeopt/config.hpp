#ifndef PROBEOPT_CONFIG_HPP
#define PROBEOPT_CONFIG_HPP

#include <string>

#include "probeopt/sel.hpp"
#include "probeopt/spl.hpp"
#include "probeopt/tal.hpp"

namespace probeopt {

enum class Pipeline { SplOnly, SplSel, Tal, ProtocolB };

std::string_view to_string(Pipeline p);
Pipeline pipeline_from_string(std::string_view s);  // throws ConfigError

/// Which scenarios a run draws: family plus how many, seeded from the run
/// seed (scenario i uses seed + i).
struct ScenarioConfig {
  std::string family = "halfspace";
  int count = 1;
};

/// Ablation switches used by the comparison harness; both default off.
struct AblationConfig {
  bool skip_spl = false;            ///< start the semantic phase from the raw iterate
  bool skip_harmonization = false;  ///< update with the unprojected gradient
};

struct ExperimentConfig {
  int schema_version = 1;
  std::uint64_t seed = 0;
  std::size_t dimension = 16;
  std::size_t embedding_dim = 8;
  ScenarioConfig scenario;
  Pipeline pipeline = Pipeline::SplSel;
  std::string output = "metrics.jsonl";
  SplConfig spl;
  SelConfig sel;
  int sel_iters = 150;
  int sel_plateau_window = 10;
  double sel_plateau_tolerance = 1e-6;
  TalConfig tal;
  int tal_train_members = 4;
  int tal_val_members = 3;
  double success_loss_threshold = 0.2;
  AblationConfig ablations;

  void validate() const;  ///< throws ConfigError
};

/// Parse a JSON config file. Unknown keys, wrong types, a missing or
/// unsupported schema_version and failed validation all throw ConfigError.
ExperimentConfig load_config(const std::string& path);

/// Same, from in-memory text (used by tests and for stdin-style plumbing).
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");

/// Canonical JSON serialization of a config (sorted keys, round-trips through
/// load_config). Written into the metrics header so runs are self-describing.
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace probeopt

#endif  // PROBEOPT_CONFIG_HPP
