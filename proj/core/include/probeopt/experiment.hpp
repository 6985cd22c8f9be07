#ifndef PROBEOPT_EXPERIMENT_HPP
#define PROBEOPT_EXPERIMENT_HPP

#include "probeopt/config.hpp"
#include "probeopt/metrics.hpp"

namespace probeopt {

/// Execute the configured pipeline and write the metrics file to cfg.output.
/// Runs are deterministic: the same config produces a byte-identical file.
/// Algorithmic failures (region-unreachable, budget-exhausted) do not throw;
/// they are encoded in summary.status so the metrics trail survives.
RunMetrics run_experiment(const ExperimentConfig& cfg);

/// Fixed exit-code mapping shared by the CLI:
/// ok = 0, config-invalid = 2, region-unreachable = 3, budget-exhausted = 4,
/// parse-error = 5.
int exit_code_for_status(std::string_view status);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigInvalid = 2;
inline constexpr int kExitRegionUnreachable = 3;
inline constexpr int kExitBudgetExhausted = 4;
inline constexpr int kExitParseError = 5;

/// Seed offsets the tal pipeline uses to derive its oracle members from the
/// run seed. Data scenarios sit at seed + 0 .. seed + count - 1.
inline constexpr std::uint64_t kTalTrainSeedOffset = 1000;
inline constexpr std::uint64_t kTalValSeedOffset = 2000;
inline constexpr std::uint64_t kTalApiSeedOffset = 3000;

}  // namespace probeopt

#endif  // PROBEOPT_EXPERIMENT_HPP
