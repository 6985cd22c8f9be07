#ifndef PROBEOPT_ORACLES_HPP
#define PROBEOPT_ORACLES_HPP

#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "probeopt/core.hpp"

namespace probeopt {

// ---------------------------------------------------------------------------
// Defense oracles
//
// A defense oracle partitions parameter space into a Pass region (the black
// box returns an output) and a Deny region (it blocks). The synthetic oracles
// here additionally expose an analytic distance to the verdict boundary,
// which the algorithms never see -- it is a test instrument only.

class DefenseOracle {
 public:
  virtual ~DefenseOracle() = default;

  virtual std::size_t dim() const = 0;

  /// Raw verdict, no query accounting. Algorithms must go through
  /// defense_verdict() so the ledger stays exact.
  virtual Verdict verdict(const Vec& psi) const = 0;

  /// Euclidean distance from psi to the verdict boundary. Only oracle types
  /// with a closed form override this; the default throws
  /// UnsupportedOperation.
  virtual double boundary_distance(const Vec& psi) const;
};

/// Pass iff w.psi + b >= 0. Boundary points count as Pass.
class HalfspaceDefense final : public DefenseOracle {
 public:
  HalfspaceDefense(Vec normal, double offset);

  std::size_t dim() const override { return normal_.size(); }
  Verdict verdict(const Vec& psi) const override;
  double boundary_distance(const Vec& psi) const override;

  const Vec& normal() const { return normal_; }
  double offset() const { return offset_; }

 private:
  Vec normal_;
  double offset_;
  double normal_norm_;
};

/// Pass iff ||psi - center|| <= radius.
class BallDefense final : public DefenseOracle {
 public:
  BallDefense(Vec center, double radius);

  std::size_t dim() const override { return center_.size(); }
  Verdict verdict(const Vec& psi) const override;
  double boundary_distance(const Vec& psi) const override;

  const Vec& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Vec center_;
  double radius_;
};

// ---------------------------------------------------------------------------
// Embedding surrogate

/// Linear stand-in for the image encoder applied to a returned output:
/// embed(psi) = normalize(M psi + bias). Throws DegenerateInput when
/// M psi + bias has zero norm.
class LinearEmbedder {
 public:
  LinearEmbedder() = default;
  /// `weights` is row-major, out_dim x in_dim.
  LinearEmbedder(std::size_t out_dim, std::size_t in_dim, Vec weights, Vec bias);

  Vec embed(const Vec& psi) const;

  std::size_t out_dim() const { return out_dim_; }
  std::size_t in_dim() const { return in_dim_; }

 private:
  std::size_t out_dim_ = 0;
  std::size_t in_dim_ = 0;
  Vec weights_;
  Vec bias_;
};

// ---------------------------------------------------------------------------
// Scenarios and ensembles

/// One synthetic task: a unit text embedding and unit target-image embedding
/// to align with, plus the defended black box that produces embeddings.
struct ScenarioSpec {
  Vec text_embedding;
  Vec target_image_embedding;
  std::shared_ptr<const DefenseOracle> defense;
  LinearEmbedder embedder;
};

/// One black-box model: its defense plus its embedding surrogate.
struct OracleMember {
  std::shared_ptr<const DefenseOracle> defense;
  LinearEmbedder embedder;
};

/// Average ensemble over several models. Verdict is a strict majority of
/// member verdicts; loss is the mean member loss over members that Pass.
struct OracleEnsemble {
  std::vector<OracleMember> members;
};

// ---------------------------------------------------------------------------
// Counting wrappers
//
// Every black-box interaction the algorithms make goes through one of these;
// each call records exactly one query per oracle evaluated.

Verdict defense_verdict(const DefenseOracle& defense, const Vec& psi,
                        QueryLedger& ledger, std::string_view phase);

/// Returned embedding for psi, or nullopt when the defense denies (no output
/// came back). Exactly one query either way.
std::optional<Vec> returned_embedding(const ScenarioSpec& scenario, const Vec& psi,
                                      QueryLedger& ledger, std::string_view phase);

/// Alignment loss of the returned embedding against the scenario's text and
/// target embeddings; nullopt on Deny. One query.
std::optional<double> scenario_loss(const ScenarioSpec& scenario, const Vec& psi,
                                    QueryLedger& ledger, std::string_view phase);

/// Same, but evaluated on an arbitrary member's (defense, embedder) pair with
/// the scenario providing only the two target embeddings. One query.
std::optional<double> member_loss(const OracleMember& member, const ScenarioSpec& scenario,
                                  const Vec& psi, QueryLedger& ledger, std::string_view phase);

/// Strict-majority verdict; one query per member.
Verdict ensemble_verdict(const OracleEnsemble& ensemble, const Vec& psi,
                         QueryLedger& ledger, std::string_view phase);

/// Mean member loss over Pass members, nullopt when the majority denies.
/// One query per member.
std::optional<double> ensemble_loss(const OracleEnsemble& ensemble, const ScenarioSpec& scenario,
                                    const Vec& psi, QueryLedger& ledger, std::string_view phase);

// ---------------------------------------------------------------------------
// Scenario generation

inline constexpr std::string_view kFamilyHalfspace = "halfspace";
inline constexpr std::string_view kFamilyBall = "ball";
inline constexpr std::string_view kFamilyShifted = "shifted-family";

/// Deterministic scenario from (family, seed, dim, embed_dim).
///
/// All families place the origin in the Deny region (distance 1.0 for
/// halfspace and ball) and anchor the loss minimum near a goal point with
/// Pass margin 2.0, so a run that starts at the origin must cross the
/// boundary and then align embeddings. "shifted-family" draws every quantity
/// as a bounded perturbation of fixed family-base quantities, so scenarios
/// with nearby seeds are structurally related (boundary normals of two
/// members always have cosine similarity >= 0.8); that is the transfer
/// setting. Unknown family labels throw InvalidArgument.
ScenarioSpec generate_scenario(std::uint64_t seed, std::size_t dim, std::size_t embed_dim,
                               std::string_view family);

}  // namespace probeopt

#endif  // PROBEOPT_ORACLES_HPP
