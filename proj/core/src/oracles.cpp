#include "probeopt/oracles.hpp"

#include <cmath>

#include "probeopt/sel.hpp"

namespace probeopt {

namespace {

void require_dim(std::size_t expect, const Vec& psi, const char* what) {
  if (psi.size() != expect) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" +
                          std::to_string(psi.size()) + " vs " + std::to_string(expect) + ")");
  }
}

Vec gaussian_vec(std::size_t n, RngStream& rng, double scale = 1.0) {
  Vec v(n);
  for (auto& x : v) x = scale * rng.next_gaussian();
  return v;
}

Vec unit_gaussian(std::size_t n, RngStream& rng) {
  Vec v = gaussian_vec(n, rng);
  double nm = norm(v);
  while (nm == 0.0) {
    v = gaussian_vec(n, rng);
    nm = norm(v);
  }
  return scaled(v, 1.0 / nm);
}

/// Unit vector orthogonal to w, built from a fresh gaussian draw.
Vec unit_tangent(const Vec& w, RngStream& rng) {
  for (;;) {
    Vec t = gaussian_vec(w.size(), rng);
    add_scaled(t, -dot(t, w), w);
    if (norm(t) > 1e-9) return normalized(t);
    if (w.size() == 1) return Vec(1, 0.0);  // no tangent direction exists in 1-D
  }
}

}  // namespace

double DefenseOracle::boundary_distance(const Vec&) const {
  throw UnsupportedOperation("boundary_distance: no closed form for this oracle type");
}

HalfspaceDefense::HalfspaceDefense(Vec normal, double offset)
    : normal_(std::move(normal)), offset_(offset), normal_norm_(norm(normal_)) {
  if (normal_.empty()) throw InvalidArgument("HalfspaceDefense: empty normal");
  if (normal_norm_ == 0.0) throw InvalidArgument("HalfspaceDefense: zero-norm normal");
}

Verdict HalfspaceDefense::verdict(const Vec& psi) const {
  require_dim(normal_.size(), psi, "HalfspaceDefense::verdict");
  return dot(normal_, psi) + offset_ >= 0.0 ? Verdict::Pass : Verdict::Deny;
}

double HalfspaceDefense::boundary_distance(const Vec& psi) const {
  require_dim(normal_.size(), psi, "HalfspaceDefense::boundary_distance");
  return std::abs(dot(normal_, psi) + offset_) / normal_norm_;
}

BallDefense::BallDefense(Vec center, double radius)
    : center_(std::move(center)), radius_(radius) {
  if (center_.empty()) throw InvalidArgument("BallDefense: empty center");
  if (!(radius_ > 0.0)) throw InvalidArgument("BallDefense: radius must be positive");
}

Verdict BallDefense::verdict(const Vec& psi) const {
  require_dim(center_.size(), psi, "BallDefense::verdict");
  return norm(sub(psi, center_)) <= radius_ ? Verdict::Pass : Verdict::Deny;
}

double BallDefense::boundary_distance(const Vec& psi) const {
  require_dim(center_.size(), psi, "BallDefense::boundary_distance");
  return std::abs(norm(sub(psi, center_)) - radius_);
}

LinearEmbedder::LinearEmbedder(std::size_t out_dim, std::size_t in_dim, Vec weights, Vec bias)
    : out_dim_(out_dim), in_dim_(in_dim), weights_(std::move(weights)), bias_(std::move(bias)) {
  if (out_dim_ == 0 || in_dim_ == 0) throw InvalidArgument("LinearEmbedder: zero dimension");
  if (weights_.size() != out_dim_ * in_dim_) {
    throw InvalidArgument("LinearEmbedder: weights size is not out_dim * in_dim");
  }
  if (bias_.size() != out_dim_) throw InvalidArgument("LinearEmbedder: bias size mismatch");
}

Vec LinearEmbedder::embed(const Vec& psi) const {
  require_dim(in_dim_, psi, "LinearEmbedder::embed");
  Vec out = bias_;
  for (std::size_t r = 0; r < out_dim_; ++r) {
    const double* row = weights_.data() + r * in_dim_;
    double s = out[r];
    for (std::size_t c = 0; c < in_dim_; ++c) s += row[c] * psi[c];
    out[r] = s;
  }
  double n = norm(out);
  if (n == 0.0) throw DegenerateInput("LinearEmbedder::embed: zero-norm embedding");
  return scaled(out, 1.0 / n);
}

Verdict defense_verdict(const DefenseOracle& defense, const Vec& psi,
                        QueryLedger& ledger, std::string_view phase) {
  ledger.record(phase);
  return defense.verdict(psi);
}

std::optional<Vec> returned_embedding(const ScenarioSpec& scenario, const Vec& psi,
                                      QueryLedger& ledger, std::string_view phase) {
  ledger.record(phase);
  if (scenario.defense->verdict(psi) == Verdict::Deny) return std::nullopt;
  return scenario.embedder.embed(psi);
}

std::optional<double> scenario_loss(const ScenarioSpec& scenario, const Vec& psi,
                                    QueryLedger& ledger, std::string_view phase) {
  auto emb = returned_embedding(scenario, psi, ledger, phase);
  if (!emb) return std::nullopt;
  return mma_loss(*emb, scenario.text_embedding, scenario.target_image_embedding);
}

std::optional<double> member_loss(const OracleMember& member, const ScenarioSpec& scenario,
                                  const Vec& psi, QueryLedger& ledger, std::string_view phase) {
  ledger.record(phase);
  if (member.defense->verdict(psi) == Verdict::Deny) return std::nullopt;
  Vec emb = member.embedder.embed(psi);
  return mma_loss(emb, scenario.text_embedding, scenario.target_image_embedding);
}

Verdict ensemble_verdict(const OracleEnsemble& ensemble, const Vec& psi,
                         QueryLedger& ledger, std::string_view phase) {
  if (ensemble.members.empty()) throw InvalidArgument("ensemble_verdict: empty ensemble");
  std::size_t pass = 0;
  for (const auto& m : ensemble.members) {
    if (defense_verdict(*m.defense, psi, ledger, phase) == Verdict::Pass) ++pass;
  }
  return 2 * pass > ensemble.members.size() ? Verdict::Pass : Verdict::Deny;
}

std::optional<double> ensemble_loss(const OracleEnsemble& ensemble, const ScenarioSpec& scenario,
                                    const Vec& psi, QueryLedger& ledger, std::string_view phase) {
  if (ensemble.members.empty()) throw InvalidArgument("ensemble_loss: empty ensemble");
  std::size_t pass = 0;
  double sum = 0.0;
  for (const auto& m : ensemble.members) {
    auto l = member_loss(m, scenario, psi, ledger, phase);
    if (l) {
      ++pass;
      sum += *l;
    }
  }
  if (2 * pass <= ensemble.members.size()) return std::nullopt;
  return sum / static_cast<double>(pass);
}

namespace {

// Shared construction: origin in Deny, goal point at Pass margin 2.0, loss
// anchored at the goal's embedding with slightly distinct text/target views.
constexpr double kGoalMargin = 2.0;
constexpr double kGoalTangent = 0.75;
constexpr double kEmbeddingJitter = 0.05;
constexpr double kShiftDelta = 0.15;
constexpr std::uint64_t kShiftedBaseSeed = 0x5348494654454421ull;

struct EmbeddingSide {
  LinearEmbedder embedder;
  Vec text;
  Vec target;
};

LinearEmbedder draw_embedder(std::size_t e, std::size_t d, RngStream& rng) {
  Vec weights = gaussian_vec(e * d, rng, 1.0 / std::sqrt(static_cast<double>(d)));
  Vec bias = gaussian_vec(e, rng, 0.1);
  return LinearEmbedder(e, d, std::move(weights), std::move(bias));
}

EmbeddingSide anchor_embeddings(LinearEmbedder embedder, const Vec& goal, RngStream& rng) {
  Vec base = embedder.embed(goal);
  Vec text = base;
  add_scaled(text, kEmbeddingJitter, unit_gaussian(base.size(), rng));
  Vec target = base;
  add_scaled(target, kEmbeddingJitter, unit_gaussian(base.size(), rng));
  return {std::move(embedder), normalized(text), normalized(target)};
}

ScenarioSpec make_halfspace(std::uint64_t seed, std::size_t d, std::size_t e) {
  RngStream rng = RngStream(seed).substream("scenario-halfspace");
  Vec w = unit_gaussian(d, rng);
  Vec goal = scaled(w, 1.0 + kGoalMargin);  // offset -1.0 puts the boundary at w.psi = 1
  add_scaled(goal, kGoalTangent, unit_tangent(w, rng));
  auto side = anchor_embeddings(draw_embedder(e, d, rng), goal, rng);
  return {std::move(side.text), std::move(side.target),
          std::make_shared<HalfspaceDefense>(std::move(w), -1.0), std::move(side.embedder)};
}

ScenarioSpec make_ball(std::uint64_t seed, std::size_t d, std::size_t e) {
  RngStream rng = RngStream(seed).substream("scenario-ball");
  double radius = 2.0 * static_cast<double>(d);
  Vec center = scaled(unit_gaussian(d, rng), radius + 1.0);  // origin 1.0 outside
  Vec goal = center;
  add_scaled(goal, radius - kGoalMargin, unit_gaussian(d, rng));
  auto side = anchor_embeddings(draw_embedder(e, d, rng), goal, rng);
  return {std::move(side.text), std::move(side.target),
          std::make_shared<BallDefense>(std::move(center), radius), std::move(side.embedder)};
}

ScenarioSpec make_shifted(std::uint64_t seed, std::size_t d, std::size_t e) {
  RngStream base = RngStream(kShiftedBaseSeed).substream("shifted-family-base");
  Vec w_base = unit_gaussian(d, base);
  Vec t_base = gaussian_vec(d, base);
  Vec m_base = gaussian_vec(e * d, base, 1.0 / std::sqrt(static_cast<double>(d)));
  Vec b_base = gaussian_vec(e, base, 0.1);

  RngStream pert = RngStream(seed).substream("scenario-shifted-family");
  Vec w = w_base;
  add_scaled(w, kShiftDelta, unit_gaussian(d, pert));
  w = normalized(w);

  Vec tangent = t_base;
  add_scaled(tangent, -dot(tangent, w), w);
  tangent = norm(tangent) > 1e-9 ? normalized(tangent) : unit_tangent(w, pert);

  Vec goal = scaled(w, 1.0 + kGoalMargin);
  add_scaled(goal, kGoalTangent, tangent);

  Vec weights = m_base;
  double mscale = kShiftDelta / std::sqrt(static_cast<double>(d));
  for (auto& x : weights) x += mscale * pert.next_gaussian();
  Vec bias = b_base;
  for (auto& x : bias) x += 0.05 * kShiftDelta * pert.next_gaussian();

  auto side = anchor_embeddings(LinearEmbedder(e, d, std::move(weights), std::move(bias)),
                                goal, pert);
  return {std::move(side.text), std::move(side.target),
          std::make_shared<HalfspaceDefense>(std::move(w), -1.0), std::move(side.embedder)};
}

}  // namespace

ScenarioSpec generate_scenario(std::uint64_t seed, std::size_t dim, std::size_t embed_dim,
                               std::string_view family) {
  if (dim == 0 || embed_dim == 0) {
    throw InvalidArgument("generate_scenario: dimensions must be >= 1");
  }
  if (family == kFamilyHalfspace) return make_halfspace(seed, dim, embed_dim);
  if (family == kFamilyBall) return make_ball(seed, dim, embed_dim);
  if (family == kFamilyShifted) return make_shifted(seed, dim, embed_dim);
  throw InvalidArgument("generate_scenario: unknown family \"" + std::string(family) + "\"");
}

}  // namespace probeopt
