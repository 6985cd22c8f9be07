#ifndef PROBEOPT_CORE_HPP
#define PROBEOPT_CORE_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace probeopt {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a call contract (bad sizes, bad enum values, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerically degenerate input (zero-norm vector where a direction is needed).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Operation not defined for this oracle type (e.g. no closed-form distance).
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// Probe radius exceeded its cap without ever finding a Pass point.
class RegionUnreachable : public Error {
 public:
  using Error::Error;
};

/// Iteration budget exhausted before the loop's goal was met.
class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration is missing, unreadable or fails validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed metrics or candidates file; message names file and line.
class ParseError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Dense vector math

/// Parameter vectors, gradients and embeddings are all plain dense vectors.
using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);
double norm(const Vec& v);
bool all_finite(const Vec& v);

Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scaled(const Vec& v, double s);

/// x += s * y
void add_scaled(Vec& x, double s, const Vec& y);

/// v / ||v||; throws DegenerateInput when ||v|| == 0.
Vec normalized(const Vec& v);

/// a.b / (||a|| ||b||), clamped to [-1, 1].
/// Throws InvalidArgument on length mismatch, DegenerateInput on a zero norm.
double cosine_similarity(const Vec& a, const Vec& b);

// ---------------------------------------------------------------------------
// Verdicts

/// Binary outcome of a defended black-box call: Pass means an output came
/// back, Deny means it was blocked. There is deliberately no third state.
enum class Verdict : std::uint8_t { Pass, Deny };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);  // throws ParseError

// ---------------------------------------------------------------------------
// Seeded randomness

/// Deterministic random stream: identical seed and draw sequence give
/// bit-identical outputs. Substreams are derived from the seed and a label so
/// modules can own independent streams without coordinating positions.
/// Not shareable across concurrent callers; derive a substream per task.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64();
  double next_uniform();    ///< uniform in [0, 1)
  double next_gaussian();   ///< standard normal (Box-Muller, one value per call)
  double next_rademacher(); ///< +1 or -1 with equal probability

  /// Independent stream derived from this stream's seed and a label.
  RngStream substream(std::string_view label) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  std::uint64_t position_ = 0;
};

/// `count` i.i.d. directions uniform on the unit sphere in `dim` dimensions
/// (standard-normal draws, normalized). Throws InvalidArgument when dim or
/// count is zero.
std::vector<Vec> sample_unit_sphere(std::size_t dim, std::size_t count, RngStream& rng);

// ---------------------------------------------------------------------------
// Query accounting

/// Counts oracle invocations, total and per phase label. The total always
/// equals the sum over phases and never decreases. Increments must be
/// serialized by the caller when oracles are evaluated concurrently.
class QueryLedger {
 public:
  void record(std::string_view phase);

  std::uint64_t total() const { return total_; }
  std::uint64_t count(std::string_view phase) const;
  const std::map<std::string, std::uint64_t>& by_phase() const { return by_phase_; }

 private:
  std::uint64_t total_ = 0;
  std::map<std::string, std::uint64_t> by_phase_;
};

}  // namespace probeopt

#endif  // PROBEOPT_CORE_HPP
