#include "probeopt/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace probeopt {

namespace {

void require_same_length(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) {
    throw InvalidArgument(std::string(what) + ": length mismatch (" +
                          std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

double dot(const Vec& a, const Vec& b) {
  require_same_length(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

bool all_finite(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vec add(const Vec& a, const Vec& b) {
  require_same_length(a, b, "add");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec sub(const Vec& a, const Vec& b) {
  require_same_length(a, b, "sub");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vec scaled(const Vec& v, double s) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
  return out;
}

void add_scaled(Vec& x, double s, const Vec& y) {
  require_same_length(x, y, "add_scaled");
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * y[i];
}

Vec normalized(const Vec& v) {
  double n = norm(v);
  if (n == 0.0) throw DegenerateInput("normalized: zero-norm vector");
  return scaled(v, 1.0 / n);
}

double cosine_similarity(const Vec& a, const Vec& b) {
  require_same_length(a, b, "cosine_similarity");
  double na = norm(a);
  double nb = norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw DegenerateInput("cosine_similarity: zero-norm input");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::string_view to_string(Verdict v) { return v == Verdict::Pass ? "Pass" : "Deny"; }

Verdict verdict_from_string(std::string_view s) {
  if (s == "Pass") return Verdict::Pass;
  if (s == "Deny") return Verdict::Deny;
  throw ParseError("unknown verdict \"" + std::string(s) + "\"");
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

std::uint64_t RngStream::next_u64() {
  ++position_;
  return splitmix64(state_);
}

double RngStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  // Box-Muller, cosine branch only; u1 in (0, 1] keeps the log finite.
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::next_rademacher() { return (next_u64() & 1u) ? 1.0 : -1.0; }

RngStream RngStream::substream(std::string_view label) const {
  std::uint64_t s = seed_ ^ fnv1a(label);
  // one mixing round so adjacent seeds do not give adjacent substreams
  return RngStream(splitmix64(s));
}

std::vector<Vec> sample_unit_sphere(std::size_t dim, std::size_t count, RngStream& rng) {
  if (dim == 0) throw InvalidArgument("sample_unit_sphere: dim must be >= 1");
  if (count == 0) throw InvalidArgument("sample_unit_sphere: count must be >= 1");
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vec z(dim);
    double n = 0.0;
    do {
      for (auto& x : z) x = rng.next_gaussian();
      n = norm(z);
    } while (n == 0.0);
    out.push_back(scaled(z, 1.0 / n));
  }
  return out;
}

void QueryLedger::record(std::string_view phase) {
  ++total_;
  ++by_phase_[std::string(phase)];
}

std::uint64_t QueryLedger::count(std::string_view phase) const {
  auto it = by_phase_.find(std::string(phase));
  return it == by_phase_.end() ? 0 : it->second;
}

}  // namespace probeopt
