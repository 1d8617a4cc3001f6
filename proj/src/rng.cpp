#include "svpl/rng.hpp"

#include <cmath>
#include <numbers>

#include "svpl/errors.hpp"

namespace svpl {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed + kGolden) ^ mix64(stream * 0xD1B54A32D192ED03ull + kGolden)),
      seed_(seed),
      stream_(stream) {}

Rng Rng::stream(std::uint64_t id) const {
  return Rng(seed_, mix64(stream_ + kGolden) ^ id);
}

std::uint64_t Rng::next_u64() {
  return mix64(key_ + kGolden * ++counter_);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 1.0 - next_double();  // (0, 1]
  double u2 = next_double();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

int Rng::next_int(int n) {
  require(n > 0, ErrorCode::InvalidArgument, "next_int: n must be positive");
  const auto span = static_cast<std::uint64_t>(n);
  const std::uint64_t reject_below = (-span) % span;  // 2^64 mod n
  for (;;) {
    std::uint64_t draw = next_u64();
    if (draw >= reject_below) return static_cast<int>(draw % span);
  }
}

int Rng::next_categorical(std::span<const double> weights) {
  require(!weights.empty(), ErrorCode::InvalidArgument, "next_categorical: empty weights");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0, ErrorCode::InvalidArgument, "next_categorical: negative weight");
    total += w;
  }
  require(total > 0.0, ErrorCode::InvalidArgument, "next_categorical: zero total weight");
  double u = next_double() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size() - 1);
}

std::vector<int> Rng::permutation(int n) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    int j = next_int(i + 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  return order;
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Numerical: return "Numerical";
    case ErrorCode::EmptyFold: return "EmptyFold";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ArmUnderflow: return "ArmUnderflow";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyTruth: return "EmptyTruth";
    case ErrorCode::OracleRequired: return "OracleRequired";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace svpl
