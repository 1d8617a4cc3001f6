#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace svpl {

/// Counter-based pseudo-random generator with cheap independent streams.
///
/// Every draw is a hash of (seed, stream, counter), so a given (seed, stream)
/// pair produces the same sequence on any platform and streams can be handed
/// to parallel workers without coordination. Derive a child stream with
/// stream(id) instead of sharing an instance mutably.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent child stream; counter starts at zero.
  Rng stream(std::uint64_t id) const;

  std::uint64_t next_u64();

  /// Uniform on [0, 1).
  double next_double();

  /// Standard normal (Box-Muller, spare cached).
  double next_gaussian();

  /// Uniform on {0, ..., n-1}; unbiased via rejection.
  int next_int(int n);

  /// Index drawn from an unnormalized nonnegative weight vector.
  int next_categorical(std::span<const double> weights);

  /// Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<int> permutation(int n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  std::uint64_t key_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace svpl
