#ifndef HPE_RNG_HPP
#define HPE_RNG_HPP

#include <cstdint>
#include <random>

namespace hpe {

/// Mixes a master seed with a stream index into an independent sub-seed
/// (splitmix64 finalizer). Used for per-replicate and per-trial streams so
/// parallel and serial runs draw identical numbers.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Seeded generator with platform-independent variates.
///
/// std::mt19937_64 has a standardized output sequence, but the standard
/// distributions do not, so the conversions here are done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of precision.
  double uniform();

  /// Uniform on (0, 1); never returns 0.
  double uniform_open();

  /// Uniform integer on [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  double normal();

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hpe

#endif
