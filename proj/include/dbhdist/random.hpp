#ifndef DBHDIST_RANDOM_HPP
#define DBHDIST_RANDOM_HPP

#include <cstdint>
#include <random>

namespace dbhdist {

/// Seeded pseudo-random stream.
///
/// std::mt19937_64 with hand-written transforms on top; draws do not depend on
/// the standard library implementation. One Rng per worker, never shared
/// between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();

  /// Standard normal (Marsaglia polar method).
  double normal();

  /// Gamma with the given shape and unit scale. Marsaglia-Tsang squeeze for
  /// shape >= 1; for shape < 1 the boosted draw G(shape + 1) * U^(1/shape).
  double gamma(double shape);

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dbhdist

#endif  // DBHDIST_RANDOM_HPP
