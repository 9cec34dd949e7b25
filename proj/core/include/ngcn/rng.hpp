#pragma once

#include <cstdint>
#include <random>

namespace ngcn {

// Seeded 64-bit stream. Uniform draws are built from raw engine output so
// sequences do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Independent stream derived from this seed and a stream tag.
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    Rng rng(0);
    rng.engine_.seed(seq);
    return rng;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ngcn
