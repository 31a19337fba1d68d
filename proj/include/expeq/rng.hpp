#pragma once

#include <cstdint>
#include <random>

namespace expeq {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded bit stream. Distribution transforms live in special.hpp so that
// draws are stable across standard-library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        engine_.seed(splitmix64(s));
    }

    // Independent substream for replication `index` of a master seed.
    static Rng substream(std::uint64_t master_seed, std::uint64_t index) {
        std::uint64_t s = master_seed;
        std::uint64_t a = splitmix64(s);
        s = a ^ (index * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL);
        return Rng(splitmix64(s));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on the open interval (0,1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace expeq
