#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skpk/errors.hpp"

namespace skpk {

// Deterministic, platform-independent generator (splitmix64 core).
// std::mt19937 + std::discrete_distribution would leave sampled values
// implementation-defined, which breaks the bit-reproducibility contract.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1) with 53 random bits
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        // multiply-shift; bias < 2^-64, irrelevant at our scales but keep
        // the rejection loop so distributions are exact.
        if (n == 0) throw Error("next_below: empty range");
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // inverse-CDF draw from an (unnormalized is not allowed) pmf row
    std::size_t sample(std::span<const double> probs) {
        double u = next_double();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        // numerical tail: return last cell with positive mass
        for (std::size_t i = probs.size(); i-- > 0;)
            if (probs[i] > 0.0) return i;
        return probs.size() - 1;
    }

    // independent substream, stable under reordering of other draws
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        Rng r(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
        return r.next_u64();
    }

  private:
    std::uint64_t state_;
};

} // namespace skpk
