#pragma once

#include <cstdint>
#include <span>

namespace bft {

// Counter-based generator built on the splitmix64 scrambler.
//
// Stream-splitting rule: the engine for substream k of master seed s is
// seeded with scramble(s ^ scramble(k + GOLDEN)).  Samplers assign one
// substream per pass (or per object), indexed by position, so runs are
// reproducible and passes are independent of evaluation order.
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t scramble(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class SplitMix64 {
public:
    using result_type = std::uint64_t;
    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    std::uint64_t next() {
        state_ += kGolden;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t operator()() { return next(); }
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~0ull; }

private:
    std::uint64_t state_;
};

inline SplitMix64 substream(std::uint64_t seed, std::uint64_t stream) {
    return SplitMix64(scramble(seed ^ scramble(stream + kGolden)));
}

// Draws an index with probability weights[i] / total.  Weights must be
// nonnegative with a positive total; the final index absorbs rounding.
inline std::size_t draw_index(SplitMix64& gen, std::span<const double> weights, double total) {
    double u = gen.uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
}

} // namespace bft
