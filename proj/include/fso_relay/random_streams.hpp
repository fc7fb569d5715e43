#ifndef FSO_RELAY_RANDOM_STREAMS_HPP
#define FSO_RELAY_RANDOM_STREAMS_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace fso_relay {

/// Draws per substream. Fixed so that results never depend on thread count.
inline constexpr std::size_t kDrawChunk = 4096;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the substream identified by (seed, hop, chunk).
inline constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint32_t hop, std::uint64_t chunk) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ (0x100000001b3ULL * (hop + 1)));
    return splitmix64(h ^ chunk);
}

/// Standard normal variates from one keyed substream.
class NormalStream {
public:
    NormalStream() = default;
    NormalStream(std::uint64_t seed, std::uint32_t hop, std::uint64_t chunk)
        : engine_(substream_seed(seed, hop, chunk)) {}

    double operator()() { return normal_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

/// Block of standard normals shared by every configuration evaluated with the
/// same seed (common random numbers). z[k][i] is draw i of hop k.
struct CommonNormals {
    std::uint64_t seed = 0;
    std::size_t size = 0;
    std::array<std::vector<double>, 3> z;
};

inline CommonNormals common_normals(std::uint64_t seed, std::size_t n) {
    CommonNormals block{seed, n, {}};
    for (std::uint32_t k = 0; k < 3; ++k) {
        auto& column = block.z[k];
        column.resize(n);
        for (std::size_t begin = 0, chunk = 0; begin < n; begin += kDrawChunk, ++chunk) {
            NormalStream stream(seed, k, chunk);
            const std::size_t end = std::min(n, begin + kDrawChunk);
            for (std::size_t i = begin; i < end; ++i) column[i] = stream();
        }
    }
    return block;
}

} // namespace fso_relay

#endif
