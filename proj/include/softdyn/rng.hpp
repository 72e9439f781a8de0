#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace softdyn {

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Root of all randomness in a run. Each consumer asks for a named substream, so
/// adding a consumer never shifts the numbers another one sees.
class SeedTree {
public:
    explicit SeedTree(std::uint64_t root = 0) : root_(root) {}

    std::uint64_t root() const { return root_; }

    std::uint64_t derive(std::string_view name) const
    {
        // FNV-1a over the name, then mixed with the root.
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : name) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return mix64(root_ ^ mix64(h));
    }

    std::uint64_t derive(std::string_view name, std::uint64_t index) const
    {
        return mix64(derive(name) + mix64(index + 1));
    }

    SeedTree child(std::string_view name) const { return SeedTree(derive(name)); }

    std::mt19937_64 stream(std::string_view name) const { return std::mt19937_64(derive(name)); }
    std::mt19937_64 stream(std::string_view name, std::uint64_t index) const
    {
        return std::mt19937_64(derive(name, index));
    }

private:
    std::uint64_t root_;
};

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& g)
{
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller, platform independent.
inline double standard_normal(std::mt19937_64& g)
{
    double u1 = uniform01(g);
    while (u1 <= 0.0) u1 = uniform01(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace softdyn
