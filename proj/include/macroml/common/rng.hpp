#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace macroml {

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for a sub-stream keyed by (master, ids...). Stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t s = mix64(master);
    for (auto id : ids) s = mix64(s ^ mix64(id + 0x632be59bd9b4e019ULL));
    return s;
}

/// FNV-1a, for turning names (targets, models) into stream ids.
std::uint64_t hash_name(const char* s);

/// Seeded random stream. The draws below are written out explicitly rather
/// than through <random> distributions, whose output is implementation
/// defined, so results are reproducible on any standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased uniform integer on [0, n).
    std::size_t index(std::size_t n);

    /// Standard normal (Marsaglia polar method).
    double normal();

    /// m distinct indices from [0, n), returned in ascending order.
    std::vector<int> sample_without_replacement(int n, int m);

    /// Uniformly random permutation of [0, n).
    std::vector<int> permutation(int n);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace macroml
