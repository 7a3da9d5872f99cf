#include "macroml/common/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace macroml {

std::uint64_t hash_name(const char* s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (; *s; ++s) {
        h ^= static_cast<unsigned char>(*s);
        h *= 1099511628211ULL;
    }
    return h;
}

std::size_t Rng::index(std::size_t n) {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(n)) % n;
        while (low < threshold) {
            x = next();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

std::vector<int> Rng::sample_without_replacement(int n, int m) {
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    m = std::min(m, n);
    for (int i = 0; i < m; ++i) {
        const auto j = i + static_cast<int>(index(static_cast<std::size_t>(n - i)));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<int> Rng::permutation(int n) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(p[i], p[index(static_cast<std::size_t>(i) + 1)]);
    return p;
}

}  // namespace macroml
