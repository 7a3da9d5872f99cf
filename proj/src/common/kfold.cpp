#include "macroml/common/kfold.hpp"

#include <stdexcept>

#include "macroml/common/rng.hpp"

namespace macroml {

std::vector<int> kfold_split(int n, int K, std::uint64_t seed) {
    if (K < 2 || K > n) throw std::invalid_argument("kfold_split: need 2 <= K <= rows");
    Rng rng(seed);
    const auto perm = rng.permutation(n);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fold[perm[i]] = i % K;
    return fold;
}

std::vector<int> fold_rows(const std::vector<int>& fold, int k, bool held_out) {
    std::vector<int> out;
    for (std::size_t i = 0; i < fold.size(); ++i)
        if ((fold[i] == k) == held_out) out.push_back(static_cast<int>(i));
    return out;
}

}  // namespace macroml
