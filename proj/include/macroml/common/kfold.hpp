#pragma once

#include <cstdint>
#include <vector>

namespace macroml {

/// Plain (unblocked) K-fold assignment: rows are shuffled with a seeded
/// Fisher-Yates permutation and dealt round-robin, so fold sizes differ by at
/// most one. Throws std::invalid_argument when K < 2 or K > n.
std::vector<int> kfold_split(int n, int K, std::uint64_t seed);

/// Row indices with fold[i] == k (held_out) or != k (training).
std::vector<int> fold_rows(const std::vector<int>& fold, int k, bool held_out);

}  // namespace macroml
