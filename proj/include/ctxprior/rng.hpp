#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ctxprior {

// splitmix64; used to derive independent per-task seeds from (base, stream).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(splitmix64(base) ^ (0x6a09e667f3bcc909ULL + stream));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(base, a), b);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

// Fisher-Yates permutation of 0..n-1.
inline std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<int> pick(0, i);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    return perm;
}

// Shuffled fold labels for n items; fold sizes differ by at most one.
inline std::vector<int> kfold_assignment(int n, int k, std::mt19937_64& rng) {
    std::vector<int> perm = random_permutation(n, rng);
    std::vector<int> fold(static_cast<std::size_t>(n), 0);
    for (int b = 0; b < k; ++b) {
        const int lo = static_cast<int>(static_cast<std::int64_t>(b) * n / k);
        const int hi = static_cast<int>(static_cast<std::int64_t>(b + 1) * n / k);
        for (int i = lo; i < hi; ++i) fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = b;
    }
    return fold;
}

}  // namespace ctxprior
