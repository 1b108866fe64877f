#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace gap {

// 64-bit FNV-1a over raw bytes. Used for record-seed derivation and for
// manifest content hashes; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

namespace detail {
inline std::uint64_t fnv_u64(std::uint64_t value, std::uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (8 * i)) & 0xff;
        h *= 0x100000001b3ull;
    }
    return h;
}
}  // namespace detail

// Record seed = hash(global seed, stable record id). The id keeps sampling
// independent of worker count and input order.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view id) {
    std::uint64_t h = detail::fnv_u64(base, 0xcbf29ce484222325ull);
    return fnv1a64(id, h);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view id,
                                 std::uint64_t index) {
    return detail::fnv_u64(index, derive_seed(base, id));
}

// Deterministic splitmix64 generator. The standard <random> engines are
// portable but the distributions are not; every draw we make goes through
// this class so corpora are reproducible byte for byte.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform on [0, n); n must be positive. Rejection keeps it unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    long long uniform_int(long long lo, long long hi) {
        return lo + static_cast<long long>(
                        below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Uniform on [0, 1) with 53 bits of mantissa.
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return unit() < p; }

    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[below(v.size())];
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(i);
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

    // First k entries of a random permutation of 0..n-1, in draw order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + below(n - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::uint64_t state_;
};

}  // namespace gap
