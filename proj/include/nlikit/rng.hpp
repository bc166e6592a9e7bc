#pragma once

#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

namespace nlikit::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer. Stateless, fully specified, and portable across
// platforms and compilers, unlike std::uniform_*_distribution.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// FNV-1a over bytes, folded into the running key.
constexpr std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t key = 0xCBF29CE484222325ULL) {
    std::uint64_t h = key;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Key derivation: derive(seed, "stage", id, index, ...) gives independent,
// reproducible streams for sub-tasks regardless of evaluation order.
constexpr std::uint64_t derive(std::uint64_t seed) { return mix64(seed); }

template <typename Head, typename... Tail>
constexpr std::uint64_t derive(std::uint64_t seed, Head&& head, Tail&&... tail) {
    std::uint64_t k;
    if constexpr (std::is_convertible_v<Head, std::string_view>) {
        k = hash_bytes(std::string_view(head));
    } else {
        k = static_cast<std::uint64_t>(head);
    }
    return derive(mix64(seed ^ k), std::forward<Tail>(tail)...);
}

// Counter-based deterministic generator. The sequence is a pure function
// of (key, counter), so streams can be split or skipped without state.
class DetRng {
public:
    explicit DetRng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return mix64(key_ + kGolden * ++counter_); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    // Unbiased uniform in [0, n) via rejection sampling.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

    // Simple random sample without replacement of k indices from [0, n).
    // Partial Fisher-Yates; selection order is deterministic.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
            std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace nlikit::rng
