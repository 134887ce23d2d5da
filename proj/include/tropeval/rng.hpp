#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace tropeval {

// Seeded PRNG with a pinned algorithm id so sampled subsets are reconstructible
// across platforms. mt19937_64 output is fully specified by the standard; the
// bounded draw and shuffle are implemented here instead of using
// std::uniform_int_distribution / std::shuffle, which are not.
class DeterministicRng {
public:
    static constexpr const char* kAlgorithmId = "mt19937_64-fy.v1";

    explicit DeterministicRng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Unbiased draw in [0, n) via rejection sampling.
    uint64_t uniform_index(uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be > 0");
        const uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    double uniform01() {
        return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);  // 2^-53
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        // Fisher-Yates
        for (size_t i = items.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_index(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // k distinct indices from [0, n), in draw order.
    std::vector<size_t> sample_indices(size_t n, size_t k) {
        if (k > n) throw std::invalid_argument("sample_indices: k > n");
        std::vector<size_t> pool(n);
        for (size_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<size_t> out;
        out.reserve(k);
        for (size_t i = 0; i < k; ++i) {
            size_t j = i + static_cast<size_t>(uniform_index(n - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace tropeval
