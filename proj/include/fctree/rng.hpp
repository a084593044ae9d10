#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fctree {

// Deterministic random source. All distribution draws are implemented here
// rather than with <random> distributions, whose outputs are
// implementation-defined; this keeps seeded runs identical across compilers.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Unbiased draw in [0, n).
    uint64_t bounded(uint64_t n) {
        uint64_t x = 0;
        uint64_t r = 0;
        do {
            x = next_u64();
            r = x % n;
        } while (x - r > uint64_t(0) - n);
        return r;
    }

    // Inclusive range.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(bounded(static_cast<uint64_t>(hi - lo) + 1));
    }

    // [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Marsaglia polar method with a cached spare.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        double v = 0.0;
        double s = 0.0;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    // Derives an independent child stream.
    Rng spawn() { return Rng(next_u64()); }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Seeded Fisher-Yates permutation of 0..n-1.
template <typename IndexVec>
void shuffle_indices(IndexVec& idx, Rng& rng) {
    for (size_t i = idx.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.bounded(i));
        std::swap(idx[i - 1], idx[j]);
    }
}

} // namespace fctree
