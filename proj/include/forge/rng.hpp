#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace forge {

// Deterministic, platform-independent RNG (splitmix64 core). std::mt19937 with
// std distributions is not bit-stable across standard libraries; everything
// seeded here must reproduce bitwise on any platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) { return next_u64() % n; }

    // Box-Muller; no spare caching so the draw count per call is fixed.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        double u2 = uniform();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mean + stddev * z;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derive an independent substream, e.g. per epoch or per step.
    Rng fork(uint64_t key) const {
        Rng r(state_ ^ (0x632be59bd9b4e019ULL * (key + 1)));
        r.next_u64();
        return r;
    }

private:
    uint64_t state_;
};

}  // namespace forge
