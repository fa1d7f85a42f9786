#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dpd {

// Mixes a base seed with a stream id so that related components (two learners,
// their environments, the distillation sampler) draw from distinct streams.
// splitmix64 finalizer.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
    uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded generator with its own distribution code on top of mt19937_64.
// std::uniform_real_distribution and friends are implementation-defined, which
// would tie frozen test values and metrics files to a particular libstdc++;
// the draws below are pinned bit-for-bit by the mt19937_64 output stream.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // in (0, 1]
    double uniform_pos() { return 1.0 - uniform(); }

    // standard normal, Box-Muller with a cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = uniform_pos();
        double r = std::sqrt(-2.0 * std::log(u));
        double t = 2.0 * M_PI * uniform();
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // in [0, n); modulo bias is irrelevant at desk-scale n
    uint64_t integer(uint64_t n) { return gen_() % n; }

    uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dpd
