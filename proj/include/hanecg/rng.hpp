#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hanecg {

// Deterministic random source. mt19937_64 is fully specified by the
// standard; the distributions here are hand-rolled because the std
// distribution objects are implementation-defined and would break
// cross-platform reproducibility of seeds.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t raw() { return gen_(); }

    // [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller, one value per call
    double normal() {
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // index in [0, n); Lemire multiply-shift
    size_t index(size_t n) {
        return static_cast<size_t>((static_cast<__uint128_t>(gen_()) * n) >> 64);
    }

    // splitmix64 finalizer, used to derive independent stream seeds
    static uint64_t mix(uint64_t a, uint64_t b) {
        uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 gen_;
};

// Fisher-Yates; std::shuffle is implementation-defined so it is avoided.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = rng.index(i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace hanecg
