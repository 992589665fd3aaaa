#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace causalrl {

/// Deterministic random stream.
///
/// Wraps mt19937_64 but draws uniforms and categorical samples with
/// hand-rolled arithmetic instead of std:: distributions, whose output is
/// implementation-defined. Artifacts produced with a given seed are therefore
/// stable across compilers and standard libraries, which the reproducibility
/// guarantees rely on.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

    /// Uniform draw in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Index sampled proportionally to the (nonnegative) weights.
    /// Weights need not be normalized; their sum must be positive.
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw std::invalid_argument("categorical: weights must have positive sum");
        double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); i++) {
            acc += weights[i];
            if (u < acc) return i;
        }
        // Guard against accumulated rounding: fall back to the last positive weight.
        for (std::size_t i = weights.size(); i-- > 0;)
            if (weights[i] > 0.0) return i;
        return weights.size() - 1;
    }

    /// Bernoulli draw.
    bool bernoulli(double p) { return uniform() < p; }

    /// Derive an independent child stream. Distinct (seed, id) pairs map to
    /// well-separated states via splitmix64, so per-seed experiment streams
    /// never alias the parent or each other.
    Rng derive(std::uint64_t id) const {
        return Rng(splitmix64(seed_ ^ (0x9E3779B97F4A7C15ull * (id + 1))));
    }

    std::uint64_t seed() const { return seed_; }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

} // namespace causalrl
