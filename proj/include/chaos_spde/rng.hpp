#pragma once

#include <cstdint>
#include <string_view>

namespace chaos_spde {

/// Stateless 64-bit mixer (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Hash of a seed and up to four counters. Every random quantity in the
/// library is a pure function of such a key, so draws never depend on the
/// order in which they are requested.
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                           std::uint64_t c = 0, std::uint64_t d = 0);

/// Derives an independent child seed for a named consumer ("panel", "net", ...).
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

/// Uniform on the open interval (0, 1) from a 64-bit hash.
double to_open_unit(std::uint64_t bits);

/// Standard normal draw keyed by (seed, a, b, c), via Box-Muller on two hashed lanes.
double counter_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Sequential view over the counter generator, for code that just wants "the next draw".
class CounterStream {
public:
    explicit CounterStream(std::uint64_t seed) : seed_(seed) {}

    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    /// Chi-square with an integer number of degrees of freedom.
    double chi_square(int dof);
    std::uint64_t next_bits();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace chaos_spde
