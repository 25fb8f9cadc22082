#include "chaos_spde/rng.hpp"

#include <cmath>
#include <numbers>

namespace chaos_spde {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c,
                           std::uint64_t d) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ a);
    h = mix64(h ^ (b + 0x632be59bd9b4e019ULL));
    h = mix64(h ^ (c + 0x8cb92ba72f3d8dd7ULL));
    h = mix64(h ^ (d + 0xd6e8feb86659fd93ULL));
    return h;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
    // FNV-1a over the label, then mixed with the root.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : label) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return mix64(mix64(root) ^ h);
}

double to_open_unit(std::uint64_t bits) {
    // 53 random bits, shifted by half an ulp so that 0 and 1 are excluded.
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double counter_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    const double u1 = to_open_unit(counter_hash(seed, a, b, c, 0));
    const double u2 = to_open_unit(counter_hash(seed, a, b, c, 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterStream::next_bits() { return counter_hash(seed_, counter_++, 0x5eed); }

double CounterStream::uniform() { return to_open_unit(next_bits()); }

double CounterStream::normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double CounterStream::chi_square(int dof) {
    double acc = 0.0;
    for (int k = 0; k < dof; ++k) {
        const double z = normal();
        acc += z * z;
    }
    return acc;
}

std::uint64_t CounterStream::below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

}  // namespace chaos_spde
