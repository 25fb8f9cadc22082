#pragma once

#include <cstddef>

namespace chaos_spde {

/// Fourier cosine basis of L^2([0,T]):
///   g_1(t) = sqrt(1/T),  g_j(t) = sqrt(2/T) cos((j-1) pi t / T)  for j >= 2.
/// Indices are 1-based to match the usual labelling of the basis.
class TimeBasis {
public:
    TimeBasis(double horizon, std::size_t count);

    double horizon() const { return horizon_; }
    std::size_t count() const { return count_; }

    /// g_j(t). Throws std::out_of_range for j outside [1, count] or t outside [0, T].
    double eval(std::size_t j, double t) const;

    /// Antiderivative int_0^t g_j(s) ds in closed form.
    double integral(std::size_t j, double t) const;

    /// ||g_j||_{L^1([0,T])}. Any j >= 1 is accepted (not limited to count).
    double l1_norm(std::size_t j) const;

private:
    void check(std::size_t j, double t) const;

    double horizon_;
    std::size_t count_;
};

}  // namespace chaos_spde
