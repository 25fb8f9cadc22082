#include "chaos_spde/basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace chaos_spde {

TimeBasis::TimeBasis(double horizon, std::size_t count) : horizon_(horizon), count_(count) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("TimeBasis: horizon must be positive and finite");
    }
    if (count == 0) {
        throw std::invalid_argument("TimeBasis: count must be positive");
    }
}

void TimeBasis::check(std::size_t j, double t) const {
    if (j < 1 || j > count_) {
        throw std::out_of_range("TimeBasis: index " + std::to_string(j) + " outside [1, " +
                                std::to_string(count_) + "]");
    }
    if (!(t >= 0.0 && t <= horizon_)) {
        throw std::out_of_range("TimeBasis: time " + std::to_string(t) + " outside [0, T]");
    }
}

double TimeBasis::eval(std::size_t j, double t) const {
    check(j, t);
    if (j == 1) {
        return std::sqrt(1.0 / horizon_);
    }
    const double freq = static_cast<double>(j - 1) * std::numbers::pi / horizon_;
    return std::sqrt(2.0 / horizon_) * std::cos(freq * t);
}

double TimeBasis::integral(std::size_t j, double t) const {
    check(j, t);
    if (j == 1) {
        return t / std::sqrt(horizon_);
    }
    const double freq = static_cast<double>(j - 1) * std::numbers::pi / horizon_;
    return std::sqrt(2.0 / horizon_) * std::sin(freq * t) / freq;
}

double TimeBasis::l1_norm(std::size_t j) const {
    if (j < 1) {
        throw std::out_of_range("TimeBasis: l1_norm index must be >= 1");
    }
    if (j == 1) {
        return std::sqrt(horizon_);
    }
    // [0,T] holds exactly j-1 half-periods of |cos|, each contributing
    // sqrt(2/T) * 2 / freq; the total is independent of j.
    const double half_periods = static_cast<double>(j - 1);
    const double freq = half_periods * std::numbers::pi / horizon_;
    return half_periods * std::sqrt(2.0 / horizon_) * 2.0 / freq;
}

}  // namespace chaos_spde
