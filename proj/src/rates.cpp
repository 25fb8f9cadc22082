#include "chaos_spde/rates.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "chaos_spde/basis.hpp"
#include "chaos_spde/wick.hpp"

namespace chaos_spde {

TailJ tail_J_bound(double T, std::size_t J, std::size_t terms) {
    if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (J < 1) throw std::invalid_argument("J must be positive");
    const TimeBasis basis(T, J);
    TailJ out;
    const double pi2 = std::numbers::pi * std::numbers::pi;
    for (std::size_t j = J + 1; j <= J + terms; ++j) {
        const double l1 = basis.l1_norm(j);
        out.partial_sum += l1 * l1;
        const double n = static_cast<double>(j - 1);
        out.sup_partial_sum += 2.0 * T / (pi2 * n * n);
    }
    out.analytic_bound = 4.0 * T / (pi2 * static_cast<double>(J));
    out.within_bound = out.partial_sum <= out.analytic_bound;
    return out;
}

double tail_I(const std::vector<double>& eigenvalues, std::size_t I) {
    double sum = 0.0;
    for (std::size_t i = I; i < eigenvalues.size(); ++i) {
        if (eigenvalues[i] < 0.0) throw std::invalid_argument("eigenvalues must be nonnegative");
        sum += eigenvalues[i];
    }
    return sum;
}

double log_k_term(double C_S, double C_FB, double T, unsigned K) {
    if (C_S < 0.0 || C_FB < 0.0 || !(T > 0.0)) throw std::invalid_argument("k_term needs C_S, C_FB >= 0 and T > 0");
    const double c = C_S * C_FB;
    if (c == 0.0) return -std::numeric_limits<double>::infinity();
    const double log_base = std::log(c) + 0.5 * std::log(T) + c * T;
    const double n = static_cast<double>(K) + 1.0;
    return n * log_base - 0.5 * std::lgamma(n + 1.0);
}

double k_term(double C_S, double C_FB, double T, unsigned K) { return std::exp(log_k_term(C_S, C_FB, T, K)); }

double k_term_crossover(double C_S, double C_FB, double T) {
    const double c = C_S * C_FB;
    const double base = c * std::sqrt(T) * std::exp(c * T);
    return std::ceil(base * base);
}

RateReport rate_report(const SpdeProblem& problem, std::uint32_t I, std::uint32_t J, std::uint32_t K, double C_S,
                       double C_FB) {
    RateReport report;
    report.I = I;
    report.J = J;
    report.K = K;
    report.C_S = C_S;
    report.C_FB = C_FB;
    report.tail_I = tail_I(problem.eigenvalues(), I);
    report.tail_J = tail_J_bound(problem.horizon(), J);
    report.k_term = k_term(C_S, C_FB, problem.horizon(), K);
    report.cardinality = index_set_size(I, J, K);
    return report;
}

}  // namespace chaos_spde
