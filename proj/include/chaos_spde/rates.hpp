#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chaos_spde/spde.hpp"

namespace chaos_spde {

struct TailJ {
    /// sum_{j=J+1}^{J+terms} ||g_j||_{L^1}^2
    double partial_sum = 0.0;
    /// 4T / (pi^2 J)
    double analytic_bound = 0.0;
    bool within_bound = false;
    /// sum_{j=J+1}^{J+terms} sup_t |int_0^t g_j|^2 = sum 2T / (pi^2 (j-1)^2), for comparison.
    double sup_partial_sum = 0.0;
};

TailJ tail_J_bound(double T, std::size_t J, std::size_t terms = 10'000);

/// sum_{i > I} lambda_i over the given eigenvalue list.
double tail_I(const std::vector<double>& eigenvalues, std::size_t I);

/// (C_S C_FB sqrt(T) e^{C_S C_FB T})^{K+1} / sqrt((K+1)!), evaluated in log space.
double k_term(double C_S, double C_FB, double T, unsigned K);
double log_k_term(double C_S, double C_FB, double T, unsigned K);

/// Smallest K beyond which k_term decreases: ceil(base^2) with base = C_S C_FB sqrt(T) e^{C_S C_FB T}.
double k_term_crossover(double C_S, double C_FB, double T);

struct RateReport {
    std::uint32_t I = 0, J = 0, K = 0;
    double tail_I = 0.0;
    TailJ tail_J;
    double k_term = 0.0;
    std::uint64_t cardinality = 0;
    double C_S = 1.0;
    double C_FB = 1.0;
};

RateReport rate_report(const SpdeProblem& problem, std::uint32_t I, std::uint32_t J, std::uint32_t K,
                       double C_S = 1.0, double C_FB = 1.0);

}  // namespace chaos_spde
