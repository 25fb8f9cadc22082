#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chaos_spde/basis.hpp"

namespace chaos_spde {

/// Probabilists' Hermite polynomial h_n(s), by the three-term recurrence
/// h_{n+1}(s) = s h_n(s) - n h_{n-1}(s).
double hermite(unsigned n, double s);

/// n! in 64-bit arithmetic; throws std::overflow_error past 20!.
std::uint64_t factorial(unsigned n);

/// Finitely supported multi-index alpha = (alpha_{i,j}) over (Brownian coordinate i,
/// time-basis index j), both 1-based. Zero degrees are never stored.
class MultiIndex {
public:
    struct Entry {
        std::uint32_t i;
        std::uint32_t j;
        std::uint32_t degree;
        bool operator==(const Entry&) const = default;
    };

    MultiIndex() = default;

    /// Unit index epsilon(i, j).
    static MultiIndex unit(std::uint32_t i, std::uint32_t j);

    /// Sets alpha_{i,j}; a zero degree removes the entry.
    void set(std::uint32_t i, std::uint32_t j, std::uint32_t degree);
    std::uint32_t get(std::uint32_t i, std::uint32_t j) const;

    std::span<const Entry> entries() const { return entries_; }
    std::uint32_t order() const { return order_; }
    bool is_zero() const { return entries_.empty(); }

    /// alpha! = prod alpha_{i,j}!
    std::uint64_t factorial() const;

    std::uint32_t max_i() const;
    std::uint32_t max_j() const;

    /// "0" or e.g. "(1,2)^1(1,3)^2".
    std::string to_string() const;
    static MultiIndex parse(const std::string& text);

    bool operator==(const MultiIndex&) const = default;
    /// Strict weak order used for map keys (not the enumeration order).
    bool operator<(const MultiIndex& other) const;

private:
    std::vector<Entry> entries_;  // sorted by (i, j)
    std::uint32_t order_ = 0;
};

/// Cardinality (IJ+K)! / ((IJ)! K!) of the truncated index set; throws
/// std::overflow_error if it exceeds `limit`.
std::uint64_t index_set_size(std::uint32_t I, std::uint32_t J, std::uint32_t K,
                             std::uint64_t limit = 10'000'000);

/// Truncated index set J_{I,J,K}, in graded order: by |alpha|, then by the degree vector
/// flattened as (1,1),(1,2),...,(1,J),(2,1),... compared lexicographically with the larger
/// leading degree first. So the first entries are 0, eps(1,1), eps(1,2), ...
class IndexSet {
public:
    IndexSet(std::uint32_t I, std::uint32_t J, std::uint32_t K);

    std::uint32_t I() const { return I_; }
    std::uint32_t J() const { return J_; }
    std::uint32_t K() const { return K_; }
    std::size_t size() const { return indices_.size(); }
    const MultiIndex& operator[](std::size_t k) const { return indices_[k]; }
    const std::vector<MultiIndex>& indices() const { return indices_; }

    /// Position of alpha, or size() if absent.
    std::size_t find(const MultiIndex& alpha) const;

private:
    std::uint32_t I_, J_, K_;
    std::vector<MultiIndex> indices_;
    std::map<MultiIndex, std::size_t> position_;
};

inline std::vector<MultiIndex> enumerate_indices(std::uint32_t I, std::uint32_t J, std::uint32_t K) {
    return IndexSet(I, J, K).indices();
}

/// M1 scenarios of I*J i.i.d. standard normals xi_{i,j}(omega_m). Draws are a pure function of
/// (seed, m, i, j), so two panels with the same seed agree on every shared cell.
class GaussianPanel {
public:
    GaussianPanel(std::uint32_t I, std::uint32_t J, std::size_t scenarios, std::uint64_t seed);

    std::uint32_t I() const { return I_; }
    std::uint32_t J() const { return J_; }
    std::size_t scenarios() const { return static_cast<std::size_t>(draws_.rows()); }
    std::uint64_t seed() const { return seed_; }

    /// xi_{i,j}(omega_m), i and j 1-based, m 0-based.
    double xi(std::size_t m, std::uint32_t i, std::uint32_t j) const;

    /// Row m holds the I*J draws of scenario m, column (i-1)*J + (j-1).
    const Eigen::MatrixXd& draws() const { return draws_; }

private:
    std::uint32_t I_, J_;
    std::uint64_t seed_;
    Eigen::MatrixXd draws_;
};

/// Wick polynomial xi_alpha(omega_m) = prod h_{alpha_ij}(xi_ij) / sqrt(alpha!).
double wick_eval(const MultiIndex& alpha, const GaussianPanel& panel, std::size_t m);

/// Matrix of xi_alpha(omega_m) with one row per scenario and one column per index.
Eigen::MatrixXd wick_matrix(const IndexSet& indices, const GaussianPanel& panel);
/// Same, restricted to the listed scenarios.
Eigen::MatrixXd wick_matrix(const IndexSet& indices, const GaussianPanel& panel,
                            std::span<const std::size_t> scenarios);

/// Truncated Brownian coordinates (sqrt(lambda_i) sum_j xi_ij int_0^t g_j)_{i=1..I}.
Eigen::VectorXd brownian_path(const GaussianPanel& panel, const TimeBasis& basis,
                              std::span<const double> eigenvalues, std::size_t m, double t);

}  // namespace chaos_spde
