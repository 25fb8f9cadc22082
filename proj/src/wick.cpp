#include "chaos_spde/wick.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "chaos_spde/rng.hpp"

namespace chaos_spde {

double hermite(unsigned n, double s) {
    if (n == 0) {
        return 1.0;
    }
    double prev = 1.0;
    double cur = s;
    for (unsigned k = 1; k < n; ++k) {
        const double next = s * cur - static_cast<double>(k) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

std::uint64_t factorial(unsigned n) {
    if (n > 20) {
        throw std::overflow_error("factorial: n! exceeds 64 bits for n > 20");
    }
    std::uint64_t acc = 1;
    for (unsigned k = 2; k <= n; ++k) {
        acc *= k;
    }
    return acc;
}

// ---------------------------------------------------------------- MultiIndex

MultiIndex MultiIndex::unit(std::uint32_t i, std::uint32_t j) {
    MultiIndex alpha;
    alpha.set(i, j, 1);
    return alpha;
}

void MultiIndex::set(std::uint32_t i, std::uint32_t j, std::uint32_t degree) {
    if (i == 0 || j == 0) {
        throw std::out_of_range("MultiIndex: coordinates are 1-based");
    }
    auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{i, j},
                               [](const Entry& e, const std::pair<std::uint32_t, std::uint32_t>& key) {
                                   return std::pair{e.i, e.j} < key;
                               });
    const bool present = it != entries_.end() && it->i == i && it->j == j;
    if (present) {
        order_ -= it->degree;
        if (degree == 0) {
            entries_.erase(it);
        } else {
            it->degree = degree;
        }
    } else if (degree != 0) {
        entries_.insert(it, Entry{i, j, degree});
    }
    order_ += degree;
}

std::uint32_t MultiIndex::get(std::uint32_t i, std::uint32_t j) const {
    for (const auto& e : entries_) {
        if (e.i == i && e.j == j) {
            return e.degree;
        }
    }
    return 0;
}

std::uint64_t MultiIndex::factorial() const {
    std::uint64_t acc = 1;
    for (const auto& e : entries_) {
        const std::uint64_t f = chaos_spde::factorial(e.degree);
        if (acc > std::numeric_limits<std::uint64_t>::max() / f) {
            throw std::overflow_error("MultiIndex: alpha! overflows 64 bits");
        }
        acc *= f;
    }
    return acc;
}

std::uint32_t MultiIndex::max_i() const {
    std::uint32_t m = 0;
    for (const auto& e : entries_) m = std::max(m, e.i);
    return m;
}

std::uint32_t MultiIndex::max_j() const {
    std::uint32_t m = 0;
    for (const auto& e : entries_) m = std::max(m, e.j);
    return m;
}

std::string MultiIndex::to_string() const {
    if (entries_.empty()) {
        return "0";
    }
    std::ostringstream out;
    for (const auto& e : entries_) {
        out << '(' << e.i << ',' << e.j << ")^" << e.degree;
    }
    return out.str();
}

MultiIndex MultiIndex::parse(const std::string& text) {
    MultiIndex alpha;
    if (text == "0") {
        return alpha;
    }
    std::istringstream in(text);
    char open = 0, comma = 0, close = 0, caret = 0;
    std::uint32_t i = 0, j = 0, degree = 0;
    while (in >> open) {
        if (!(in >> i >> comma >> j >> close >> caret >> degree) || open != '(' || comma != ',' ||
            close != ')' || caret != '^' || degree == 0) {
            throw std::invalid_argument("MultiIndex: cannot parse '" + text + "'");
        }
        if (alpha.get(i, j) != 0) {
            throw std::invalid_argument("MultiIndex: repeated entry in '" + text + "'");
        }
        alpha.set(i, j, degree);
    }
    if (alpha.is_zero()) {
        throw std::invalid_argument("MultiIndex: cannot parse '" + text + "'");
    }
    return alpha;
}

bool MultiIndex::operator<(const MultiIndex& other) const {
    return std::lexicographical_compare(
        entries_.begin(), entries_.end(), other.entries_.begin(), other.entries_.end(),
        [](const Entry& a, const Entry& b) {
            return std::tuple{a.i, a.j, a.degree} < std::tuple{b.i, b.j, b.degree};
        });
}

// ------------------------------------------------------------------ IndexSet

std::uint64_t index_set_size(std::uint32_t I, std::uint32_t J, std::uint32_t K, std::uint64_t limit) {
    if (I == 0 || J == 0) {
        throw std::invalid_argument("index_set_size: I and J must be positive");
    }
    // C(n + K, K) built incrementally; each partial product is itself a binomial coefficient.
    const std::uint64_t n = static_cast<std::uint64_t>(I) * J;
    std::uint64_t acc = 1;
    for (std::uint64_t k = 1; k <= K; ++k) {
        const unsigned __int128 next = static_cast<unsigned __int128>(acc) * (n + k) / k;
        if (next > limit) {
            throw std::overflow_error("index_set_size: |J_{I,J,K}| exceeds limit " + std::to_string(limit));
        }
        acc = static_cast<std::uint64_t>(next);
    }
    return acc;
}

namespace {

void enumerate_degree(std::vector<std::uint32_t>& degrees, std::size_t slot, std::uint32_t remaining,
                      std::uint32_t J, std::vector<MultiIndex>& out) {
    if (slot + 1 == degrees.size()) {
        degrees[slot] = remaining;
        MultiIndex alpha;
        for (std::size_t s = 0; s < degrees.size(); ++s) {
            if (degrees[s] != 0) {
                alpha.set(static_cast<std::uint32_t>(s / J + 1), static_cast<std::uint32_t>(s % J + 1),
                          degrees[s]);
            }
        }
        out.push_back(std::move(alpha));
        return;
    }
    for (std::uint32_t d = remaining + 1; d-- > 0;) {
        degrees[slot] = d;
        enumerate_degree(degrees, slot + 1, remaining - d, J, out);
    }
    degrees[slot] = 0;
}

}  // namespace

IndexSet::IndexSet(std::uint32_t I, std::uint32_t J, std::uint32_t K) : I_(I), J_(J), K_(K) {
    const std::uint64_t expected = index_set_size(I, J, K);
    indices_.reserve(expected);
    std::vector<std::uint32_t> degrees(static_cast<std::size_t>(I) * J, 0);
    for (std::uint32_t k = 0; k <= K; ++k) {
        enumerate_degree(degrees, 0, k, J, indices_);
    }
    for (std::size_t p = 0; p < indices_.size(); ++p) {
        position_.emplace(indices_[p], p);
    }
}

std::size_t IndexSet::find(const MultiIndex& alpha) const {
    const auto it = position_.find(alpha);
    return it == position_.end() ? indices_.size() : it->second;
}

// ------------------------------------------------------------- GaussianPanel

GaussianPanel::GaussianPanel(std::uint32_t I, std::uint32_t J, std::size_t scenarios, std::uint64_t seed)
    : I_(I), J_(J), seed_(seed) {
    if (I == 0 || J == 0 || scenarios == 0) {
        throw std::invalid_argument("GaussianPanel: I, J and scenario count must be positive");
    }
    draws_.resize(static_cast<Eigen::Index>(scenarios), static_cast<Eigen::Index>(I) * J);
    for (std::size_t m = 0; m < scenarios; ++m) {
        for (std::uint32_t i = 1; i <= I; ++i) {
            for (std::uint32_t j = 1; j <= J; ++j) {
                draws_(static_cast<Eigen::Index>(m), (i - 1) * J + (j - 1)) = counter_normal(seed, m, i, j);
            }
        }
    }
}

double GaussianPanel::xi(std::size_t m, std::uint32_t i, std::uint32_t j) const {
    if (i < 1 || i > I_ || j < 1 || j > J_ || m >= scenarios()) {
        throw std::out_of_range("GaussianPanel: cell outside panel");
    }
    return draws_(static_cast<Eigen::Index>(m), (i - 1) * J_ + (j - 1));
}

double wick_eval(const MultiIndex& alpha, const GaussianPanel& panel, std::size_t m) {
    if (alpha.max_i() > panel.I() || alpha.max_j() > panel.J()) {
        throw std::out_of_range("wick_eval: index support " + alpha.to_string() + " exceeds panel");
    }
    if (m >= panel.scenarios()) {
        throw std::out_of_range("wick_eval: scenario outside panel");
    }
    double prod = 1.0;
    for (const auto& e : alpha.entries()) {
        prod *= hermite(e.degree, panel.xi(m, e.i, e.j));
    }
    return prod / std::sqrt(static_cast<double>(alpha.factorial()));
}

Eigen::MatrixXd wick_matrix(const IndexSet& indices, const GaussianPanel& panel,
                            std::span<const std::size_t> scenarios) {
    if (indices.I() > panel.I() || indices.J() > panel.J()) {
        throw std::out_of_range("wick_matrix: index set exceeds panel dimensions");
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(scenarios.size()), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t r = 0; r < scenarios.size(); ++r) {
        for (std::size_t k = 0; k < indices.size(); ++k) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
                wick_eval(indices[k], panel, scenarios[r]);
        }
    }
    return out;
}

Eigen::MatrixXd wick_matrix(const IndexSet& indices, const GaussianPanel& panel) {
    std::vector<std::size_t> all(panel.scenarios());
    for (std::size_t m = 0; m < all.size(); ++m) all[m] = m;
    return wick_matrix(indices, panel, all);
}

Eigen::VectorXd brownian_path(const GaussianPanel& panel, const TimeBasis& basis,
                              std::span<const double> eigenvalues, std::size_t m, double t) {
    if (eigenvalues.size() < panel.I()) {
        throw std::invalid_argument("brownian_path: fewer eigenvalues than Brownian coordinates");
    }
    if (basis.count() < panel.J()) {
        throw std::invalid_argument("brownian_path: time basis shorter than panel J");
    }
    std::vector<double> antiderivative(panel.J());
    for (std::uint32_t j = 1; j <= panel.J(); ++j) {
        antiderivative[j - 1] = basis.integral(j, t);
    }
    Eigen::VectorXd w(panel.I());
    for (std::uint32_t i = 1; i <= panel.I(); ++i) {
        if (eigenvalues[i - 1] < 0.0) {
            throw std::invalid_argument("brownian_path: negative eigenvalue");
        }
        double acc = 0.0;
        for (std::uint32_t j = 1; j <= panel.J(); ++j) {
            acc += panel.xi(m, i, j) * antiderivative[j - 1];
        }
        w(i - 1) = std::sqrt(eigenvalues[i - 1]) * acc;
    }
    return w;
}

}  // namespace chaos_spde
