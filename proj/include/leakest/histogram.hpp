#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "leakest/common.hpp"

namespace leakest {

// Dense bin storage is used up to this many bins; larger grids fall back to a
// sparse map keyed by the flat bin index. Operations that must materialize one
// value per bin (probability vectors, centers) require a dense grid.
inline constexpr std::size_t kDefaultBinBudget = 20'000'000;

struct BinRange {
    // (lo, hi) per dimension
    std::vector<std::pair<double, double>> dims;

    std::size_t d() const { return dims.size(); }
};

inline void validate_range(const BinRange& r, const char* who = "bin range") {
    if (r.dims.empty()) throw ParameterError(std::string(who) + ": empty range");
    for (const auto& [lo, hi] : r.dims) {
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
            throw ParameterError(std::string(who) + ": each dimension needs finite lo < hi");
    }
}

// Pooled per-dimension (min, max) over both sample sets, widened by a 1e-9
// relative margin so boundary-valued samples land inside the outer bins.
// Using the union of both sets gives the two histograms identical grids,
// which the bin-wise divergence formulas require.
inline BinRange joint_range(const SampleMatrix& a, const SampleMatrix& b) {
    validate_samples(a, "joint_range(a)");
    validate_samples(b, "joint_range(b)");
    if (a.d != b.d) throw ParameterError("joint_range: dimension mismatch");

    BinRange r;
    r.dims.resize(a.d);
    for (std::size_t j = 0; j < a.d; ++j) {
        double lo = a(0, j), hi = a(0, j);
        for (std::size_t i = 0; i < a.n; ++i) {
            lo = std::min(lo, a(i, j));
            hi = std::max(hi, a(i, j));
        }
        for (std::size_t i = 0; i < b.n; ++i) {
            lo = std::min(lo, b(i, j));
            hi = std::max(hi, b(i, j));
        }
        double margin = 1e-9 * (hi - lo);
        if (margin <= 0.0) margin = 1e-9 * std::max(1.0, std::abs(lo));
        r.dims[j] = {lo - margin, hi + margin};
    }
    return r;
}

struct HistogramGrid {
    std::size_t d = 0;
    std::size_t k = 0;  // bins per dimension, total k^d
    BinRange range;
    std::vector<std::vector<double>> edges;  // d lists of k+1 edges
    double total = 0.0;                      // N

    bool dense = true;
    std::vector<double> counts;                              // dense storage
    std::unordered_map<std::uint64_t, double> sparse_counts; // sparse storage

    std::size_t num_bins() const {
        std::size_t n = 1;
        for (std::size_t j = 0; j < d; ++j) n *= k;
        return n;
    }

    double count_at(std::uint64_t flat) const {
        if (dense) return counts[flat];
        auto it = sparse_counts.find(flat);
        return it == sparse_counts.end() ? 0.0 : it->second;
    }

    bool same_grid(const HistogramGrid& o) const {
        return d == o.d && k == o.k && edges == o.edges;
    }

    double bin_volume() const {
        double v = 1.0;
        for (std::size_t j = 0; j < d; ++j)
            v *= (range.dims[j].second - range.dims[j].first) / static_cast<double>(k);
        return v;
    }
};

namespace detail {

// k^d with overflow guard; throws once the flat index space cannot be indexed.
inline std::uint64_t checked_bin_count(std::size_t k, std::size_t d, const char* who) {
    std::uint64_t n = 1;
    for (std::size_t j = 0; j < d; ++j) {
        if (n > (std::uint64_t{1} << 62) / k)
            throw ResourceError(std::string(who) + ": k^d exceeds the 2^62 flat-index limit");
        n *= k;
    }
    return n;
}

inline std::uint64_t flat_bin_index(const HistogramGrid& g, const double* row) {
    std::uint64_t flat = 0;
    for (std::size_t j = 0; j < g.d; ++j) {
        const auto [lo, hi] = g.range.dims[j];
        const double w = (hi - lo) / static_cast<double>(g.k);
        auto idx = static_cast<std::int64_t>(std::floor((row[j] - lo) / w));
        // out-of-range samples clip into the boundary bins, keeping sum(counts) == N
        if (idx < 0) idx = 0;
        if (idx >= static_cast<std::int64_t>(g.k)) idx = static_cast<std::int64_t>(g.k) - 1;
        flat = flat * g.k + static_cast<std::uint64_t>(idx);
    }
    return flat;
}

}  // namespace detail

// Equal-width histogram of the samples on the given range. Counts are stored
// densely when k^d fits the budget, sparsely above it. Row-major bin order:
// dimension 0 varies slowest.
inline HistogramGrid build_histogram(const SampleMatrix& s, std::size_t k, const BinRange& range,
                                     std::size_t bin_budget = kDefaultBinBudget) {
    validate_samples(s, "build_histogram");
    validate_range(range, "build_histogram");
    if (k < 1) throw ParameterError("build_histogram: k must be >= 1");
    if (range.d() != s.d) throw ParameterError("build_histogram: range dimension mismatch");

    HistogramGrid g;
    g.d = s.d;
    g.k = k;
    g.range = range;
    g.total = static_cast<double>(s.n);
    g.edges.resize(s.d);
    for (std::size_t j = 0; j < s.d; ++j) {
        const auto [lo, hi] = range.dims[j];
        const double w = (hi - lo) / static_cast<double>(k);
        g.edges[j].resize(k + 1);
        for (std::size_t i = 0; i <= k; ++i) g.edges[j][i] = lo + w * static_cast<double>(i);
        g.edges[j][k] = hi;
    }

    const std::uint64_t nbins = detail::checked_bin_count(k, s.d, "build_histogram");
    g.dense = nbins <= bin_budget;
    if (g.dense) g.counts.assign(nbins, 0.0);

    for (std::size_t i = 0; i < s.n; ++i) {
        const std::uint64_t flat = detail::flat_bin_index(g, s.row(i));
        if (g.dense)
            g.counts[flat] += 1.0;
        else
            g.sparse_counts[flat] += 1.0;
    }
    return g;
}

// Midpoints of every bin, one d-dimensional point per bin, in flat-index order.
inline SampleMatrix bin_centers(const HistogramGrid& g) {
    if (!g.dense)
        throw ResourceError("bin_centers: grid is sparse (k^d above the bin budget)");
    const std::size_t n = g.num_bins();
    SampleMatrix out(n, g.d);
    std::vector<std::size_t> idx(g.d, 0);
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::uint64_t rem = flat;
        for (std::size_t j = g.d; j-- > 0;) {
            idx[j] = rem % g.k;
            rem /= g.k;
        }
        for (std::size_t j = 0; j < g.d; ++j)
            out(flat, j) = 0.5 * (g.edges[j][idx[j]] + g.edges[j][idx[j] + 1]);
    }
    return out;
}

inline std::vector<double> to_probability_vector(const HistogramGrid& g) {
    if (g.total < 1.0) throw ParameterError("to_probability_vector: empty histogram");
    if (!g.dense)
        throw ResourceError("to_probability_vector: grid is sparse (k^d above the bin budget)");
    std::vector<double> p(g.counts.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = g.counts[i] / g.total;
    return p;
}

// Count-wise sum of two histograms on the same grid.
inline HistogramGrid merge_histograms(const HistogramGrid& a, const HistogramGrid& b) {
    if (!a.same_grid(b)) throw ParameterError("merge_histograms: grids differ");
    HistogramGrid out = a;
    out.total += b.total;
    if (a.dense && b.dense) {
        for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += b.counts[i];
    } else if (!a.dense && !b.dense) {
        for (const auto& [flat, c] : b.sparse_counts) out.sparse_counts[flat] += c;
    } else {
        throw ParameterError("merge_histograms: mixed dense/sparse storage");
    }
    return out;
}

// Debug dump: one line per nonzero bin, "i0,...,id-1,count".
inline void dump_histogram_csv(const HistogramGrid& g, std::ostream& os) {
    std::vector<std::uint64_t> flats;
    if (g.dense) {
        for (std::uint64_t f = 0; f < g.counts.size(); ++f)
            if (g.counts[f] != 0.0) flats.push_back(f);
    } else {
        flats.reserve(g.sparse_counts.size());
        for (const auto& [f, c] : g.sparse_counts) flats.push_back(f);
        std::sort(flats.begin(), flats.end());
    }
    for (std::uint64_t f : flats) {
        std::uint64_t rem = f;
        std::vector<std::uint64_t> idx(g.d);
        for (std::size_t j = g.d; j-- > 0;) {
            idx[j] = rem % g.k;
            rem /= g.k;
        }
        for (std::size_t j = 0; j < g.d; ++j) os << idx[j] << ',';
        os << g.count_at(f) << '\n';
    }
}

}  // namespace leakest
