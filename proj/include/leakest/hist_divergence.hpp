#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "leakest/common.hpp"
#include "leakest/histogram.hpp"

namespace leakest {

// Bin-wise divergence estimators on paired histograms sharing one grid.
// Conventions: 0 log 0 := 0, and empty q-bins facing nonzero p-bins are
// filled with kEmptyBinFill raw counts before the KL log ratio.
inline constexpr double kEmptyBinFill = 1e-8;

enum class DivergenceKind { KL, TV, JS };

struct DivergenceValue {
    DivergenceKind kind;
    double value;
    LogBase log_base;
};

inline DivergenceValue convert_base(const DivergenceValue& v, LogBase target) {
    if (v.log_base == target || v.kind == DivergenceKind::TV) return {v.kind, v.value, target};
    const double scaled =
        target == LogBase::base2 ? nats_to_bits(v.value) : bits_to_nats(v.value);
    return {v.kind, scaled, target};
}

namespace detail {

inline void require_paired(const HistogramGrid& p, const HistogramGrid& q, const char* who) {
    if (!p.same_grid(q)) throw ParameterError(std::string(who) + ": histograms use different grids");
    if (p.total != q.total)
        throw ParameterError(std::string(who) + ": histograms have different sample counts");
    if (p.total < 1.0) throw ParameterError(std::string(who) + ": empty histograms");
}

// Applies fn(n_p, n_q) over every bin where either count is nonzero.
// Dense grids stream the arrays; sparse grids walk the sorted key union so
// the accumulation order is reproducible.
template <typename Fn>
inline void for_each_paired_bin(const HistogramGrid& p, const HistogramGrid& q, Fn&& fn) {
    if (p.dense) {
        for (std::size_t i = 0; i < p.counts.size(); ++i) {
            if (p.counts[i] != 0.0 || q.counts[i] != 0.0) fn(p.counts[i], q.counts[i]);
        }
        return;
    }
    std::vector<std::uint64_t> keys;
    keys.reserve(p.sparse_counts.size() + q.sparse_counts.size());
    for (const auto& [f, c] : p.sparse_counts) keys.push_back(f);
    for (const auto& [f, c] : q.sparse_counts) keys.push_back(f);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (std::uint64_t f : keys) fn(p.count_at(f), q.count_at(f));
}

inline double in_base(double nats, LogBase base) {
    return base == LogBase::natural ? nats : nats_to_bits(nats);
}

}  // namespace detail

// sum_i (n_p,i / N) log(n_p,i / n~_q,i), n~_q = max(n_q, fill).
inline DivergenceValue kl_hist(const HistogramGrid& p, const HistogramGrid& q,
                               LogBase base = LogBase::natural) {
    detail::require_paired(p, q, "kl_hist");
    const double n = p.total;
    CompensatedSum acc;
    detail::for_each_paired_bin(p, q, [&](double np, double nq) {
        if (np == 0.0) return;
        const double qfilled = std::max(nq, kEmptyBinFill);
        acc.add((np / n) * std::log(np / qfilled));
    });
    return {DivergenceKind::KL, detail::in_base(acc.value(), base), base};
}

// Half the L1 distance of the two probability vectors.
inline DivergenceValue tv_hist(const HistogramGrid& p, const HistogramGrid& q) {
    detail::require_paired(p, q, "tv_hist");
    const double n = p.total;
    CompensatedSum acc;
    detail::for_each_paired_bin(p, q, [&](double np, double nq) { acc.add(std::abs(np - nq)); });
    return {DivergenceKind::TV, 0.5 * acc.value() / n, LogBase::natural};
}

// 1/2 sum_i [ (n_p/N) log(2 n_p / (n_p+n_q)) + (n_q/N) log(2 n_q / (n_p+n_q)) ].
inline DivergenceValue js_hist(const HistogramGrid& p, const HistogramGrid& q,
                               LogBase base = LogBase::natural) {
    detail::require_paired(p, q, "js_hist");
    const double n = p.total;
    CompensatedSum acc;
    detail::for_each_paired_bin(p, q, [&](double np, double nq) {
        const double mix = np + nq;
        if (np != 0.0) acc.add((np / n) * std::log(2.0 * np / mix));
        if (nq != 0.0) acc.add((nq / n) * std::log(2.0 * nq / mix));
    });
    return {DivergenceKind::JS, detail::in_base(0.5 * acc.value(), base), base};
}

}  // namespace leakest
