#pragma once

#include <cmath>
#include <vector>

#include "leakest/gaussian.hpp"
#include "leakest/histogram.hpp"
#include "leakest/rng.hpp"

namespace test_helpers {

// 1-D histogram on [0, 1] with prescribed (possibly fractional) counts, for
// exercising the bin-wise formulas directly.
inline leakest::HistogramGrid grid_from_counts(const std::vector<double>& counts, double total) {
    leakest::HistogramGrid g;
    g.d = 1;
    g.k = counts.size();
    g.range.dims = {{0.0, 1.0}};
    g.edges.resize(1);
    g.edges[0].resize(g.k + 1);
    for (std::size_t i = 0; i <= g.k; ++i)
        g.edges[0][i] = static_cast<double>(i) / static_cast<double>(g.k);
    g.total = total;
    g.dense = true;
    g.counts = counts;
    return g;
}

inline leakest::HistogramGrid grid_from_counts(const std::vector<double>& counts) {
    double total = 0.0;
    for (double c : counts) total += c;
    return grid_from_counts(counts, total);
}

// random symmetric positive definite covariance via A A^T + eps I
inline leakest::GaussianSpec random_gaussian(std::size_t d, leakest::SplitMix64& gen,
                                             double mean_scale = 1.0) {
    leakest::GaussianSpec g;
    g.mean = Eigen::VectorXd(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
        g.mean[static_cast<Eigen::Index>(i)] = mean_scale * (2.0 * gen.next_uniform01() - 1.0);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = 2.0 * gen.next_uniform01() - 1.0;
    g.covariance = a * a.transpose() + 0.05 * Eigen::MatrixXd::Identity(a.rows(), a.cols());
    return g;
}

inline double column_mean(const leakest::SampleMatrix& s, std::size_t j) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) m += s(i, j);
    return m / static_cast<double>(s.n);
}

inline double column_covariance(const leakest::SampleMatrix& s, std::size_t a, std::size_t b) {
    const double ma = column_mean(s, a), mb = column_mean(s, b);
    double c = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) c += (s(i, a) - ma) * (s(i, b) - mb);
    return c / static_cast<double>(s.n - 1);
}

}  // namespace test_helpers
