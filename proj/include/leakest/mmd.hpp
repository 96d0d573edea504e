#pragma once

#include <cmath>
#include <span>
#include <string>

#include "leakest/common.hpp"

namespace leakest {

// Quadratic-cost estimators refuse sample sets above this size unless the
// caller raises the cap.
inline constexpr std::size_t kDefaultMmdSampleCap = 20'000;

enum class KernelKind { Gaussian };

struct KernelSpec {
    KernelKind kind = KernelKind::Gaussian;
    double sigma = 0.7071067811865476;  // sqrt(1/2)
};

inline void validate_kernel(const KernelSpec& ks, const char* who = "kernel") {
    if (!(ks.sigma > 0.0)) throw ParameterError(std::string(who) + ": sigma must be > 0");
}

// k(a, b) = exp(-||a - b||^2 / (2 sigma^2))
inline double kernel_eval(std::span<const double> a, std::span<const double> b,
                          const KernelSpec& ks) {
    validate_kernel(ks, "kernel_eval");
    if (a.size() != b.size() || a.empty())
        throw ParameterError("kernel_eval: points must share a nonzero dimension");
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        d2 += diff * diff;
    }
    return std::exp(-d2 / (2.0 * ks.sigma * ks.sigma));
}

// Unbiasedness makes small negative values legitimate; they are returned
// unclamped and flagged.
struct Mmd2Result {
    double value = 0.0;
    bool is_negative = false;
};

namespace detail {

// sum of k(a_i, b_j) over i < j within one set, doubled by the caller
inline double kernel_sum_within(const SampleMatrix& s, double inv_two_sigma_sq) {
    CompensatedSum total;
    for (std::size_t i = 0; i < s.n; ++i) {
        const double* ri = s.row(i);
        double block = 0.0;
        for (std::size_t j = i + 1; j < s.n; ++j) {
            const double* rj = s.row(j);
            double d2 = 0.0;
            for (std::size_t t = 0; t < s.d; ++t) {
                const double diff = ri[t] - rj[t];
                d2 += diff * diff;
            }
            block += std::exp(-d2 * inv_two_sigma_sq);
        }
        total.add(block);
    }
    return total.value();
}

inline double kernel_sum_cross(const SampleMatrix& x, const SampleMatrix& y,
                               double inv_two_sigma_sq) {
    CompensatedSum total;
    for (std::size_t i = 0; i < x.n; ++i) {
        const double* ri = x.row(i);
        double block = 0.0;
        for (std::size_t j = 0; j < y.n; ++j) {
            const double* rj = y.row(j);
            double d2 = 0.0;
            for (std::size_t t = 0; t < x.d; ++t) {
                const double diff = ri[t] - rj[t];
                d2 += diff * diff;
            }
            block += std::exp(-d2 * inv_two_sigma_sq);
        }
        total.add(block);
    }
    return total.value();
}

}  // namespace detail

// Unbiased squared maximum mean discrepancy:
//   1/(N(N-1)) sum_{i != j} k(x_i, x_j) + 1/(N(N-1)) sum_{i != j} k(y_i, y_j)
//   - 2/N^2 sum_{i,j} k(x_i, y_j)
inline Mmd2Result mmd2_unbiased(const SampleMatrix& x, const SampleMatrix& y, const KernelSpec& ks,
                                std::size_t sample_cap = kDefaultMmdSampleCap) {
    validate_samples(x, "mmd2_unbiased(x)");
    validate_samples(y, "mmd2_unbiased(y)");
    validate_kernel(ks, "mmd2_unbiased");
    if (x.d != y.d) throw ParameterError("mmd2_unbiased: dimension mismatch");
    if (x.n != y.n) throw ParameterError("mmd2_unbiased: sample counts must match");
    if (x.n < 2) throw ParameterError("mmd2_unbiased: need at least 2 samples per set");
    if (x.n > sample_cap)
        throw ResourceError("mmd2_unbiased: N=" + std::to_string(x.n) +
                            " exceeds the quadratic-cost cap of " + std::to_string(sample_cap));

    const double inv_two_sigma_sq = 1.0 / (2.0 * ks.sigma * ks.sigma);
    const double n = static_cast<double>(x.n);
    const double xx = 2.0 * detail::kernel_sum_within(x, inv_two_sigma_sq);
    const double yy = 2.0 * detail::kernel_sum_within(y, inv_two_sigma_sq);
    // canonical argument order keeps the summation order, and so the result,
    // exactly symmetric under swapping x and y
    const bool x_first = x.data <= y.data;
    const double xy = x_first ? detail::kernel_sum_cross(x, y, inv_two_sigma_sq)
                              : detail::kernel_sum_cross(y, x, inv_two_sigma_sq);

    const double value = (xx + yy) / (n * (n - 1.0)) - 2.0 * xy / (n * n);
    return {value, value < 0.0};
}

}  // namespace leakest
