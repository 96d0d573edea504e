#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace leakest {

// Error taxonomy. Callers can catch the base std types or the specific kind.
struct ParameterError : std::invalid_argument {
    explicit ParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularityError : std::runtime_error {
    explicit SingularityError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateInputError : std::runtime_error {
    explicit DegenerateInputError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class LogBase { natural, base2 };

inline double nats_to_bits(double x) { return x / std::numbers::ln2; }
inline double bits_to_nats(double x) { return x * std::numbers::ln2; }

// N rows of d-dimensional real observations, row-major storage.
struct SampleMatrix {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> data;  // n * d, row-major

    SampleMatrix() = default;
    SampleMatrix(std::size_t n_, std::size_t d_) : n(n_), d(d_), data(n_ * d_, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * d + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * d + j]; }

    const double* row(std::size_t i) const { return data.data() + i * d; }
    double* row(std::size_t i) { return data.data() + i * d; }
};

inline void validate_samples(const SampleMatrix& s, const char* who) {
    if (s.n < 1) throw ParameterError(std::string(who) + ": need at least one sample row");
    if (s.d < 1) throw ParameterError(std::string(who) + ": dimension must be >= 1");
    if (s.data.size() != s.n * s.d)
        throw ParameterError(std::string(who) + ": sample buffer size does not match n*d");
    for (double v : s.data)
        if (!std::isfinite(v))
            throw ParameterError(std::string(who) + ": sample matrix contains non-finite entries");
}

// Small dense row-major matrix used by the transport module.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

// Neumaier-compensated accumulator. Summation order is fixed by the caller;
// the compensation keeps grouped/blocked reductions within ~1e-16 of each other.
class CompensatedSum {
  public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_total(const std::vector<double>& xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

}  // namespace leakest
