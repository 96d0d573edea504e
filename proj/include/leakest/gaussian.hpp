#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>

#include "leakest/common.hpp"
#include "leakest/rng.hpp"

namespace leakest {

// Eigenvalues of a symmetrized covariance may dip this far below zero before
// the matrix is rejected as non-PSD; anything in [-kPsdTolerance, 0) is
// clamped to zero when factorizing.
inline constexpr double kPsdTolerance = 1e-10;

struct GaussianSpec {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;

    std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

inline void validate_gaussian(const GaussianSpec& g, const char* who = "gaussian") {
    if (g.mean.size() < 1) throw ParameterError(std::string(who) + ": empty mean vector");
    if (g.covariance.rows() != g.mean.size() || g.covariance.cols() != g.mean.size())
        throw ParameterError(std::string(who) + ": covariance shape does not match mean length");
    const Eigen::MatrixXd sym = 0.5 * (g.covariance + g.covariance.transpose());
    const double asym = (g.covariance - g.covariance.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, g.covariance.cwiseAbs().maxCoeff());
    if (asym > 1e-9 * scale)
        throw ParameterError(std::string(who) + ": covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kPsdTolerance)
        throw ParameterError(std::string(who) + ": covariance is not positive semi-definite");
}

namespace detail {

// Lower-triangular factor L with L L^T = covariance. Cholesky when the matrix
// is positive definite, otherwise symmetric eigendecomposition with negative
// eigenvalues clamped at zero (tolerance kPsdTolerance).
inline Eigen::MatrixXd covariance_factor(const GaussianSpec& g) {
    const Eigen::MatrixXd sym = 0.5 * (g.covariance + g.covariance.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        throw SingularityError("covariance_factor: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -kPsdTolerance)
            throw ParameterError("covariance_factor: covariance is not positive semi-definite");
        if (ev[i] < 0.0) ev[i] = 0.0;
    }
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

}  // namespace detail

// I.i.d. draws from N(mean, covariance). Row i consumes exactly d consecutive
// variates of the seed's normal stream, so output is a pure function of
// (spec, n, seed).
inline SampleMatrix sample_gaussian(const GaussianSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ParameterError("sample_gaussian: n must be >= 1");
    validate_gaussian(spec, "sample_gaussian");
    const Eigen::MatrixXd L = detail::covariance_factor(spec);
    const std::size_t d = spec.dim();

    SampleMatrix out(n, d);
    NormalStream stream(seed);
    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) z[static_cast<Eigen::Index>(j)] = stream.next();
        const Eigen::VectorXd x = spec.mean + L * z;
        for (std::size_t j = 0; j < d; ++j) out(i, j) = x[static_cast<Eigen::Index>(j)];
    }
    return out;
}

}  // namespace leakest
