#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "leakest/common.hpp"
#include "leakest/gaussian.hpp"
#include "leakest/scenarios.hpp"

namespace leakest {

// Closed-form references for Gaussian pairs. KL values are in nats; the JS
// mixture bound follows the base-2 convention of the JS <= TV <= 1 chain.

// KL(p || q) = 1/2 (tr(Sq^-1 Sp) + (mq-mp)^T Sq^-1 (mq-mp) - d + ln det Sq/det Sp)
inline double gaussian_kl(const GaussianSpec& p, const GaussianSpec& q) {
    validate_gaussian(p, "gaussian_kl(p)");
    validate_gaussian(q, "gaussian_kl(q)");
    if (p.dim() != q.dim()) throw ParameterError("gaussian_kl: dimension mismatch");
    const auto d = static_cast<double>(p.dim());

    Eigen::LLT<Eigen::MatrixXd> lq(0.5 * (q.covariance + q.covariance.transpose()));
    if (lq.info() != Eigen::Success)
        throw SingularityError("gaussian_kl: q covariance is singular");
    Eigen::LLT<Eigen::MatrixXd> lp(0.5 * (p.covariance + p.covariance.transpose()));
    if (lp.info() != Eigen::Success)
        throw SingularityError("gaussian_kl: p covariance is singular");

    const double trace_term = lq.solve(p.covariance).trace();
    const Eigen::VectorXd dm = q.mean - p.mean;
    const double maha = dm.dot(lq.solve(dm));

    // log det via the Cholesky factors, avoids overflow of raw determinants
    double logdet_q = 0.0, logdet_p = 0.0;
    for (Eigen::Index i = 0; i < q.mean.size(); ++i) {
        logdet_q += 2.0 * std::log(lq.matrixLLT()(i, i));
        logdet_p += 2.0 * std::log(lp.matrixLLT()(i, i));
    }
    return 0.5 * (trace_term + maha - d + logdet_q - logdet_p);
}

// Exact leakage of the share scenario: 1/2 ln(1 + sx^2/sr^2), nats.
// sigma_x_sq == 0 is allowed as the no-secret limit and returns 0.
inline double share_scenario_kl(double sigma_x_sq, double sigma_r_sq) {
    if (!(sigma_x_sq >= 0.0) || !std::isfinite(sigma_x_sq))
        throw ParameterError("share_scenario_kl: sigma_x_sq must be >= 0");
    if (!(sigma_r_sq > 0.0) || !std::isfinite(sigma_r_sq))
        throw ParameterError("share_scenario_kl: sigma_r_sq must be > 0");
    return 0.5 * std::log1p(sigma_x_sq / sigma_r_sq);
}

namespace detail {

// Principal square root of a symmetric PSD matrix, eigenvalues clamped at 0.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* who) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    if (es.info() != Eigen::Success)
        throw SingularityError(std::string(who) + ": eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -kPsdTolerance)
            throw SingularityError(std::string(who) + ": matrix is not positive semi-definite");
        if (ev[i] < 0.0) ev[i] = 0.0;
    }
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

// Wasserstein-2 between Gaussians:
//   sqrt(||mp - mq||^2 + tr(S1 + S2 - 2 (S2^1/2 S1 S2^1/2)^1/2)).
// The mean-difference term extends the zero-mean formula in the usual way.
inline double gaussian_w2(const GaussianSpec& p, const GaussianSpec& q) {
    validate_gaussian(p, "gaussian_w2(p)");
    validate_gaussian(q, "gaussian_w2(q)");
    if (p.dim() != q.dim()) throw ParameterError("gaussian_w2: dimension mismatch");

    const Eigen::MatrixXd s2h = detail::psd_sqrt(q.covariance, "gaussian_w2");
    const Eigen::MatrixXd cross = detail::psd_sqrt(s2h * p.covariance * s2h, "gaussian_w2");
    const double tr = (p.covariance + q.covariance - 2.0 * cross).trace();
    const double mean_sq = (p.mean - q.mean).squaredNorm();
    // tiny negative traces are factorization noise
    return std::sqrt(std::max(0.0, tr + mean_sq));
}

// Upper bound on the JS comparison of two Gaussians via the mixture KL bound:
//   -1/2 log(1/2 (1 + e^{-KL(p||q)})) - 1/2 log(1/2 (1 + e^{-KL(q||p)})).
// Base-2 by default, matching the convention under which JS <= TV holds.
inline double js_upper_bound_gmm(const GaussianSpec& p, const GaussianSpec& q,
                                 LogBase base = LogBase::base2) {
    const double kl_pq = gaussian_kl(p, q);
    const double kl_qp = gaussian_kl(q, p);
    const double nats = -0.5 * std::log(0.5 * (1.0 + std::exp(-kl_pq))) -
                        0.5 * std::log(0.5 * (1.0 + std::exp(-kl_qp)));
    return base == LogBase::natural ? nats : nats_to_bits(nats);
}

// Pinsker and Bretagnolle-Huber upper bounds on TV from a KL value in nats.
struct TvUpperBounds {
    double pinsker;       // sqrt(kl / 2)
    double bretagnolle;   // sqrt(1 - e^{-kl})
    double min() const { return pinsker < bretagnolle ? pinsker : bretagnolle; }
};

inline TvUpperBounds tv_upper_bounds(double kl) {
    if (!(kl >= 0.0)) throw ParameterError("tv_upper_bounds: kl must be >= 0");
    return {std::sqrt(0.5 * kl), std::sqrt(-std::expm1(-kl))};
}

// Reference block for a share scenario: exact KL and W2, analytic TV/JS
// upper bounds (TV bound is the tighter of Pinsker and Bretagnolle-Huber,
// JS bound is base-2).
struct OracleReport {
    double kl_exact;
    double tv_upper;
    double js_upper;
    double w2_exact;
    double tv_upper_pinsker;
    double tv_upper_bretagnolle;
};

inline OracleReport share_oracle(double sigma_x_sq, double sigma_r_sq) {
    if (!(sigma_x_sq > 0.0) || !(sigma_r_sq > 0.0))
        throw ParameterError("share_oracle: variances must be > 0");
    const GaussianSpec joint = share_joint_gaussian(sigma_x_sq, sigma_r_sq);
    const GaussianSpec marg = share_marginals_gaussian(sigma_x_sq, sigma_r_sq);
    const double kl = share_scenario_kl(sigma_x_sq, sigma_r_sq);
    const TvUpperBounds tv = tv_upper_bounds(kl);
    OracleReport rep;
    rep.kl_exact = kl;
    rep.tv_upper = tv.min();
    rep.js_upper = js_upper_bound_gmm(joint, marg);
    rep.w2_exact = gaussian_w2(joint, marg);
    rep.tv_upper_pinsker = tv.pinsker;
    rep.tv_upper_bretagnolle = tv.bretagnolle;
    return rep;
}

}  // namespace leakest
