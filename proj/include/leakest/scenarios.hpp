#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "leakest/common.hpp"
#include "leakest/gaussian.hpp"
#include "leakest/rng.hpp"

namespace leakest {

// Two leakage setups over real-number secret shares:
//   Share          observe one share (x, x - r) of a secret x
//   ThreePartyMult party 1's view of a three-party product computation
enum class ScenarioKind { Share, ThreePartyMult };

inline const char* scenario_name(ScenarioKind k) {
    return k == ScenarioKind::Share ? "share" : "three-party-mult";
}

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::Share;
    double sigma_x_sq = 1.0;   // variance of the secret(s)
    double sigma_r_sq = 10.0;  // variance of the masking noise
    std::uint64_t seed = 0;
};

inline void validate_scenario(const ScenarioSpec& s, const char* who = "scenario") {
    if (!(s.sigma_x_sq > 0.0) || !std::isfinite(s.sigma_x_sq))
        throw ParameterError(std::string(who) + ": sigma_x_sq must be > 0");
    if (!(s.sigma_r_sq > 0.0) || !std::isfinite(s.sigma_r_sq))
        throw ParameterError(std::string(who) + ": sigma_r_sq must be > 0");
}

inline std::size_t scenario_dim(ScenarioKind k) {
    return k == ScenarioKind::Share ? 2u : 5u;
}

namespace detail {

// Unvalidated core samplers. Zero variances are accepted here so tests can
// drive the degenerate all-zero case directly.
inline SampleMatrix sample_joint_impl(const ScenarioSpec& scn, std::size_t n) {
    const double sx = std::sqrt(scn.sigma_x_sq);
    const double sr = std::sqrt(scn.sigma_r_sq);
    NormalStream stream(scn.seed);
    if (scn.kind == ScenarioKind::Share) {
        // Row: (x, x - r); draws per row are (x, r) in that order.
        SampleMatrix out(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = sx * stream.next();
            const double r = sr * stream.next();
            out(i, 0) = x;
            out(i, 1) = x - r;
        }
        return out;
    }
    // Row: (s, 2s - rs, 2t - rt, rt*rs, (-s + 2rs) * (-t + 2rt));
    // draws per row are (s, t, rs, rt) in that order.
    SampleMatrix out(n, 5);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = sx * stream.next();
        const double t = sx * stream.next();
        const double rs = sr * stream.next();
        const double rt = sr * stream.next();
        out(i, 0) = s;
        out(i, 1) = 2.0 * s - rs;
        out(i, 2) = 2.0 * t - rt;
        out(i, 3) = rt * rs;
        out(i, 4) = (-s + 2.0 * rs) * (-t + 2.0 * rt);
    }
    return out;
}

}  // namespace detail

// Samples of the joint distribution (secret in column 0, view in the rest).
inline SampleMatrix sample_joint(const ScenarioSpec& scn, std::size_t n) {
    if (n < 1) throw ParameterError("sample_joint: n must be >= 1");
    validate_scenario(scn, "sample_joint");
    return detail::sample_joint_impl(scn, n);
}

// Samples of the product of marginals: two independent joint batches, the
// secret column spliced from the first, the view columns from the second.
// Marginals are exact by construction and the secret is independent of the
// view. Sub-seeds derive from scn.seed via derive_seed(seed, 1) and (seed, 2).
inline SampleMatrix sample_product_of_marginals(const ScenarioSpec& scn, std::size_t n) {
    if (n < 1) throw ParameterError("sample_product_of_marginals: n must be >= 1");
    validate_scenario(scn, "sample_product_of_marginals");
    ScenarioSpec a = scn;
    a.seed = derive_seed(scn.seed, 1);
    ScenarioSpec b = scn;
    b.seed = derive_seed(scn.seed, 2);
    SampleMatrix secret = detail::sample_joint_impl(a, n);
    SampleMatrix view = detail::sample_joint_impl(b, n);
    for (std::size_t i = 0; i < n; ++i) view(i, 0) = secret(i, 0);
    return view;
}

// Test hook: the share scenario's per-row (x, r) pairs, exposing the masking
// noise so callers can verify column2 == column1 - r exactly.
struct ShareComponents {
    std::vector<double> x;
    std::vector<double> r;
};

inline ShareComponents share_components(const ScenarioSpec& scn, std::size_t n) {
    if (scn.kind != ScenarioKind::Share)
        throw ParameterError("share_components: only defined for the share scenario");
    const double sx = std::sqrt(scn.sigma_x_sq);
    const double sr = std::sqrt(scn.sigma_r_sq);
    NormalStream stream(scn.seed);
    ShareComponents out;
    out.x.resize(n);
    out.r.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.x[i] = sx * stream.next();
        out.r[i] = sr * stream.next();
    }
    return out;
}

// Closed-form joint and product-of-marginals distributions for the share
// scenario (zero means).
inline GaussianSpec share_joint_gaussian(double sigma_x_sq, double sigma_r_sq) {
    GaussianSpec g;
    g.mean = Eigen::VectorXd::Zero(2);
    g.covariance.resize(2, 2);
    g.covariance << sigma_x_sq, sigma_x_sq, sigma_x_sq, sigma_x_sq + sigma_r_sq;
    return g;
}

inline GaussianSpec share_marginals_gaussian(double sigma_x_sq, double sigma_r_sq) {
    GaussianSpec g;
    g.mean = Eigen::VectorXd::Zero(2);
    g.covariance.resize(2, 2);
    g.covariance << sigma_x_sq, 0.0, 0.0, sigma_x_sq + sigma_r_sq;
    return g;
}

}  // namespace leakest
