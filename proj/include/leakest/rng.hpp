#pragma once

#include <cmath>
#include <cstdint>

#include "leakest/common.hpp"

namespace leakest {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over std::mt19937 because the
// algorithm is fixed by its published constants, so a port in any language can
// reproduce the streams exactly. Identity string for output metadata below.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform on the open interval (0,1): 53 high bits plus a half-ulp offset,
    // so the inverse normal CDF below never sees 0 or 1.
    double next_uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

  private:
    std::uint64_t state_;
};

// Sub-stream derivation: one extra SplitMix64 scramble of seed mixed with the
// stream index. Independent streams for e.g. the two batches behind the
// product-of-marginals sampler.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace detail {

// Inverse of the standard normal CDF, algorithm AS 241 (Wichura 1988),
// double-precision branch. Deterministic: only polynomial arithmetic,
// sqrt and log, so streams are reproducible across platforms.
inline double inverse_normal_cdf(double p) {
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        z = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        z = num / den;
    }
    return (q < 0.0) ? -z : z;
}

}  // namespace detail

// Stream of standard normal variates: SplitMix64 uniforms pushed through the
// AS 241 inverse CDF, one uniform per draw.
class NormalStream {
  public:
    explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

    double next() { return detail::inverse_normal_cdf(gen_.next_uniform01()); }

  private:
    SplitMix64 gen_;
};

// Recorded in JSON/CSV metadata so consumers know which streams to replicate.
inline const char* rng_identity() { return "splitmix64+as241-inverse-normal-cdf"; }

}  // namespace leakest
