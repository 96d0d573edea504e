#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "leakest/common.hpp"
#include "leakest/hist_divergence.hpp"

namespace leakest {

// One inter-divergence relation, stated as lhs <= rhs.
struct BoundRelation {
    std::string id;
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;  // lhs <= rhs + tolerance
    double slack = 0.0;      // rhs - lhs
    bool skipped = false;
    std::string note;
};

struct BoundReport {
    std::vector<BoundRelation> relations;

    bool all_satisfied() const {
        for (const auto& r : relations)
            if (!r.skipped && !r.satisfied) return false;
        return true;
    }
    const BoundRelation* find(const std::string& id) const {
        for (const auto& r : relations)
            if (r.id == id) return &r;
        return nullptr;
    }
};

// Cross-checks estimator outputs against the analytic relations:
//   js <= tv <= 1            (js in base 2)
//   tv <= sqrt(kl / 2)       (Pinsker; kl in nats)
//   tv <= sqrt(1 - e^{-kl})  (Bretagnolle-Huber)
//   tv * d_min <= w1 <= diam * tv
// The units matter, so kl must arrive flagged as nats and js flagged as
// base 2; a wrongly flagged value is refused rather than converted.
inline BoundReport check_relations(const DivergenceValue& kl, const DivergenceValue& tv,
                                   const DivergenceValue& js_base2, double w1, double d_min,
                                   double diam, double tol) {
    if (kl.kind != DivergenceKind::KL || kl.log_base != LogBase::natural)
        throw ParameterError("check_relations: kl must be a KL value in nats");
    if (tv.kind != DivergenceKind::TV)
        throw ParameterError("check_relations: tv must be a TV value");
    if (js_base2.kind != DivergenceKind::JS || js_base2.log_base != LogBase::base2)
        throw ParameterError("check_relations: js must be a JS value in base 2");
    for (double v : {kl.value, tv.value, js_base2.value, w1, d_min})
        if (v < 0.0 || std::isnan(v))
            throw ParameterError("check_relations: inputs must be nonnegative");
    if (diam < 0.0 || std::isnan(diam))
        throw ParameterError("check_relations: diam must be nonnegative");

    BoundReport report;
    auto add = [&](std::string id, double lhs, double rhs, bool skipped = false,
                   std::string note = "") {
        BoundRelation r;
        r.id = std::move(id);
        r.lhs = lhs;
        r.rhs = rhs;
        r.satisfied = lhs <= rhs + tol;
        r.slack = rhs - lhs;
        r.skipped = skipped;
        r.note = std::move(note);
        report.relations.push_back(std::move(r));
    };

    add("js_le_tv", js_base2.value, tv.value);
    add("tv_le_one", tv.value, 1.0);
    add("tv_le_pinsker", tv.value, std::sqrt(0.5 * kl.value));
    add("tv_le_bretagnolle_huber", tv.value, std::sqrt(-std::expm1(-kl.value)));
    add("tv_dmin_le_w1", tv.value * d_min, w1, d_min == 0.0,
        d_min == 0.0 ? "vacuous: d_min = 0" : "");
    if (std::isinf(diam))
        add("w1_le_diam_tv", w1, std::numeric_limits<double>::infinity(), true,
            "skipped: diam is infinite");
    else
        add("w1_le_diam_tv", w1, diam * tv.value);
    return report;
}

}  // namespace leakest
