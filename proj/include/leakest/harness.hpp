#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "leakest/bounds.hpp"
#include "leakest/common.hpp"
#include "leakest/hist_divergence.hpp"
#include "leakest/histogram.hpp"
#include "leakest/knn.hpp"
#include "leakest/mmd.hpp"
#include "leakest/scenarios.hpp"
#include "leakest/transport.hpp"

namespace leakest {

enum class Estimator { KlHist, TvHist, JsHist, W1Lp, W1Sinkhorn, KlKnn, Mmd };

inline const char* estimator_name(Estimator e) {
    switch (e) {
        case Estimator::KlHist: return "kl-hist";
        case Estimator::TvHist: return "tv-hist";
        case Estimator::JsHist: return "js-hist";
        case Estimator::W1Lp: return "w1-lp";
        case Estimator::W1Sinkhorn: return "w1-sinkhorn";
        case Estimator::KlKnn: return "kl-knn";
        case Estimator::Mmd: return "mmd";
    }
    return "?";
}

inline Estimator parse_estimator(const std::string& s) {
    for (Estimator e : {Estimator::KlHist, Estimator::TvHist, Estimator::JsHist, Estimator::W1Lp,
                        Estimator::W1Sinkhorn, Estimator::KlKnn, Estimator::Mmd})
        if (s == estimator_name(e)) return e;
    throw ParameterError("unknown estimator '" + s + "'");
}

inline bool is_histogram_based(Estimator e) {
    return e == Estimator::KlHist || e == Estimator::TvHist || e == Estimator::JsHist ||
           e == Estimator::W1Lp || e == Estimator::W1Sinkhorn;
}

struct EstimatorParams {
    double lambda = 700.0;  // Sinkhorn regularization strength
    double sinkhorn_tol = 1e-9;
    std::size_t sinkhorn_max_iter = 100000;
    std::size_t k = 5;      // neighbor order for kl-knn
    double sigma = 0.7071067811865476;
    std::size_t mmd_sample_cap = kDefaultMmdSampleCap;
    std::size_t bin_budget = kDefaultBinBudget;
    std::size_t cost_entry_guard = kDefaultCostEntryGuard;
};

struct SweepSpec {
    ScenarioSpec scenario;
    std::vector<Estimator> estimators;
    std::vector<std::size_t> sample_span;
    std::vector<std::size_t> bin_span;
    std::size_t trials = 10;
    std::uint64_t seed_base = 0;
    EstimatorParams params;
    std::size_t workers = 1;
};

inline void validate_sweep(const SweepSpec& s, const char* who = "sweep") {
    validate_scenario(s.scenario, who);
    if (s.estimators.empty()) throw ParameterError(std::string(who) + ": no estimators selected");
    if (s.sample_span.empty() || s.bin_span.empty())
        throw ParameterError(std::string(who) + ": sample and bin spans must be nonempty");
    if (s.trials < 1) throw ParameterError(std::string(who) + ": trials must be >= 1");
}

struct EstimateRecord {
    std::string estimator;
    std::size_t n_samples = 0;
    std::size_t bins = 0;
    std::size_t trial = 0;
    double value = std::numeric_limits<double>::quiet_NaN();
    double runtime_seconds = 0.0;
    double hist_build_seconds = 0.0;  // shared per cell, histogram estimators only
    double grid_diag = 0.0;           // diagonal of the binning box
    bool converged = true;            // transport only
    bool skipped = false;
    std::string skip_reason;
};

// Binning range for a sweep point: pooled range of a calibration draw keyed
// to (scenario, seed_base, n), so every trial of the sweep point bins on the
// same grid. Trial-local ranges would jitter the bin edges from seed to seed
// and put a variance floor under the histogram estimators that never decays
// with N; a trial-invariant grid keeps the trial spread a pure sampling
// effect. Trial samples falling outside the calibration range clip into the
// boundary bins.
inline BinRange sweep_point_range(const SweepSpec& spec, std::size_t n) {
    ScenarioSpec calib = spec.scenario;
    calib.seed = derive_seed(spec.seed_base, 0x52414E47u);  // disjoint from trial seeds
    const SampleMatrix joint = sample_joint(calib, n);
    const SampleMatrix prod = sample_product_of_marginals(calib, n);
    return joint_range(joint, prod);
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CellInputs {
    SampleMatrix joint;
    SampleMatrix prod;
    bool have_hists = false;
    HistogramGrid hp, hq;
    double hist_seconds = 0.0;
    double grid_diag = 0.0;
    std::string hist_error;
};

// One sweep cell: draw both sample sets, build the shared pair of histograms
// once, then run each requested estimator with its own timer.
inline std::vector<EstimateRecord> run_cell(const SweepSpec& spec, std::size_t n, std::size_t k,
                                            std::size_t trial, const BinRange* range) {
    ScenarioSpec scn = spec.scenario;
    scn.seed = spec.seed_base + trial;

    CellInputs in;
    in.joint = sample_joint(scn, n);
    in.prod = sample_product_of_marginals(scn, n);

    if (range != nullptr) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            in.hp = build_histogram(in.joint, k, *range, spec.params.bin_budget);
            in.hq = build_histogram(in.prod, k, *range, spec.params.bin_budget);
            in.have_hists = true;
            double diag2 = 0.0;
            for (const auto& [lo, hi] : range->dims) diag2 += (hi - lo) * (hi - lo);
            in.grid_diag = std::sqrt(diag2);
        } catch (const std::exception& ex) {
            in.hist_error = ex.what();
        }
        in.hist_seconds = seconds_since(t0);
    }

    // the transport problem (cost matrix + marginals) is shared between the
    // two transport estimators; its build time is charged to each
    bool have_tp = false;
    TransportProblem tp;
    double tp_seconds = 0.0;
    std::string tp_error;
    auto ensure_tp = [&]() {
        if (have_tp || !tp_error.empty()) return;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            tp = transport_problem_from_histograms(in.hp, in.hq, spec.params.cost_entry_guard);
            have_tp = true;
        } catch (const std::exception& ex) {
            tp_error = ex.what();
        }
        tp_seconds = seconds_since(t0);
    };

    std::vector<EstimateRecord> records;
    for (Estimator e : spec.estimators) {
        EstimateRecord rec;
        rec.estimator = estimator_name(e);
        rec.n_samples = n;
        rec.bins = k;
        rec.trial = trial;
        if (is_histogram_based(e)) {
            rec.hist_build_seconds = in.hist_seconds;
            rec.grid_diag = in.grid_diag;
            if (!in.have_hists) {
                rec.skipped = true;
                rec.skip_reason = in.hist_error;
                records.push_back(std::move(rec));
                continue;
            }
        }
        try {
            switch (e) {
                case Estimator::KlHist: {
                    const auto t0 = std::chrono::steady_clock::now();
                    rec.value = kl_hist(in.hp, in.hq).value;
                    rec.runtime_seconds = seconds_since(t0);
                    break;
                }
                case Estimator::TvHist: {
                    const auto t0 = std::chrono::steady_clock::now();
                    rec.value = tv_hist(in.hp, in.hq).value;
                    rec.runtime_seconds = seconds_since(t0);
                    break;
                }
                case Estimator::JsHist: {
                    const auto t0 = std::chrono::steady_clock::now();
                    rec.value = js_hist(in.hp, in.hq).value;
                    rec.runtime_seconds = seconds_since(t0);
                    break;
                }
                case Estimator::W1Lp: {
                    ensure_tp();
                    if (!have_tp) throw ResourceError(tp_error);
                    const auto t0 = std::chrono::steady_clock::now();
                    rec.value = solve_lp(tp).objective;
                    rec.runtime_seconds = seconds_since(t0) + tp_seconds;
                    break;
                }
                case Estimator::W1Sinkhorn: {
                    ensure_tp();
                    if (!have_tp) throw ResourceError(tp_error);
                    const auto t0 = std::chrono::steady_clock::now();
                    const TransportPlan plan = sinkhorn(tp, spec.params.lambda,
                                                        spec.params.sinkhorn_tol,
                                                        spec.params.sinkhorn_max_iter);
                    rec.value = plan.objective;
                    rec.converged = plan.converged;
                    rec.runtime_seconds = seconds_since(t0) + tp_seconds;
                    break;
                }
                case Estimator::KlKnn: {
                    KnnConfig cfg;
                    cfg.k = spec.params.k;
                    const auto t0 = std::chrono::steady_clock::now();
                    rec.value = kl_knn(in.joint, in.prod, cfg);
                    rec.runtime_seconds = seconds_since(t0);
                    break;
                }
                case Estimator::Mmd: {
                    KernelSpec ks;
                    ks.sigma = spec.params.sigma;
                    const auto t0 = std::chrono::steady_clock::now();
                    rec.value = mmd2_unbiased(in.joint, in.prod, ks, spec.params.mmd_sample_cap).value;
                    rec.runtime_seconds = seconds_since(t0);
                    break;
                }
            }
        } catch (const std::exception& ex) {
            rec.skipped = true;
            rec.skip_reason = ex.what();
            rec.value = std::numeric_limits<double>::quiet_NaN();
        }
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace detail

// Runs every (sample count x bin count x trial) cell. Trial t seeds the
// scenario with seed_base + t, so values are reproducible regardless of the
// worker count; failing cells are recorded as skipped and never abort the
// sweep. Sampling and histogram construction are timed separately from the
// estimator calls.
inline std::vector<EstimateRecord> run_sweep(const SweepSpec& spec) {
    validate_sweep(spec);

    bool any_hist = false;
    for (Estimator e : spec.estimators) any_hist = any_hist || is_histogram_based(e);

    // one calibration range per sample count, shared by every trial
    std::vector<std::pair<std::size_t, BinRange>> ranges;
    if (any_hist)
        for (std::size_t n : spec.sample_span)
            ranges.emplace_back(n, sweep_point_range(spec, n));
    auto range_for = [&ranges](std::size_t n) -> const BinRange* {
        for (const auto& [rn, r] : ranges)
            if (rn == n) return &r;
        return nullptr;
    };

    struct Cell {
        std::size_t n, k, trial;
    };
    std::vector<Cell> cells;
    for (std::size_t n : spec.sample_span)
        for (std::size_t k : spec.bin_span)
            for (std::size_t t = 0; t < spec.trials; ++t) cells.push_back({n, k, t});

    std::vector<std::vector<EstimateRecord>> per_cell(cells.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            per_cell[i] = detail::run_cell(spec, cells[i].n, cells[i].k, cells[i].trial,
                                           range_for(cells[i].n));
        }
    };
    if (spec.workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < spec.workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    std::vector<EstimateRecord> records;
    for (auto& block : per_cell)
        for (auto& r : block) records.push_back(std::move(r));
    std::sort(records.begin(), records.end(), [](const EstimateRecord& a, const EstimateRecord& b) {
        if (a.estimator != b.estimator) return a.estimator < b.estimator;
        if (a.n_samples != b.n_samples) return a.n_samples < b.n_samples;
        if (a.bins != b.bins) return a.bins < b.bins;
        return a.trial < b.trial;
    });
    return records;
}

struct SummaryRow {
    std::string estimator;
    std::size_t n_samples = 0;
    std::size_t bins = 0;
    std::size_t trials_ok = 0;
    std::size_t trials_total = 0;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std_dev = std::numeric_limits<double>::quiet_NaN();
    double mean_runtime_s = std::numeric_limits<double>::quiet_NaN();
    double mean_hist_build_s = std::numeric_limits<double>::quiet_NaN();
    double mean_grid_diag = 0.0;
    std::string skip_reason;  // first reason seen, when any trial was skipped
};

// Group statistics per (estimator, n, bins). Std uses the n-1 denominator and
// is 0 for a single trial.
inline std::vector<SummaryRow> summarize(const std::vector<EstimateRecord>& records) {
    std::vector<EstimateRecord> sorted = records;
    std::sort(sorted.begin(), sorted.end(), [](const EstimateRecord& a, const EstimateRecord& b) {
        if (a.estimator != b.estimator) return a.estimator < b.estimator;
        if (a.n_samples != b.n_samples) return a.n_samples < b.n_samples;
        if (a.bins != b.bins) return a.bins < b.bins;
        return a.trial < b.trial;
    });

    std::vector<SummaryRow> rows;
    std::size_t g = 0;
    while (g < sorted.size()) {
        std::size_t end = g;
        while (end < sorted.size() && sorted[end].estimator == sorted[g].estimator &&
               sorted[end].n_samples == sorted[g].n_samples && sorted[end].bins == sorted[g].bins)
            ++end;

        SummaryRow row;
        row.estimator = sorted[g].estimator;
        row.n_samples = sorted[g].n_samples;
        row.bins = sorted[g].bins;
        row.trials_total = end - g;
        double sum = 0.0, rt = 0.0, hb = 0.0, gd = 0.0;
        for (std::size_t i = g; i < end; ++i) {
            if (sorted[i].skipped) {
                if (row.skip_reason.empty()) row.skip_reason = sorted[i].skip_reason;
                continue;
            }
            ++row.trials_ok;
            sum += sorted[i].value;
            rt += sorted[i].runtime_seconds;
            hb += sorted[i].hist_build_seconds;
            gd += sorted[i].grid_diag;
        }
        if (row.trials_ok > 0) {
            const double n = static_cast<double>(row.trials_ok);
            row.mean = sum / n;
            row.mean_runtime_s = rt / n;
            row.mean_hist_build_s = hb / n;
            row.mean_grid_diag = gd / n;
            double ss = 0.0;
            for (std::size_t i = g; i < end; ++i) {
                if (sorted[i].skipped) continue;
                const double dv = sorted[i].value - row.mean;
                ss += dv * dv;
            }
            row.std_dev = row.trials_ok == 1 ? 0.0 : std::sqrt(ss / (n - 1.0));
        }
        rows.push_back(std::move(row));
        g = end;
    }
    return rows;
}

inline constexpr double kCsvBoundTolerance = 0.01;  // finite-sample slack for the bound columns

namespace detail {

inline std::string fmt9(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace detail

// One row per summary group, ordered by (estimator, n, bins). Rows of a sweep
// point that produced kl/tv/js histogram means also carry the analytic bound
// checks as boolean columns; the W1 columns additionally need a w1-lp mean.
inline void emit_csv(const std::vector<SummaryRow>& summaries, std::ostream& os) {
    std::vector<SummaryRow> rows = summaries;
    std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
        if (a.estimator != b.estimator) return a.estimator < b.estimator;
        if (a.n_samples != b.n_samples) return a.n_samples < b.n_samples;
        return a.bins < b.bins;
    });

    os << "estimator,n_samples,bins,mean,std,mean_runtime_s,mean_hist_build_s,trials_ok,"
          "skip_reason,bound_js_le_tv,bound_tv_le_one,bound_tv_le_pinsker,"
          "bound_tv_le_bretagnolle_huber,bound_w1_le_diam_tv\n";

    auto find_mean = [&rows](const char* est, std::size_t n, std::size_t bins) {
        for (const auto& r : rows)
            if (r.estimator == est && r.n_samples == n && r.bins == bins && r.trials_ok > 0)
                return std::make_pair(true, r.mean);
        return std::make_pair(false, 0.0);
    };

    for (const auto& r : rows) {
        os << r.estimator << ',' << r.n_samples << ',' << r.bins << ','
           << detail::fmt9(r.trials_ok ? r.mean : std::numeric_limits<double>::quiet_NaN()) << ','
           << detail::fmt9(r.trials_ok ? r.std_dev : std::numeric_limits<double>::quiet_NaN()) << ','
           << detail::fmt9(r.trials_ok ? r.mean_runtime_s : std::numeric_limits<double>::quiet_NaN())
           << ','
           << detail::fmt9(r.trials_ok ? r.mean_hist_build_s
                                       : std::numeric_limits<double>::quiet_NaN())
           << ',' << r.trials_ok << ',' << detail::csv_quote(r.skip_reason);

        const auto [has_kl, kl] = find_mean("kl-hist", r.n_samples, r.bins);
        const auto [has_tv, tv] = find_mean("tv-hist", r.n_samples, r.bins);
        const auto [has_js, js] = find_mean("js-hist", r.n_samples, r.bins);
        const auto [has_w1, w1] = find_mean("w1-lp", r.n_samples, r.bins);
        std::string cols[5];
        if (has_kl && has_tv && has_js && kl >= 0.0 && js >= 0.0) {
            const BoundReport rep = check_relations(
                {DivergenceKind::KL, kl, LogBase::natural}, {DivergenceKind::TV, tv, LogBase::natural},
                {DivergenceKind::JS, nats_to_bits(js), LogBase::base2}, has_w1 ? w1 : 0.0, 0.0,
                r.mean_grid_diag > 0.0 ? r.mean_grid_diag : std::numeric_limits<double>::infinity(),
                kCsvBoundTolerance);
            auto flag = [&rep](const char* id) -> std::string {
                const BoundRelation* rel = rep.find(id);
                if (rel == nullptr || rel->skipped) return "";
                return rel->satisfied ? "true" : "false";
            };
            cols[0] = flag("js_le_tv");
            cols[1] = flag("tv_le_one");
            cols[2] = flag("tv_le_pinsker");
            cols[3] = flag("tv_le_bretagnolle_huber");
            if (has_w1) cols[4] = flag("w1_le_diam_tv");
        }
        for (const auto& c : cols) os << ',' << c;
        os << '\n';
    }
}

inline void emit_csv(const std::vector<SummaryRow>& summaries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ResourceError("emit_csv: cannot open '" + path + "' for writing");
    emit_csv(summaries, out);
    out.flush();
    if (!out) throw ResourceError("emit_csv: write to '" + path + "' failed");
}

// Sweep spans. The full spans mirror the reference experiments; the desk
// preset caps the histogram span at 10^6 samples and the bin sweep at 10^6
// so a full run finishes on a laptop.
struct SweepPreset {
    std::vector<std::size_t> hist_sample_span;
    std::vector<std::size_t> sample_based_span;
    std::vector<std::size_t> bin_span;
    std::size_t bin_sweep_samples = 0;
    std::size_t default_bins = 24;
};

inline SweepPreset paper_preset() {
    SweepPreset p;
    p.hist_sample_span = {100, 500, 1000, 2000, 3000, 5000, 10000, 100000, 1000000, 10000000, 100000000};
    p.sample_based_span = {100, 500, 1000, 2000, 3000, 4000, 5000, 7000, 10000, 20000};
    p.bin_span = {8, 10, 12, 16, 20, 24, 28, 30};
    p.bin_sweep_samples = 10000000;
    return p;
}

inline SweepPreset desk_preset() {
    SweepPreset p = paper_preset();
    while (!p.hist_sample_span.empty() && p.hist_sample_span.back() > 1000000)
        p.hist_sample_span.pop_back();
    p.bin_sweep_samples = 1000000;
    return p;
}

}  // namespace leakest
