#include <doctest.h>

#include <cmath>
#include <sstream>

#include "leakest/harness.hpp"
#include "leakest/oracles.hpp"

using namespace leakest;

namespace {

EstimateRecord rec(const char* est, std::size_t n, std::size_t bins, std::size_t trial,
                   double value) {
    EstimateRecord r;
    r.estimator = est;
    r.n_samples = n;
    r.bins = bins;
    r.trial = trial;
    r.value = value;
    r.runtime_seconds = 0.5;
    return r;
}

}  // namespace

TEST_CASE("summarize: single trial has zero std") {
    const auto rows = summarize({rec("kl-hist", 100, 8, 0, 2.5)});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].trials_ok == 1);
    CHECK(rows[0].mean == 2.5);
    CHECK(rows[0].std_dev == 0.0);
}

TEST_CASE("summarize: mean 2, std sqrt(2) for values {1,3}") {
    const auto rows =
        summarize({rec("kl-hist", 100, 8, 0, 1.0), rec("kl-hist", 100, 8, 1, 3.0)});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].mean == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(rows[0].std_dev == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("summarize keeps skipped trials out of the stats but keeps the reason") {
    EstimateRecord bad = rec("w1-lp", 100, 8, 1, 0.0);
    bad.skipped = true;
    bad.skip_reason = "cost matrix guard";
    const auto rows = summarize({rec("w1-lp", 100, 8, 0, 0.4), bad});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].trials_ok == 1);
    CHECK(rows[0].trials_total == 2);
    CHECK(rows[0].mean == 0.4);
    CHECK(rows[0].skip_reason == "cost matrix guard");
}

TEST_CASE("emit_csv: empty input produces the header only") {
    std::ostringstream os;
    emit_csv(std::vector<SummaryRow>{}, os);
    const std::string s = os.str();
    CHECK(s.rfind("estimator,n_samples,bins,mean,std,", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 1);
}

TEST_CASE("emit_csv: one group yields a two-line file with 9 significant digits") {
    const auto rows = summarize({rec("tv-hist", 1000, 24, 0, 0.123456789123)});
    std::ostringstream os;
    emit_csv(rows, os);
    const std::string s = os.str();
    CHECK(std::count(s.begin(), s.end(), '\n') == 2);
    CHECK(s.find("tv-hist,1000,24,0.123456789,") != std::string::npos);
}

TEST_CASE("emit_csv rows are ordered by estimator, then n, then bins") {
    std::vector<EstimateRecord> records{
        rec("tv-hist", 500, 8, 0, 0.2), rec("kl-hist", 1000, 8, 0, 0.1),
        rec("kl-hist", 500, 16, 0, 0.3), rec("kl-hist", 500, 8, 0, 0.4)};
    std::ostringstream os;
    emit_csv(summarize(records), os);
    const std::string s = os.str();
    const auto a = s.find("kl-hist,500,8");
    const auto b = s.find("kl-hist,500,16");
    const auto c = s.find("kl-hist,1000,8");
    const auto d = s.find("tv-hist,500,8");
    CHECK(a != std::string::npos);
    CHECK(a < b);
    CHECK(b < c);
    CHECK(c < d);
}

TEST_CASE("run_sweep produces one record per estimator, sweep point and trial") {
    SweepSpec spec;
    spec.scenario = {ScenarioKind::Share, 1.0, 10.0, 0};
    spec.estimators = {Estimator::KlHist, Estimator::TvHist};
    spec.sample_span = {500, 1000};
    spec.bin_span = {8};
    spec.trials = 3;
    spec.seed_base = 10;
    const auto records = run_sweep(spec);
    CHECK(records.size() == 2 * 2 * 3);
    for (const auto& r : records) {
        CHECK_FALSE(r.skipped);
        CHECK(std::isfinite(r.value));
        CHECK(r.hist_build_seconds >= 0.0);
    }
}

TEST_CASE("resource-guarded cells are skipped with a reason, siblings survive") {
    SweepSpec spec;
    spec.scenario = {ScenarioKind::ThreePartyMult, 1.0, 10.0, 0};
    spec.estimators = {Estimator::KlHist, Estimator::W1Lp};
    spec.sample_span = {2000};
    spec.bin_span = {8};  // 8^5 = 32768 bins -> cost matrix guard trips
    spec.trials = 2;
    const auto records = run_sweep(spec);
    REQUIRE(records.size() == 4);
    for (const auto& r : records) {
        if (r.estimator == "w1-lp") {
            CHECK(r.skipped);
            CHECK(r.skip_reason.find("cost matrix guard") != std::string::npos);
        } else {
            CHECK_FALSE(r.skipped);
            CHECK(std::isfinite(r.value));
        }
    }
}

TEST_CASE("sweeps re-run bit-identically, also across worker counts") {
    SweepSpec spec;
    spec.scenario = {ScenarioKind::Share, 1.0, 10.0, 99};
    spec.estimators = {Estimator::KlHist, Estimator::JsHist, Estimator::W1Sinkhorn,
                       Estimator::KlKnn};
    spec.sample_span = {400, 900};
    spec.bin_span = {6};
    spec.trials = 2;
    spec.seed_base = 5;
    const auto a = run_sweep(spec);
    const auto b = run_sweep(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].estimator == b[i].estimator);
        CHECK((a[i].value == b[i].value ||
               (std::isnan(a[i].value) && std::isnan(b[i].value))));
    }
    SweepSpec par = spec;
    par.workers = 3;
    const auto c = run_sweep(par);
    REQUIRE(c.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK((a[i].value == c[i].value ||
               (std::isnan(a[i].value) && std::isnan(c[i].value))));
}

TEST_CASE("histogram estimators in one cell share one grid pair") {
    // kl/tv/js and transport values must come from identical discretizations;
    // with a shared grid the discrete-metric identity ties tv to the LP
    SweepSpec spec;
    spec.scenario = {ScenarioKind::Share, 1.0, 10.0, 3};
    spec.estimators = {Estimator::TvHist, Estimator::W1Lp};
    spec.sample_span = {3000};
    spec.bin_span = {10};
    spec.trials = 1;
    const auto records = run_sweep(spec);
    REQUIRE(records.size() == 2);
    // identical grid diagonal recorded on both estimators' records
    CHECK(records[0].grid_diag == records[1].grid_diag);
    CHECK(records[0].grid_diag > 0.0);
}

TEST_CASE("analytic relations hold on a real share run at N=1e5") {
    SweepSpec spec;
    spec.scenario = {ScenarioKind::Share, 1.0, 10.0, 0};
    spec.estimators = {Estimator::KlHist, Estimator::TvHist, Estimator::JsHist, Estimator::W1Lp};
    spec.sample_span = {100000};
    spec.bin_span = {24};
    spec.trials = 3;
    spec.seed_base = 70;
    const auto rows = summarize(run_sweep(spec));
    auto mean_of = [&rows](const char* est) {
        for (const auto& r : rows)
            if (r.estimator == est) return r.mean;
        return std::numeric_limits<double>::quiet_NaN();
    };
    const double kl = mean_of("kl-hist");
    const double tv = mean_of("tv-hist");
    const double js = mean_of("js-hist");
    const double w1 = mean_of("w1-lp");
    double diag = 0.0;
    for (const auto& r : rows) diag = std::max(diag, r.mean_grid_diag);

    const BoundReport rep = check_relations(
        {DivergenceKind::KL, kl, LogBase::natural}, {DivergenceKind::TV, tv, LogBase::natural},
        {DivergenceKind::JS, nats_to_bits(js), LogBase::base2}, w1, 0.0, diag, 0.01);
    CHECK(rep.all_satisfied());

    // empirical W1 stays below the exact W2 of the scenario's Gaussian pair
    const double w2 = gaussian_w2(share_joint_gaussian(1.0, 10.0),
                                  share_marginals_gaussian(1.0, 10.0));
    CHECK(w1 <= w2 + 0.02);
}

TEST_CASE("presets: desk caps the histogram span, paper keeps the full span") {
    const SweepPreset desk = desk_preset();
    const SweepPreset paper = paper_preset();
    CHECK(desk.hist_sample_span.back() == 1000000);
    CHECK(paper.hist_sample_span.back() == 100000000);
    CHECK(desk.bin_sweep_samples == 1000000);
    CHECK(paper.bin_sweep_samples == 10000000);
    CHECK(desk.sample_based_span == paper.sample_based_span);
    CHECK(desk.bin_span == paper.bin_span);
}

TEST_CASE("estimator names round-trip") {
    for (Estimator e : {Estimator::KlHist, Estimator::TvHist, Estimator::JsHist, Estimator::W1Lp,
                        Estimator::W1Sinkhorn, Estimator::KlKnn, Estimator::Mmd})
        CHECK(parse_estimator(estimator_name(e)) == e);
    CHECK_THROWS_AS(parse_estimator("nope"), ParameterError);
}
