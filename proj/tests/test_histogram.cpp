#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "leakest/histogram.hpp"
#include "leakest/scenarios.hpp"
#include "test_helpers.hpp"

using namespace leakest;

namespace {

SampleMatrix samples_1d(const std::vector<double>& xs) {
    SampleMatrix s(xs.size(), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) s(i, 0) = xs[i];
    return s;
}

}  // namespace

TEST_CASE("joint_range widens the pooled min/max slightly") {
    const SampleMatrix a = samples_1d({0.0, 1.0});
    const BinRange r = joint_range(a, a);
    CHECK(r.dims[0].first < 0.0);
    CHECK(r.dims[0].first == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(r.dims[0].second > 1.0);
    CHECK(r.dims[0].second == doctest::Approx(1.0).epsilon(1e-8));

    const BinRange r2 = joint_range(samples_1d({0.0}), samples_1d({2.0}));
    CHECK(r2.dims[0].first == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(r2.dims[0].second == doctest::Approx(2.0).epsilon(1e-8));

    SampleMatrix b(1, 2);
    CHECK_THROWS_AS(joint_range(a, b), ParameterError);
}

TEST_CASE("joint_range from a large draw covers almost all fresh draws") {
    ScenarioSpec scn{ScenarioKind::Share, 1.0, 10.0, 41};
    const std::size_t n = 1000000;
    const SampleMatrix fitted = sample_joint(scn, n);
    const BinRange range = joint_range(fitted, fitted);

    ScenarioSpec fresh = scn;
    fresh.seed = 142;
    const SampleMatrix probe = sample_joint(fresh, n);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool ok = true;
        for (std::size_t j = 0; j < 2; ++j)
            ok = ok && probe(i, j) >= range.dims[j].first && probe(i, j) <= range.dims[j].second;
        inside += ok;
    }
    CHECK(static_cast<double>(inside) / static_cast<double>(n) >= 0.9999);
}

TEST_CASE("build_histogram bins by hand") {
    BinRange r;
    r.dims = {{0.0, 1.0}};
    const HistogramGrid g1 = build_histogram(samples_1d({0.1, 0.9}), 2, r);
    CHECK(g1.counts == std::vector<double>{1.0, 1.0});

    const HistogramGrid g2 = build_histogram(samples_1d({0.1, 0.2, 0.3, 0.9}), 2, r);
    CHECK(g2.counts == std::vector<double>{3.0, 1.0});
    CHECK(g2.total == 4.0);
}

TEST_CASE("out-of-range samples clip into the boundary bins") {
    BinRange r;
    r.dims = {{0.0, 1.0}};
    const HistogramGrid g = build_histogram(samples_1d({-5.0, 0.5, 7.0, 1.0}), 4, r);
    CHECK(g.counts[0] == 1.0);  // -5 clipped low
    CHECK(g.counts[3] == 2.0);  // 7 clipped high, 1.0 lands in the top bin
    const double total = std::accumulate(g.counts.begin(), g.counts.end(), 0.0);
    CHECK(total == 4.0);
}

TEST_CASE("share-scenario histogram at 24 bins per dim has 576 bins totaling N") {
    ScenarioSpec scn{ScenarioKind::Share, 1.0, 10.0, 9};
    const std::size_t n = 50000;
    const SampleMatrix joint = sample_joint(scn, n);
    const SampleMatrix prod = sample_product_of_marginals(scn, n);
    const BinRange range = joint_range(joint, prod);
    const HistogramGrid g = build_histogram(joint, 24, range);
    CHECK(g.counts.size() == 576);
    CHECK(std::accumulate(g.counts.begin(), g.counts.end(), 0.0) == static_cast<double>(n));
}

TEST_CASE("bin_centers: hand-checked layouts") {
    BinRange r1;
    r1.dims = {{0.0, 1.0}};
    const HistogramGrid g1 = build_histogram(samples_1d({0.5}), 2, r1);
    const SampleMatrix c1 = bin_centers(g1);
    CHECK(c1(0, 0) == doctest::Approx(0.25));
    CHECK(c1(1, 0) == doctest::Approx(0.75));

    BinRange r2;
    r2.dims = {{0.0, 1.0}, {0.0, 1.0}};
    SampleMatrix pt(1, 2);
    pt(0, 0) = pt(0, 1) = 0.5;
    const HistogramGrid g2 = build_histogram(pt, 2, r2);
    const SampleMatrix c2 = bin_centers(g2);
    REQUIRE(c2.n == 4);
    // flat order: dim 0 slowest
    CHECK(c2(0, 0) == doctest::Approx(0.25));
    CHECK(c2(0, 1) == doctest::Approx(0.25));
    CHECK(c2(1, 0) == doctest::Approx(0.25));
    CHECK(c2(1, 1) == doctest::Approx(0.75));
    CHECK(c2(3, 0) == doctest::Approx(0.75));
    CHECK(c2(3, 1) == doctest::Approx(0.75));

    BinRange r3;
    r3.dims = {{-2.0, 2.0}};
    const HistogramGrid g3 = build_histogram(samples_1d({0.0}), 4, r3);
    const SampleMatrix c3 = bin_centers(g3);
    CHECK(c3(0, 0) == doctest::Approx(-1.5));
    CHECK(c3(1, 0) == doctest::Approx(-0.5));
    CHECK(c3(2, 0) == doctest::Approx(0.5));
    CHECK(c3(3, 0) == doctest::Approx(1.5));
}

TEST_CASE("to_probability_vector normalizes counts") {
    const HistogramGrid g1 = test_helpers::grid_from_counts({1.0, 1.0});
    CHECK(to_probability_vector(g1) == std::vector<double>{0.5, 0.5});
    const HistogramGrid g2 = test_helpers::grid_from_counts({3.0, 1.0});
    CHECK(to_probability_vector(g2) == std::vector<double>{0.75, 0.25});
    const HistogramGrid g3 = test_helpers::grid_from_counts({0.0, 5.0, 0.0});
    const std::vector<double> p3 = to_probability_vector(g3);
    CHECK(p3 == std::vector<double>{0.0, 1.0, 0.0});

    HistogramGrid empty = test_helpers::grid_from_counts({0.0, 0.0});
    CHECK_THROWS_AS(to_probability_vector(empty), ParameterError);
}

TEST_CASE("row permutation leaves the histogram unchanged") {
    ScenarioSpec scn{ScenarioKind::Share, 1.0, 10.0, 13};
    const SampleMatrix s = sample_joint(scn, 4000);
    SampleMatrix rev(s.n, s.d);
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t j = 0; j < s.d; ++j) rev(i, j) = s(s.n - 1 - i, j);
    const BinRange range = joint_range(s, s);
    const HistogramGrid a = build_histogram(s, 10, range);
    const HistogramGrid b = build_histogram(rev, 10, range);
    CHECK(a.counts == b.counts);
}

TEST_CASE("merging histograms equals the histogram of concatenated samples") {
    ScenarioSpec scn{ScenarioKind::Share, 1.0, 10.0, 14};
    const SampleMatrix s1 = sample_joint(scn, 3000);
    ScenarioSpec scn2 = scn;
    scn2.seed = 15;
    const SampleMatrix s2 = sample_joint(scn2, 2000);
    SampleMatrix cat(5000, 2);
    std::copy(s1.data.begin(), s1.data.end(), cat.data.begin());
    std::copy(s2.data.begin(), s2.data.end(), cat.data.begin() + s1.data.size());

    const BinRange range = joint_range(cat, cat);
    const HistogramGrid a = build_histogram(s1, 12, range);
    const HistogramGrid b = build_histogram(s2, 12, range);
    const HistogramGrid m = merge_histograms(a, b);
    const HistogramGrid c = build_histogram(cat, 12, range);
    CHECK(m.counts == c.counts);
    CHECK(m.total == c.total);
}

TEST_CASE("densities integrate to one") {
    ScenarioSpec scn{ScenarioKind::Share, 1.0, 10.0, 16};
    const SampleMatrix s = sample_joint(scn, 20000);
    const BinRange range = joint_range(s, s);
    const HistogramGrid g = build_histogram(s, 24, range);
    const double vol = g.bin_volume();
    double integral = 0.0;
    for (double c : g.counts) integral += (c / (g.total * vol)) * vol;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sparse storage above the bin budget matches dense counts") {
    ScenarioSpec scn{ScenarioKind::Share, 1.0, 10.0, 17};
    const SampleMatrix s = sample_joint(scn, 2000);
    const BinRange range = joint_range(s, s);
    const HistogramGrid dense = build_histogram(s, 20, range);
    const HistogramGrid sparse = build_histogram(s, 20, range, /*bin_budget=*/10);
    REQUIRE_FALSE(sparse.dense);
    for (std::size_t f = 0; f < dense.counts.size(); ++f)
        CHECK(dense.counts[f] == sparse.count_at(f));
    CHECK_THROWS_AS(bin_centers(sparse), ResourceError);
    CHECK_THROWS_AS(to_probability_vector(sparse), ResourceError);
}

TEST_CASE("bin budget overflow guard") {
    SampleMatrix s(1, 8);
    for (std::size_t j = 0; j < 8; ++j) s(0, j) = 0.5;
    BinRange r;
    r.dims.assign(8, {0.0, 1.0});
    CHECK_THROWS_AS(build_histogram(s, 1000000, r), ResourceError);
}

TEST_CASE("histogram csv dump lists nonzero bins with multi-indices") {
    const HistogramGrid g = test_helpers::grid_from_counts({2.0, 0.0, 3.0});
    std::ostringstream os;
    dump_histogram_csv(g, os);
    CHECK(os.str() == "0,2\n2,3\n");
}
