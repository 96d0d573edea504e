// Command-line driver: closed-form oracles, single estimation cells, and the
// sample-count / bin-count convergence sweeps with CSV output.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "leakest/leakest.hpp"

namespace {

using nlohmann::json;

struct CliOptions {
    std::string scenario = "share";
    double sigma_x_sq = 1.0;
    double sigma_r_sq = 10.0;
    std::uint64_t seed = 0;
    std::vector<std::string> metrics;
    std::size_t bins = 24;
    std::size_t n = 100000;
    std::size_t trials = 10;
    double lambda = 700.0;
    double sinkhorn_tol = 1e-9;
    std::size_t sinkhorn_max_iter = 100000;
    std::size_t k = 5;
    double sigma = 0.7071067811865476;
    std::size_t workers = 1;
    std::vector<std::size_t> n_span;
    std::vector<std::size_t> bin_span;
    std::string out;
    std::string preset;
    std::string config;
    std::string dump_histogram;
    std::string dump_plan;
    bool bins_given = false;  // set by flag or config; presets fill the rest
    bool n_given = false;
};

// Every subcommand takes the same flag set; unused ones are ignored.
struct BoundOptions {
    CLI::Option* scenario = nullptr;
    CLI::Option* sigma_x_sq = nullptr;
    CLI::Option* sigma_r_sq = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* metric = nullptr;
    CLI::Option* bins = nullptr;
    CLI::Option* n = nullptr;
    CLI::Option* trials = nullptr;
    CLI::Option* lambda = nullptr;
    CLI::Option* sinkhorn_tol = nullptr;
    CLI::Option* sinkhorn_max_iter = nullptr;
    CLI::Option* k = nullptr;
    CLI::Option* sigma = nullptr;
    CLI::Option* workers = nullptr;
    CLI::Option* n_span = nullptr;
    CLI::Option* bin_span = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* preset = nullptr;
};

BoundOptions add_common_options(CLI::App* cmd, CliOptions& o) {
    BoundOptions b;
    b.scenario = cmd->add_option("--scenario", o.scenario, "share or three-party-mult");
    b.sigma_x_sq = cmd->add_option("--sigma-x-sq", o.sigma_x_sq, "secret variance");
    b.sigma_r_sq = cmd->add_option("--sigma-r-sq", o.sigma_r_sq, "masking noise variance");
    b.seed = cmd->add_option("--seed", o.seed, "base RNG seed (trial t uses seed+t)");
    b.metric = cmd->add_option("--metric", o.metrics,
                               "estimator, repeatable: kl-hist tv-hist js-hist w1-lp "
                               "w1-sinkhorn kl-knn mmd");
    b.bins = cmd->add_option("--bins", o.bins, "bins per dimension");
    b.n = cmd->add_option("--n", o.n, "samples per trial");
    b.trials = cmd->add_option("--trials", o.trials, "trials per sweep point");
    b.lambda = cmd->add_option("--lambda", o.lambda, "Sinkhorn regularization strength");
    b.sinkhorn_tol = cmd->add_option("--sinkhorn-tol", o.sinkhorn_tol,
                                     "Sinkhorn L-inf marginal tolerance");
    b.sinkhorn_max_iter =
        cmd->add_option("--sinkhorn-max-iter", o.sinkhorn_max_iter, "Sinkhorn iteration cap");
    b.k = cmd->add_option("--k", o.k, "neighbor order for kl-knn");
    b.sigma = cmd->add_option("--sigma", o.sigma, "Gaussian kernel width for mmd");
    b.workers = cmd->add_option("--workers", o.workers, "parallel sweep workers");
    b.n_span = cmd->add_option("--n-span", o.n_span, "explicit sample-count span");
    b.bin_span = cmd->add_option("--bin-span", o.bin_span, "explicit bin-count span");
    b.out = cmd->add_option("--out", o.out, "CSV output path (default: stdout)");
    b.preset = cmd->add_option("--preset", o.preset, "span preset: desk or paper")
                   ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--config", o.config, "JSON config file; flags override its keys");
    return b;
}

// Config file values fill in whatever was not passed on the command line.
void apply_config(const BoundOptions& b, CliOptions& o) {
    o.bins_given = b.bins->count() > 0;
    o.n_given = b.n->count() > 0;
    if (o.config.empty()) return;
    std::ifstream in(o.config);
    if (!in) throw leakest::ParameterError("cannot open config file '" + o.config + "'");
    json cfg = json::parse(in);

    auto set_if_missing = [&](CLI::Option* opt, auto& field, const char* key) {
        if (opt != nullptr && opt->count() == 0 && cfg.contains(key))
            field = cfg.at(key).get<std::decay_t<decltype(field)>>();
    };
    if (b.scenario->count() == 0) {
        if (cfg.contains("scenario")) o.scenario = cfg.at("scenario").get<std::string>();
        else if (cfg.contains("kind")) o.scenario = cfg.at("kind").get<std::string>();
    }
    set_if_missing(b.sigma_x_sq, o.sigma_x_sq, "sigma_x_sq");
    set_if_missing(b.sigma_r_sq, o.sigma_r_sq, "sigma_r_sq");
    set_if_missing(b.seed, o.seed, "seed");
    set_if_missing(b.bins, o.bins, "bins");
    set_if_missing(b.n, o.n, "n");
    if (cfg.contains("bins")) o.bins_given = true;
    if (cfg.contains("n")) o.n_given = true;
    set_if_missing(b.trials, o.trials, "trials");
    set_if_missing(b.lambda, o.lambda, "lambda");
    set_if_missing(b.sinkhorn_tol, o.sinkhorn_tol, "sinkhorn_tol");
    set_if_missing(b.sinkhorn_max_iter, o.sinkhorn_max_iter, "sinkhorn_max_iter");
    set_if_missing(b.k, o.k, "k");
    set_if_missing(b.sigma, o.sigma, "sigma");
    set_if_missing(b.workers, o.workers, "workers");
    set_if_missing(b.out, o.out, "out");
    set_if_missing(b.preset, o.preset, "preset");
    set_if_missing(b.n_span, o.n_span, "n_span");
    set_if_missing(b.bin_span, o.bin_span, "bin_span");
    if (b.metric->count() == 0 && cfg.contains("metric")) {
        o.metrics.clear();
        const json& m = cfg.at("metric");
        if (m.is_string()) o.metrics.push_back(m.get<std::string>());
        else for (const auto& v : m) o.metrics.push_back(v.get<std::string>());
    }
}

leakest::ScenarioKind parse_scenario(const std::string& s) {
    if (s == "share") return leakest::ScenarioKind::Share;
    if (s == "three-party-mult" || s == "threepartymult" || s == "3mult")
        return leakest::ScenarioKind::ThreePartyMult;
    throw leakest::ParameterError("unknown scenario '" + s + "'");
}

leakest::ScenarioSpec make_scenario(const CliOptions& o) {
    leakest::ScenarioSpec scn;
    scn.kind = parse_scenario(o.scenario);
    scn.sigma_x_sq = o.sigma_x_sq;
    scn.sigma_r_sq = o.sigma_r_sq;
    scn.seed = o.seed;
    leakest::validate_scenario(scn, "scenario");
    return scn;
}

leakest::EstimatorParams make_params(const CliOptions& o) {
    leakest::EstimatorParams p;
    p.lambda = o.lambda;
    p.sinkhorn_tol = o.sinkhorn_tol;
    p.sinkhorn_max_iter = o.sinkhorn_max_iter;
    p.k = o.k;
    p.sigma = o.sigma;
    return p;
}

std::vector<leakest::Estimator> parse_metrics(const std::vector<std::string>& names,
                                              std::vector<leakest::Estimator> fallback) {
    if (names.empty()) return fallback;
    std::vector<leakest::Estimator> out;
    for (const auto& s : names) out.push_back(leakest::parse_estimator(s));
    return out;
}

void write_csv(const std::vector<leakest::SummaryRow>& rows, const std::string& out) {
    if (out.empty())
        leakest::emit_csv(rows, std::cout);
    else
        leakest::emit_csv(rows, out);
}

int run_oracle(const CliOptions& o) {
    if (parse_scenario(o.scenario) != leakest::ScenarioKind::Share) {
        std::cerr << "oracle: closed forms exist only for the share scenario\n";
        return 2;
    }
    const leakest::OracleReport rep = leakest::share_oracle(o.sigma_x_sq, o.sigma_r_sq);
    json j;
    j["scenario"] = "share";
    j["sigma_x_sq"] = o.sigma_x_sq;
    j["sigma_r_sq"] = o.sigma_r_sq;
    j["kl_exact"] = rep.kl_exact;
    j["tv_upper"] = rep.tv_upper;
    j["js_upper"] = rep.js_upper;
    j["w2_exact"] = rep.w2_exact;
    j["tv_upper_pinsker"] = rep.tv_upper_pinsker;
    j["tv_upper_bretagnolle"] = rep.tv_upper_bretagnolle;
    j["log_base"] = {{"kl_exact", "nats"}, {"js_upper", "base2"}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

int run_estimate(const CliOptions& o) {
    leakest::SweepSpec spec;
    spec.scenario = make_scenario(o);
    spec.estimators = parse_metrics(
        o.metrics, {leakest::Estimator::KlHist, leakest::Estimator::TvHist,
                    leakest::Estimator::JsHist});
    spec.sample_span = {o.n};
    spec.bin_span = {o.bins};
    spec.trials = o.trials;
    spec.seed_base = o.seed;
    spec.params = make_params(o);
    spec.workers = o.workers;

    const auto records = leakest::run_sweep(spec);

    json out = json::array();
    for (const auto& r : records) {
        json j;
        j["estimator"] = r.estimator;
        j["n_samples"] = r.n_samples;
        j["bins"] = r.bins;
        j["trial"] = r.trial;
        if (r.skipped) {
            j["skipped"] = true;
            j["skip_reason"] = r.skip_reason;
        } else {
            j["value"] = r.value;
            j["runtime_seconds"] = r.runtime_seconds;
            if (leakest::is_histogram_based(leakest::parse_estimator(r.estimator)))
                j["hist_build_seconds"] = r.hist_build_seconds;
            if (r.estimator == "w1-sinkhorn") j["converged"] = r.converged;
        }
        out.push_back(std::move(j));
    }
    json doc;
    doc["rng"] = leakest::rng_identity();
    doc["records"] = std::move(out);
    std::cout << doc.dump(2) << '\n';

    if (!o.out.empty()) write_csv(leakest::summarize(records), o.out);

    if (!o.dump_histogram.empty() || !o.dump_plan.empty()) {
        leakest::ScenarioSpec scn = spec.scenario;
        scn.seed = spec.seed_base;  // trial 0
        const leakest::SampleMatrix joint = leakest::sample_joint(scn, o.n);
        const leakest::SampleMatrix prod = leakest::sample_product_of_marginals(scn, o.n);
        const leakest::BinRange range = leakest::sweep_point_range(spec, o.n);
        const leakest::HistogramGrid hp = leakest::build_histogram(joint, o.bins, range);
        const leakest::HistogramGrid hq = leakest::build_histogram(prod, o.bins, range);
        if (!o.dump_histogram.empty()) {
            std::ofstream hs(o.dump_histogram);
            if (!hs) throw leakest::ResourceError("cannot open '" + o.dump_histogram + "'");
            leakest::dump_histogram_csv(hp, hs);
        }
        if (!o.dump_plan.empty()) {
            const leakest::TransportProblem tp = leakest::transport_problem_from_histograms(hp, hq);
            bool want_lp = false;
            for (auto e : spec.estimators) want_lp = want_lp || e == leakest::Estimator::W1Lp;
            const leakest::TransportPlan plan =
                want_lp ? leakest::solve_lp(tp)
                        : leakest::sinkhorn(tp, o.lambda, o.sinkhorn_tol, o.sinkhorn_max_iter);
            std::ofstream ps(o.dump_plan);
            if (!ps) throw leakest::ResourceError("cannot open '" + o.dump_plan + "'");
            leakest::dump_plan_csv(plan, ps);
        }
    }
    return 0;
}

int run_sweep_samples(const CliOptions& o) {
    const leakest::SweepPreset preset =
        o.preset == "paper" ? leakest::paper_preset() : leakest::desk_preset();

    std::vector<leakest::Estimator> metrics = parse_metrics(
        o.metrics, {leakest::Estimator::KlHist, leakest::Estimator::TvHist,
                    leakest::Estimator::JsHist});

    // explicit span applies to everything; a preset uses the wider span for
    // histogram estimators and the quadratic-cost span for sample-based ones
    std::vector<leakest::Estimator> hist_metrics, sample_metrics;
    for (auto e : metrics)
        (leakest::is_histogram_based(e) ? hist_metrics : sample_metrics).push_back(e);

    leakest::SweepSpec spec;
    spec.scenario = make_scenario(o);
    spec.bin_span = {o.bins_given ? o.bins : preset.default_bins};
    spec.trials = o.trials;
    spec.seed_base = o.seed;
    spec.params = make_params(o);
    spec.workers = o.workers;

    std::vector<leakest::EstimateRecord> records;
    auto run_group = [&](const std::vector<leakest::Estimator>& ests,
                         const std::vector<std::size_t>& span) {
        if (ests.empty()) return;
        leakest::SweepSpec s = spec;
        s.estimators = ests;
        s.sample_span = span;
        for (auto& r : leakest::run_sweep(s)) records.push_back(std::move(r));
    };
    if (!o.n_span.empty()) {
        run_group(metrics, o.n_span);
    } else {
        run_group(hist_metrics, preset.hist_sample_span);
        run_group(sample_metrics, preset.sample_based_span);
    }
    write_csv(leakest::summarize(records), o.out);
    return 0;
}

int run_sweep_bins(const CliOptions& o) {
    const leakest::SweepPreset preset =
        o.preset == "paper" ? leakest::paper_preset() : leakest::desk_preset();

    leakest::SweepSpec spec;
    spec.scenario = make_scenario(o);
    spec.estimators = parse_metrics(
        o.metrics, {leakest::Estimator::KlHist, leakest::Estimator::TvHist,
                    leakest::Estimator::JsHist});
    spec.sample_span = {o.n_given ? o.n : preset.bin_sweep_samples};
    spec.bin_span = o.bin_span.empty() ? preset.bin_span : o.bin_span;
    spec.trials = o.trials;
    spec.seed_base = o.seed;
    spec.params = make_params(o);
    spec.workers = o.workers;

    write_csv(leakest::summarize(leakest::run_sweep(spec)), o.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sample-based estimators and analytic bounds for mutual-information-like "
                 "leakage between continuous random variables"};
    app.require_subcommand(1);

    CliOptions oracle_opts, est_opts, ss_opts, sb_opts;

    CLI::App* oracle = app.add_subcommand("oracle", "closed-form reference values");
    BoundOptions oracle_bound = add_common_options(oracle, oracle_opts);

    CLI::App* estimate = app.add_subcommand("estimate", "run one estimation cell");
    BoundOptions est_bound = add_common_options(estimate, est_opts);
    estimate->add_option("--dump-histogram", est_opts.dump_histogram,
                         "write the joint-sample histogram as (multi-index, count) CSV");
    estimate->add_option("--dump-plan", est_opts.dump_plan,
                         "write the trial-0 transport plan as (i, j, mass) CSV");

    CLI::App* sweep_samples =
        app.add_subcommand("sweep-samples", "convergence sweep over sample counts");
    BoundOptions ss_bound = add_common_options(sweep_samples, ss_opts);

    CLI::App* sweep_bins = app.add_subcommand("sweep-bins", "convergence sweep over bin counts");
    BoundOptions sb_bound = add_common_options(sweep_bins, sb_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (oracle->parsed()) {
            apply_config(oracle_bound, oracle_opts);
            return run_oracle(oracle_opts);
        }
        if (estimate->parsed()) {
            apply_config(est_bound, est_opts);
            return run_estimate(est_opts);
        }
        if (sweep_samples->parsed()) {
            apply_config(ss_bound, ss_opts);
            return run_sweep_samples(ss_opts);
        }
        if (sweep_bins->parsed()) {
            apply_config(sb_bound, sb_opts);
            return run_sweep_bins(sb_opts);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    }
    return 0;
}
