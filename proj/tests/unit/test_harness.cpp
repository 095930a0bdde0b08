#include <gtest/gtest.h>

#include <filesystem>

#include "mpe/harness/config.hpp"
#include "mpe/harness/identity_suite.hpp"
#include "mpe/harness/report.hpp"
#include "xml_check.hpp"

using namespace mpe;
using namespace mpe::harness;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("mpe_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ExperimentConfig small(ScenarioKind kind) {
    ExperimentConfig c;
    c.scenario = kind;
    c.name = scenario_name(kind);
    c.kappa_grid = {0.25};
    c.seeds = 1;
    c.m = 400;
    c.n = 400;
    if (kind == ScenarioKind::discrete) c.alphas = {AlphaKind::oracle};
    return c;
}

std::size_t count_of(const std::string& s, const std::string& what) {
    std::size_t n = 0;
    for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
    return n;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
    auto c = parse_config(json::parse(R"({"scenario": "synthetic"})"));
    EXPECT_EQ(c.kappa_grid, (std::vector<double>{0.1, 0.25, 0.5, 0.75}));
    EXPECT_EQ(c.seeds, 10u);
    EXPECT_EQ(c.name, "synthetic");
    EXPECT_EQ(c.variants.size(), 3u);

    c = parse_config(json::parse(R"({
        "scenario": "gamma", "kappa_grid": [0.5], "seeds": 2, "alpha": "oracle", "variants": ["sumpe"],
        "estimators": [{"tag": "a", "tau": 3, "correction": "none", "sets": "intervals"}],
        "scenario_params": {"spectrum": {"n_bins": 64}, "anchor_offset": 6}})"));
    EXPECT_EQ(c.alphas, std::vector<AlphaKind>{AlphaKind::oracle});
    EXPECT_EQ(c.estimators[0].histogram.sets, SetFamily::intervals);
    EXPECT_EQ(c.gamma.spectrum.n_bins, 64u);
    EXPECT_EQ(c.gamma.anchor_offset, 6u);

    c = parse_config(json::parse(R"({"scenario": "benchmark_reporting"})"));
    EXPECT_EQ(c.benchmark.threshold, 0.6);
    c = parse_config(json::parse(R"({"scenario": "benchmark_cspl"})"));
    EXPECT_EQ(c.benchmark.threshold, 0.5);
}

TEST(Config, RejectsBadDocuments) {
    for (const char* doc : {
             R"({"scenario": "synthetic", "extra": 1})",
             R"({"kappa_grid": [0.5]})",
             R"({"scenario": "nope"})",
             R"({"scenario": "synthetic", "kappa_grid": [1.5]})",
             R"({"scenario": "synthetic", "kappa_grid": []})",
             R"({"scenario": "synthetic", "seeds": 0})",
             R"({"scenario": "synthetic", "seeds": "ten"})",
             R"({"scenario": "synthetic", "variants": ["sumpe2"]})",
             R"({"scenario": "synthetic", "estimators": [{"tau": 5, "typo": 1}]})",
             R"({"scenario": "synthetic", "estimators": [{"tag": "a"}, {"tag": "a"}]})",
             R"({"scenario": "synthetic", "scenario_params": {"h": {"weights": [2], "means": [0], "stddevs": [1]}}})",
             R"({"scenario": "synthetic", "scenario_params": {"train": {"epochs": 10, "momentum": 0.9}}})",
             R"({"scenario": "gamma", "scenario_params": {"peak_halfwidth": 5, "anchor_offset": 4}})",
             R"({"scenario": "gamma", "estimators": [{"kind": "classifier_ratio"}]})",
             R"({"scenario": "discrete", "alpha": ["plugin"]})",
             R"({"scenario": "discrete", "scenario_params": {"g": [0.5, 0.5], "h": [1.0]}})",
             R"({"scenario": "benchmark_cspl", "alpha": "oracle"})",
             R"({"scenario": "benchmark_cspl", "scenario_params": {"dataset": {"source": "csv"}}})",
             R"({"scenario": "synthetic", "rempe_p": 0.7})"}) {
        EXPECT_THROW(parse_config(json::parse(doc)), ConfigError) << doc;
    }
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(MPE_CONFIG_DIR)) {
        if (e.path().extension() != ".json") continue;
        EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
        ++n;
    }
    EXPECT_GE(n, 8u);
}

TEST(RunExperiment, Cardinality) {
    auto c = small(ScenarioKind::synthetic);
    c.variants = {Variant::base};
    auto r = run_experiment(c);
    ASSERT_EQ(r.reports.size(), 1u);
    EXPECT_TRUE(r.errors.empty());
    EXPECT_EQ(r.reports[0].variant, "base");
    EXPECT_EQ(r.reports[0].kappa_star, 0.25);

    c.kappa_grid = {0.1, 0.5};
    c.seeds = 3;
    c.variants = {Variant::base, Variant::rempe2, Variant::sumpe};
    c.alphas = {AlphaKind::oracle, AlphaKind::one};
    BaseEstimatorSpec second;
    second.tag = "hoeff";
    c.estimators.push_back(second);
    EXPECT_EQ(run_experiment(c).reports.size(), 2u * 3u * 2u * 4u);
}

TEST(RunExperiment, AlphaOneMatchesBase) {
    for (auto kind : {ScenarioKind::synthetic, ScenarioKind::gamma, ScenarioKind::irreducible, ScenarioKind::discrete}) {
        auto c = small(kind);
        c.seeds = 3;
        c.variants = {Variant::base, Variant::sumpe};
        c.alphas = {AlphaKind::one};
        if (kind == ScenarioKind::gamma) c.m = c.n = 5000;
        auto r = run_experiment(c);
        ASSERT_EQ(r.reports.size(), 6u) << scenario_name(kind);
        for (std::size_t i = 0; i < r.reports.size(); i += 2) {
            EXPECT_EQ(r.reports[i].variant, "base");
            EXPECT_EQ(r.reports[i + 1].variant, "sumpe-one");
            EXPECT_EQ(r.reports[i].kappa_hat, r.reports[i + 1].kappa_hat) << scenario_name(kind);
            EXPECT_EQ(r.reports[i + 1].c_hat, 1.0);
        }
    }
}

TEST(RunExperiment, GammaGridCardinalityAndPlot) {
    ExperimentConfig c;
    c.scenario = ScenarioKind::gamma;
    c.m = c.n = 5000;
    c.estimators[0].histogram.tau = 20;
    c.estimators[0].histogram.correction = Correction::binomial;
    c.estimators[0].histogram.z = 1.5;
    c.estimators[0].histogram.sets = SetFamily::intervals;
    auto r = run_experiment(c, {4, false});
    EXPECT_EQ(r.reports.size(), 120u);
    EXPECT_TRUE(r.errors.empty());
    auto s = aggregate(r.reports);
    EXPECT_EQ(s.groups.size(), 12u);
    EXPECT_EQ(s.averages.size(), 3u);
    auto svg = plot_svg(s, "gamma");
    auto info = oracle::check_xml(svg);
    ASSERT_TRUE(info.ok) << info.error;
    EXPECT_EQ(std::count(info.elements.begin(), info.elements.end(), "polyline"), 3);
    EXPECT_EQ(info.elements.front(), "svg");
    EXPECT_LT(find_average(s, "sumpe-plugin")->mae, find_average(s, "base")->mae);
}

TEST(RunExperiment, DeterministicAcrossJobs) {
    auto c = small(ScenarioKind::irreducible);
    c.kappa_grid = {0.25, 0.75};
    c.seeds = 4;
    auto a = run_experiment(c, {1, false});
    auto b = run_experiment(c, {4, false});
    auto again = run_experiment(c, {3, false});
    EXPECT_EQ(trials_csv(a.reports), trials_csv(b.reports));
    EXPECT_EQ(trials_csv(a.reports), trials_csv(again.reports));
    c.base_seed = 2;
    EXPECT_NE(trials_csv(a.reports), trials_csv(run_experiment(c, {2, false}).reports));
}

TEST(RunExperiment, TrialStreamsDiffer) {
    EXPECT_NE(trial_stream(1, 0, 0, 0).next_u64(), trial_stream(1, 0, 0, 1).next_u64());
    EXPECT_NE(trial_stream(1, 0, 1, 0).next_u64(), trial_stream(1, 1, 0, 0).next_u64());
    EXPECT_EQ(trial_stream(1, 2, 3, 4).next_u64(), trial_stream(1, 2, 3, 4).next_u64());
}

TEST(RunExperiment, FailedTrialsAreRecordedAndRunContinues) {
    auto c = small(ScenarioKind::synthetic);
    c.seeds = 2;
    BaseEstimatorSpec starving;
    starving.tag = "starving";
    starving.histogram.tau = 1e9;
    c.estimators = {BaseEstimatorSpec{}, starving};
    c.variants = {Variant::base};
    auto r = run_experiment(c);
    ASSERT_EQ(r.reports.size(), 2u);
    ASSERT_EQ(r.errors.size(), 2u);
    EXPECT_EQ(r.errors[0].estimator, "starving");
    EXPECT_EQ(r.errors[0].error, "insufficient_data");
    EXPECT_FALSE(r.errors[0].message.empty());

    auto d = small(ScenarioKind::benchmark_cspl);
    d.kappa_grid = {0.0};
    d.variants = {Variant::base, Variant::sumpe};
    auto rd = run_experiment(d);
    ASSERT_EQ(rd.reports.size(), 1u);
    ASSERT_EQ(rd.errors.size(), 1u);
    EXPECT_EQ(rd.errors[0].variant, "sumpe-plugin");
    EXPECT_EQ(rd.errors[0].error, "degenerate_data");
}

TEST(Aggregate, Examples) {
    TrialReport exact{"s", 0.5, 0, "hist", "base", 0.5, 1.0, std::nullopt};
    auto s = aggregate({exact});
    ASSERT_EQ(s.groups.size(), 1u);
    EXPECT_EQ(s.groups[0].mae, 0.0);
    EXPECT_EQ(s.groups[0].sign, "\xC2\xB7");

    auto hi = exact, lo = exact;
    hi.kappa_hat = 0.6;
    lo.kappa_hat = 0.4;
    lo.seed = 1;
    s = aggregate({hi, lo});
    EXPECT_NEAR(s.groups[0].mae, 0.1, 1e-12);
    EXPECT_NEAR(s.groups[0].bias, 0.0, 1e-12);
    EXPECT_EQ(s.groups[0].sign, "\xC2\xB7");
    EXPECT_EQ(s.groups[0].count, 2u);

    auto other = hi;
    other.kappa_star = 0.25;
    other.kappa_hat = 0.2;
    s = aggregate({hi, lo, other});
    ASSERT_EQ(s.groups.size(), 2u);
    EXPECT_EQ(s.groups[1].sign, "-");
    ASSERT_EQ(s.averages.size(), 1u);
    EXPECT_NEAR(s.averages[0].mae, (0.1 + 0.05) / 2, 1e-12);
    EXPECT_NEAR(s.averages[0].bias, -0.025, 1e-12);
    EXPECT_EQ(s.averages[0].sign, "-");
    EXPECT_TRUE(aggregate({}).groups.empty());
}

TEST(Emit, EmptyReports) {
    auto dir = temp_dir("empty");
    emit({}, aggregate({}), dir);
    EXPECT_EQ(read_file(dir / "trials.csv"), std::string(kTrialsHeader) + "\n");
    auto j = json::parse(read_file(dir / "summary.json"));
    EXPECT_TRUE(j["groups"].empty());
    EXPECT_TRUE(j["averages"].empty());
    EXPECT_FALSE(fs::exists(dir / "errors.csv"));
    EXPECT_TRUE(read_trials_csv(dir / "trials.csv").empty());
    fs::remove_all(dir);
}

TEST(Emit, SingleReportRoundTrip) {
    auto dir = temp_dir("one");
    TrialReport r{"synthetic", 0.25, 3, "hist", "sumpe", 0.2731, 0.412, std::nullopt};
    RunResult run{{r}, {}};
    auto s = aggregate(run.reports);
    emit(run, s, dir);
    auto text = read_file(dir / "trials.csv");
    EXPECT_EQ(count_of(text, "\n"), 2u);
    EXPECT_EQ(read_trials_csv(dir / "trials.csv"), run.reports);
    auto back = parse_summary_json(json::parse(read_file(dir / "summary.json")));
    ASSERT_EQ(back.groups.size(), 1u);
    EXPECT_EQ(back.groups[0].mae, s.groups[0].mae);
    EXPECT_EQ(back.groups[0].sign, s.groups[0].sign);
    ASSERT_TRUE(fs::exists(dir / "synthetic_plot.svg"));
    EXPECT_TRUE(oracle::check_xml(read_file(dir / "synthetic_plot.svg")).ok);
    fs::remove_all(dir);
}

TEST(Emit, RoundTripProperty) {
    RngStream rng(41, 0);
    for (int t = 0; t < 50; ++t) {
        std::vector<TrialReport> reports;
        std::size_t n = rng.below(20);
        for (std::size_t i = 0; i < n; ++i) {
            TrialReport r;
            r.scenario = rng.uniform() < 0.5 ? "gamma" : "synthetic";
            r.kappa_star = rng.uniform();
            r.seed = rng.next_u64();
            r.estimator = rng.uniform() < 0.5 ? "hist" : "odd,\"tag\"";
            r.variant = "sumpe-plugin";
            r.kappa_hat = rng.uniform();
            r.c_hat = rng.uniform() < 0.1 ? 1.0 : rng.uniform() * 1e-7;
            if (rng.uniform() < 0.5) r.wall_ms = rng.uniform() * 1000.0;
            reports.push_back(r);
        }
        ASSERT_EQ(parse_trials_csv(trials_csv(reports)), reports);
        auto s = aggregate(reports);
        auto back = parse_summary_json(json::parse(summary_json(s).dump()));
        ASSERT_EQ(back.groups.size(), s.groups.size());
        for (std::size_t g = 0; g < s.groups.size(); ++g) {
            EXPECT_EQ(back.groups[g].mae, s.groups[g].mae);
            EXPECT_EQ(back.groups[g].bias, s.groups[g].bias);
            EXPECT_EQ(back.groups[g].se, s.groups[g].se);
        }
    }
    EXPECT_THROW(parse_trials_csv("a,b\n"), IoError);
    EXPECT_THROW(parse_trials_csv(std::string(kTrialsHeader) + "\ns,x,0,h,v,0.1,1,0.1,\n"), IoError);
}

TEST(Emit, ErrorsFileOnlyWhenTrialsFail) {
    auto dir = temp_dir("errors");
    RunResult run;
    run.errors.push_back({"synthetic", 0.5, 1, "hist", "sumpe", "degenerate_acceptance", "kept, no points"});
    emit(run, aggregate(run.reports), dir);
    auto text = read_file(dir / "errors.csv");
    EXPECT_EQ(text, std::string(kErrorsHeader) + "\nsynthetic,0.5,1,hist,sumpe,degenerate_acceptance,\"kept, no points\"\n");
    emit({}, aggregate({}), dir);
    EXPECT_FALSE(fs::exists(dir / "errors.csv"));
    fs::remove_all(dir);
    EXPECT_THROW(emit({}, aggregate({}), "/proc/no_such_dir/x"), IoError);
}

TEST(Dataset, CsvIngestion) {
    auto dir = temp_dir("csv");
    auto path = (dir / "d.csv").string();
    {
        std::ofstream out(path);
        out << "a,y,b,z\n";
        RngStream r(42, 0);
        for (int i = 0; i < 600; ++i) {
            int z = r.uniform() < 0.5;
            int y = z && r.uniform() < 0.8;
            out << (z ? 2.0 : -2.0) + r.normal() << "," << y << "," << r.normal() << "," << z << "\n";
        }
    }
    auto d = load_csv_dataset(path);
    EXPECT_EQ(d.dim, 2u);
    EXPECT_TRUE(d.has_z);
    EXPECT_EQ(d.rows.size(), 600u);

    auto c = small(ScenarioKind::benchmark_reporting);
    c.benchmark.dataset.source = "csv";
    c.benchmark.dataset.path = path;
    c.kappa_grid = {0.5};
    c.estimators[0].kind = EstimatorKind::classifier_ratio;
    c.estimators[0].tag = "cls";
    c.estimators[0].classifier.train.epochs = 300;
    auto r = run_experiment(c);
    EXPECT_TRUE(r.errors.empty()) << (r.errors.empty() ? "" : r.errors[0].message);
    EXPECT_EQ(r.reports.size(), 3u);

    auto write = [&](const std::string& body) {
        std::ofstream(path) << body;
        return path;
    };
    EXPECT_THROW(load_csv_dataset(write("a,b\n1,2\n")), IoError);
    EXPECT_THROW(load_csv_dataset(write("a,y\n1,2\n")), IoError);
    EXPECT_THROW(load_csv_dataset(write("a,y\n1\n")), IoError);
    EXPECT_THROW(load_csv_dataset(write("a,y\nfoo,1\n")), IoError);
    EXPECT_THROW(load_csv_dataset(write("a,y,z\n1,1,0\n")), IoError);
    EXPECT_THROW(load_csv_dataset(write("a,y\n")), IoError);
    EXPECT_THROW(load_csv_dataset((dir / "missing.csv").string()), IoError);
    auto ok = load_csv_dataset(write("a , y\r\n1.5, 1\r\n-2,0\r\n\r\n"));
    EXPECT_EQ(ok.rows.size(), 2u);
    EXPECT_EQ(ok.rows[0].x[0], 1.5);
    fs::remove_all(dir);
}

TEST(IdentitySuite, AllChecksPass) {
    auto results = run_identity_suite();
    ASSERT_EQ(results.size(), 7u);
    for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}
