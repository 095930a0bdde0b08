#include <gtest/gtest.h>

#include "mpe/harness/report.hpp"
#include "mpe/population.hpp"
#include "mpe/scenarios.hpp"

using namespace mpe;
using namespace mpe::harness;

namespace {

const DiscreteDist kF({0.35, 0.4, 0.25});
const DiscreteDist kH({0.5, 0.5, 0.0});

Predicate everything = [](std::span<const double>) { return true; };

// Bins over [lo, hi] with pmf proportional to pdf at the centers.
DiscreteDist discretize(const GaussianMixtureSpec& s, double lo, double hi, std::size_t bins) {
    std::vector<double> w(bins);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) w[b] = s.pdf(lo + (static_cast<double>(b) + 0.5) * width);
    return DiscreteDist::from_weights(std::move(w));
}

// Estimator settings of the shipped configs.
BaseEstimatorSpec shipped_estimator() {
    BaseEstimatorSpec s;
    s.histogram.bins = 16;
    s.histogram.tau = 20;
    s.histogram.correction = Correction::binomial;
    s.histogram.z = 1.5;
    s.histogram.sets = SetFamily::intervals;
    return s;
}

Histogram flat_with_peak(double peak_factor) {
    std::vector<std::uint64_t> c(20, 1000);
    for (std::size_t b = 8; b <= 11; ++b) c[b] = static_cast<std::uint64_t>(1000 * peak_factor);
    return Histogram(Histogram::unit_edges(20), std::move(c));
}

}  // namespace

TEST(ConstantAlpha, Examples) {
    auto one = constant_alpha(everything, 1.0);
    for (double x : {-3.0, 0.0, 7.5}) EXPECT_EQ(one(x), 1.0);

    auto half = constant_alpha(everything, 0.5);
    EXPECT_EQ(half(2.0), 0.5);
    EXPECT_NEAR(theorem2_recover(kF, kH, half.tabulate(3)), 0.5 * kappa_max(kF, kH).kappa, 1e-12);

    auto at0 = constant_alpha([](std::span<const double> x) { return x[0] == 0.0; }, 0.5 / 0.7);
    EXPECT_NEAR(theorem2_recover(kF, kH, at0.tabulate(3)), 0.5, 1e-12);

    EXPECT_THROW(constant_alpha(everything, 0.0), DomainError);
    EXPECT_THROW(constant_alpha(everything, 1.5), DomainError);
}

TEST(UnfoldingAlpha, DoubledPeakOnFlatSpectrum) {
    auto u = unfolding_alpha_detail(flat_with_peak(2.0), 8, 11);
    for (std::size_t b = 8; b <= 11; ++b) EXPECT_NEAR(u.per_bin[b], 0.5, 1e-12);
    EXPECT_EQ(u.per_bin[7], 1.0);
    EXPECT_EQ(u.per_bin[12], 1.0);
    EXPECT_NEAR(u.alpha(9.0), 0.5, 1e-12);
    EXPECT_TRUE(u.alpha.in_region(9.0));
    EXPECT_FALSE(u.alpha.in_region(3.0));
}

TEST(UnfoldingAlpha, NoPeakGivesZero) {
    auto u = unfolding_alpha_detail(flat_with_peak(1.0), 8, 11);
    for (std::size_t b = 8; b <= 11; ++b) EXPECT_NEAR(u.per_bin[b], 0.0, 1e-12);
}

TEST(UnfoldingAlpha, ZeroBackgroundAndErrors) {
    std::vector<std::uint64_t> c(20, 0);
    for (std::size_t b = 8; b <= 11; ++b) c[b] = 500;
    Histogram pure(Histogram::unit_edges(20), c);
    EXPECT_THROW(unfolding_alpha(pure, 8, 11), AnchorError);
    EXPECT_THROW(unfolding_alpha(flat_with_peak(2.0), 0, 3), DomainError);
    EXPECT_THROW(unfolding_alpha(flat_with_peak(2.0), 16, 19), DomainError);
    EXPECT_THROW(unfolding_alpha(Histogram(Histogram::unit_edges(20), std::vector<std::uint64_t>(20, 0)), 8, 11),
                 AnchorError);

    // Empty bin inside A keeps everything; a dip below baseline clamps to 0.
    auto h = flat_with_peak(2.0).counts();
    h[9] = 0;
    h[10] = 500;
    auto u = unfolding_alpha_detail(Histogram(Histogram::unit_edges(20), h), 8, 11);
    EXPECT_EQ(u.per_bin[9], 1.0);
    EXPECT_EQ(u.per_bin[10], 0.0);
}

TEST(UnfoldingAlpha, AnchorsAwayFromRegion) {
    auto u = unfolding_alpha_detail(flat_with_peak(3.0), 8, 11, {std::size_t{4}, std::size_t{15}, true});
    for (std::size_t b = 8; b <= 11; ++b) EXPECT_NEAR(u.per_bin[b], 2.0 / 3.0, 1e-12);
    EXPECT_THROW(unfolding_alpha(flat_with_peak(3.0), 8, 11, {std::size_t{9}, std::nullopt, false}), DomainError);
}

TEST(UnfoldingAlpha, ShrinksWithPeakFraction) {
    SpectrumSpec spec;
    auto g = spectrum_background_pmf(spec);
    auto h = spectrum_source_pmf(spec);
    const auto c = static_cast<std::size_t>(spec.center());
    UnfoldingOptions opt{c - 10, c + 10, false};
    std::vector<double> prev;
    for (double k : {0.6, 0.4, 0.2, 0.1, 0.02, 0.0}) {
        auto f = make_mixture(g, h, k);
        std::vector<std::uint64_t> counts(spec.n_bins);
        for (std::size_t b = 0; b < spec.n_bins; ++b) counts[b] = static_cast<std::uint64_t>(std::llround(1e9 * f[b]));
        auto u = unfolding_alpha_detail(Histogram(Histogram::unit_edges(spec.n_bins), counts), c - 3, c + 3, opt);
        std::vector<double> in(u.per_bin.begin() + static_cast<long>(c - 3), u.per_bin.begin() + static_cast<long>(c + 4));
        for (double a : in) {
            EXPECT_GE(a, 0.0);
            EXPECT_LE(a, 1.0);
        }
        if (!prev.empty()) {
            for (std::size_t i = 0; i < in.size(); ++i) EXPECT_LE(in[i], prev[i] + 1e-9) << "kappa " << k;
        }
        if (k == 0.0) {
            for (double a : in) EXPECT_LE(a, 0.05);
        }
        prev = in;
    }
}

TEST(CsplAlpha, ThresholdOneGivesIdentity) {
    RngStream r(31, 1);
    std::vector<LabeledExample> ex;
    for (int i = 0; i < 400; ++i) {
        int y = r.uniform() < 0.5;
        ex.push_back({{(y ? 1.0 : -1.0) + r.normal()}, y, std::nullopt});
    }
    auto a = cspl_alpha(ex, TrainConfig{}, 1.0, r);
    for (double x = -5.0; x <= 5.0; x += 0.25) {
        EXPECT_EQ(a(x), 1.0);
        EXPECT_FALSE(a.in_region(x));
    }
}

TEST(CsplAlpha, OraclePosteriorRecoversKappaOnFineGrid) {
    const GaussianMixtureSpec h{{1.0}, {0.0}, {1.0}};
    const GaussianMixtureSpec g{{0.8, 0.2}, {3.0, 4.0}, {2.0, 1.0}};
    const double lo = -8.0, hi = 14.0;
    const std::size_t bins = 512;
    auto hd = discretize(h, lo, hi, bins), gd = discretize(g, lo, hi, bins);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double k : {0.1, 0.25, 0.5}) {
        auto fd = make_mixture(gd, hd, k);
        std::vector<double> alpha(bins, 1.0);
        for (std::size_t b = 0; b < bins; ++b) {
            double x = lo + (static_cast<double>(b) + 0.5) * width;
            double f = (1.0 - k) * g.pdf(x) + k * h.pdf(x);
            if (x <= 2.0 && f > 0.0) alpha[b] = k * h.pdf(x) / f;
        }
        EXPECT_NEAR(theorem2_recover(fd, hd, alpha), k, 1e-3) << "kappa " << k;
        EXPECT_GT(kappa_max(fd, hd).kappa, k + 0.08 * (1.0 - k));  // irreducibility fails: kappa(G|H) ~ 0.089
    }
}

TEST(ReportingAlpha, FullReportingIsIdentity) {
    std::vector<LabeledExample> ex;
    for (int i = 0; i < 50; ++i) ex.push_back({{0.1 * i}, 1, 1});
    RngStream r(32, 1);
    auto a = reporting_alpha(ex, TrainConfig{}, r);
    for (double x : {-2.0, 0.0, 9.0}) {
        EXPECT_EQ(a(x), 1.0);
        EXPECT_TRUE(a.in_region(x));
    }
    ex.push_back({{0.0}, 0, 0});
    EXPECT_THROW(reporting_alpha(ex, TrainConfig{}, r), DomainError);
}

TEST(ReportingAlpha, ConstantPropensityPopulation) {
    // Z = 0 mass vanishes on bins {0, 1}, so P(Z=1|x) = 1 there and the posterior is e = 0.7.
    const DiscreteDist p1({0.3, 0.2, 0.2, 0.2, 0.1}), p0({0.0, 0.0, 0.2, 0.3, 0.5});
    const double e = 0.7;
    for (double nu : {0.2, 0.5, 0.9}) {
        auto f = make_mixture(p0, p1, nu);
        const double kappa = e * nu;  // P(Y = 1); H = p(x|Y=1) = p1 since e is constant
        auto A = [](std::span<const double> x) { return x[0] <= 1.0; };
        auto alpha = constant_alpha(A, e);
        auto post = posterior(f, p1, kappa);
        for (std::size_t i = 0; i < 5; ++i) ASSERT_GE(alpha.tabulate(5)[i], post[i] - 1e-12);
        EXPECT_NEAR(theorem2_recover(f, p1, alpha.tabulate(5)), kappa, 1e-12);
        EXPECT_GT(kappa_max(f, p1).kappa, kappa);
    }
}

TEST(ReportingAlpha, FittedConstantPropensity) {
    RngStream r(33, 1);
    std::vector<LabeledExample> ex;
    for (int i = 0; i < 3000; ++i) ex.push_back({{r.normal()}, r.uniform() < 0.7 ? 1 : 0, 1});
    auto a = reporting_alpha(ex, TrainConfig{}, r);
    for (double x = -2.0; x <= 2.0; x += 0.5) {
        EXPECT_TRUE(a.in_region(x));
        EXPECT_NEAR(a(x), 0.7, 0.05);
    }
}

TEST(Alphas, MapIntoUnitInterval) {
    RngStream r(34, 1);
    ExperimentConfig cfg;
    cfg.scenario = ScenarioKind::synthetic;
    auto cell = make_cell(cfg, {}, 0.25, r);
    std::vector<AcceptanceFn> fns{cell.alpha(AlphaKind::oracle, r), cell.alpha(AlphaKind::plugin, r),
                                  unfolding_alpha(flat_with_peak(0.5), 8, 11), constant_alpha(everything, 0.3)};
    for (const auto& a : fns)
        for (double x = -30.0; x <= 30.0; x += 0.37) {
            double v = a(x);
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
        }
}

// Estimated alpha stays above the true target posterior up to 0.1 on 95% of F draws.
TEST(Alphas, DominationGuardrail) {
    ExperimentConfig cfg;
    for (double k : {0.1, 0.25, 0.5}) {
        for (std::uint64_t s = 0; s < 3; ++s) {
            RngStream r(35, s);
            auto cell = make_cell(cfg, {}, k, r);
            auto a = cell.alpha(AlphaKind::plugin, r);
            const auto& p = cfg.synthetic;
            std::size_t ok = 0;
            for (std::size_t i = 0; i < cell.xf->size(); ++i) {
                double x = cell.xf->scalar(i);
                double post = k * p.h.pdf(x) / ((1 - k) * p.g.pdf(x) + k * p.h.pdf(x));
                ok += a(x) >= post - 0.1;
            }
            EXPECT_GE(static_cast<double>(ok) / static_cast<double>(cell.xf->size()), 0.95) << "kappa " << k;
        }
    }
    cfg.scenario = ScenarioKind::irreducible;
    for (double k : {0.25, 0.5, 0.75}) {
        RngStream r(36, 0);
        auto cell = make_cell(cfg, {}, k, r);
        auto a = cell.alpha(AlphaKind::plugin, r);
        const auto& p = cfg.irreducible;
        std::size_t ok = 0;
        for (std::size_t i = 0; i < cell.xf->size(); ++i) {
            double x = cell.xf->scalar(i);
            double post = k * p.h.pdf(x) / ((1 - k) * p.g.pdf(x) + k * p.h.pdf(x));
            ok += a(x) >= post - 0.1;
        }
        EXPECT_GE(static_cast<double>(ok) / static_cast<double>(cell.xf->size()), 0.95) << "kappa " << k;
    }
}

TEST(ScenarioRuns, CsplSyntheticBeatsBase) {
    ExperimentConfig cfg;
    cfg.kappa_grid = {0.1, 0.25, 0.5};
    cfg.seeds = 5;
    cfg.variants = {Variant::base, Variant::sumpe};
    cfg.alphas = {AlphaKind::plugin};
    cfg.estimators[0] = shipped_estimator();
    auto res = run_experiment(cfg, {4, false});
    ASSERT_TRUE(res.errors.empty());
    auto s = aggregate(res.reports);
    for (double k : cfg.kappa_grid) {
        auto* b = find_group(s, k, "base");
        auto* su = find_group(s, k, "sumpe-plugin");
        ASSERT_TRUE(b && su);
        EXPECT_LT(su->mae, b->mae) << "kappa " << k;
    }
}

TEST(ScenarioRuns, BenchmarkReportingBeatsBaseAtHalf) {
    for (auto kind : {ScenarioKind::benchmark_reporting, ScenarioKind::benchmark_cspl}) {
        ExperimentConfig cfg;
        cfg.scenario = kind;
        cfg.benchmark.threshold = kind == ScenarioKind::benchmark_cspl ? 0.5 : 0.6;
        cfg.kappa_grid = {0.5};
        cfg.n = 2000;
        cfg.m = 1000;
        cfg.variants = {Variant::base, Variant::sumpe};
        cfg.estimators[0] = shipped_estimator();
        auto res = run_experiment(cfg, {4, false});
        ASSERT_TRUE(res.errors.empty());
        auto s = aggregate(res.reports);
        EXPECT_LT(find_group(s, 0.5, "sumpe-plugin")->mae, find_group(s, 0.5, "base")->mae)
            << scenario_name(kind);
        EXPECT_EQ(find_group(s, 0.5, "base")->sign, "+");
    }
}
