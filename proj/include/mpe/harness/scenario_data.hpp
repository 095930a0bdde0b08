#pragma once

// Per-cell data generation and acceptance-function construction for each scenario.

#include <memory>

#include "mpe/harness/config.hpp"
#include "mpe/harness/dataset.hpp"
#include "mpe/scenarios.hpp"

namespace mpe::harness {

// Data for one (kappa, seed) cell. Sample scenarios fill xf/xh, the gamma
// scenario fills hf/hh. `alpha` builds the acceptance function of a given kind.
struct Cell {
    std::optional<SampleSet> xf, xh;
    std::optional<Histogram> hf, hh;
    std::function<AcceptanceFn(AlphaKind, RngStream&)> alpha;
};

// Run-wide state shared by every cell (the benchmark dataset).
struct ScenarioContext {
    std::shared_ptr<const Dataset> dataset;
};

inline constexpr std::uint64_t kDatasetStream = 0xda7a5e7;

inline ScenarioContext prepare_context(const ExperimentConfig& cfg) {
    ScenarioContext ctx;
    if (cfg.scenario == ScenarioKind::benchmark_cspl || cfg.scenario == ScenarioKind::benchmark_reporting) {
        const auto& d = cfg.benchmark.dataset;
        if (d.source == "csv") {
            ctx.dataset = std::make_shared<const Dataset>(load_csv_dataset(d.path));
        } else {
            RngStream rng(cfg.base_seed, kDatasetStream);
            ctx.dataset = std::make_shared<const Dataset>(gaussian_dataset(d, rng));
        }
    }
    return ctx;
}

namespace detail {

inline AcceptanceFn one_alpha() { return AcceptanceFn::constant(1.0); }

[[noreturn]] inline void no_alpha(AlphaKind k, ScenarioKind s) {
    throw ConfigError(std::string("alpha kind ") + (k == AlphaKind::oracle ? "oracle" : "plugin") +
                      " is not available for scenario " + scenario_name(s));
}

// kappa*h/f for two densities, 1 where f vanishes.
inline double mixture_posterior(double kappa, double g, double h) {
    double f = (1.0 - kappa) * g + kappa * h;
    return f > 0.0 ? kappa * h / f : 1.0;
}

inline Cell synthetic_cell(const SyntheticParams& p, double kappa, std::size_t m, std::size_t n, RngStream& rng) {
    Cell c;
    auto f = GaussianMixtureSpec::mix(p.g, p.h, kappa);
    c.xf = sample_gaussian_mixture(f, n, rng);
    c.xh = sample_gaussian_mixture(p.h, m, rng);

    // Labeled source data: same prior, shifted negative class, truncated to the support.
    auto source = std::make_shared<std::vector<LabeledExample>>();
    for (std::size_t i = 0; i < p.source_n; ++i) {
        bool pos = rng.uniform() < kappa;
        auto x = sample_gaussian_mixture(pos ? p.h : p.source_g, 1, rng).scalar(0);
        if (x <= p.support_max) source->push_back({{x}, pos ? 1 : 0, std::nullopt});
    }

    const double smax = p.support_max;
    Predicate support = [smax](std::span<const double> x) { return x[0] <= smax; };
    c.alpha = [p, kappa, source, support](AlphaKind k, RngStream& arng) -> AcceptanceFn {
        switch (k) {
            case AlphaKind::one: return one_alpha();
            case AlphaKind::oracle:
                return region_alpha(
                    [p, kappa](std::span<const double> x) {
                        return mixture_posterior(kappa, p.g.pdf(x[0]), p.h.pdf(x[0]));
                    },
                    support);
            case AlphaKind::plugin: return cspl_alpha(*source, p.train, p.plugin_threshold, arng, support);
        }
        return one_alpha();
    };
    return c;
}

inline Cell irreducible_cell(const IrreducibleParams& p, double kappa, std::size_t m, std::size_t n, RngStream& rng) {
    Cell c;
    c.xf = sample_gaussian_mixture(GaussianMixtureSpec::mix(p.g, p.h, kappa), n, rng);
    c.xh = sample_gaussian_mixture(p.h, m, rng);
    auto labeled = std::make_shared<std::vector<LabeledExample>>();
    for (std::size_t i = 0; i < p.labeled_n; ++i) {
        bool pos = rng.uniform() < kappa;
        labeled->push_back({{sample_gaussian_mixture(pos ? p.h : p.g, 1, rng).scalar(0)}, pos ? 1 : 0, std::nullopt});
    }
    c.alpha = [p, kappa, labeled](AlphaKind k, RngStream& arng) -> AcceptanceFn {
        switch (k) {
            case AlphaKind::one: return one_alpha();
            case AlphaKind::oracle: {
                auto post = [p, kappa](std::span<const double> x) {
                    return mixture_posterior(kappa, p.g.pdf(x[0]), p.h.pdf(x[0]));
                };
                const double t = p.threshold;
                return region_alpha(post, [post, t](std::span<const double> x) { return post(x) > t; });
            }
            case AlphaKind::plugin: return posterior_alpha(train(*labeled, p.train, arng), p.threshold);
        }
        return one_alpha();
    };
    return c;
}

inline Cell gamma_cell(const GammaParams& p, double kappa, std::size_t m, std::size_t n, RngStream& rng) {
    auto spec = p.spectrum;
    spec.counts = n;
    spec.source_counts = m;
    auto sp = simulate_spectrum(spec, kappa, rng);
    const auto c0 = static_cast<std::size_t>(spec.center());
    if (c0 < p.anchor_offset || c0 + p.anchor_offset >= spec.n_bins)
        throw ConfigError("gamma: anchors fall outside the spectrum");
    const std::size_t lo = c0 - p.peak_halfwidth, hi = c0 + p.peak_halfwidth;

    Cell c;
    c.hf = sp.hist_F;
    c.hh = sp.hist_H;
    std::vector<double> oracle(spec.n_bins, 1.0);
    for (std::size_t b = lo; b <= hi; ++b) oracle[b] = mixture_posterior(kappa, sp.true_G[b], sp.source[b]);
    auto hf = sp.hist_F;
    UnfoldingOptions opt{c0 - p.anchor_offset, c0 + p.anchor_offset, p.anchor_average3};
    c.alpha = [oracle, hf, lo, hi, opt](AlphaKind k, RngStream&) -> AcceptanceFn {
        switch (k) {
            case AlphaKind::one: return one_alpha();
            case AlphaKind::oracle: return AcceptanceFn::tabulated(oracle);
            case AlphaKind::plugin: return unfolding_alpha(hf, lo, hi, opt);
        }
        return one_alpha();
    };
    return c;
}

inline Cell discrete_cell(const DiscreteParams& p, double kappa, std::size_t m, std::size_t n, RngStream& rng) {
    DiscreteDist g(p.g), h(p.h);
    auto f = make_mixture(g, h, kappa);
    Cell c;
    c.xf = sample_discrete(f, n, rng);
    c.xh = sample_discrete(h, m, rng);
    std::vector<double> post(g.size(), 1.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (f[i] > 0.0) post[i] = kappa * h[i] / f[i];
    c.alpha = [post](AlphaKind k, RngStream&) -> AcceptanceFn {
        if (k == AlphaKind::plugin) no_alpha(k, ScenarioKind::discrete);
        return k == AlphaKind::oracle ? AcceptanceFn::tabulated(post) : one_alpha();
    };
    return c;
}

// Target positives H are a keep_fraction subsample of the positive class; the
// remaining positives join the negatives in G. z marks true class membership.
inline Cell benchmark_cell(const BenchmarkParams& p, ScenarioKind kind, const Dataset& data, double kappa,
                           std::size_t m, std::size_t n, RngStream& rng) {
    struct Row {
        const std::vector<double>* x;
        int z;
    };
    std::vector<Row> hpool, gpool;
    if (data.has_z) {
        for (const auto& e : data.rows) (e.y == 1 ? hpool : gpool).push_back({&e.x, e.z.value_or(e.y)});
    } else {
        std::vector<const LabeledExample*> pos;
        for (const auto& e : data.rows) {
            if (e.y == 1)
                pos.push_back(&e);
            else
                gpool.push_back({&e.x, 0});
        }
        for (std::size_t i = pos.size(); i > 1; --i) std::swap(pos[i - 1], pos[rng.below(i)]);
        auto keep = static_cast<std::size_t>(std::llround(p.keep_fraction * static_cast<double>(pos.size())));
        for (std::size_t i = 0; i < pos.size(); ++i) (i < keep ? hpool : gpool).push_back({&pos[i]->x, 1});
    }
    if (hpool.empty() || gpool.empty())
        throw DegenerateDataError("benchmark: dataset gives an empty positive or negative pool");
    std::vector<const Row*> gz;
    for (const auto& r : gpool)
        if (r.z == 1) gz.push_back(&r);

    auto pick = [&](const std::vector<Row>& pool) -> const Row& { return pool[rng.below(pool.size())]; };
    Cell c;
    c.xf = SampleSet(data.dim);
    c.xh = SampleSet(data.dim);
    for (std::size_t i = 0; i < m; ++i) c.xh->push_back(*pick(hpool).x);
    for (std::size_t i = 0; i < n; ++i) c.xf->push_back(*pick(rng.uniform() < kappa ? hpool : gpool).x);

    auto aux = std::make_shared<std::vector<LabeledExample>>();
    const auto kn = static_cast<std::size_t>(std::llround(kappa * static_cast<double>(n)));
    if (kind == ScenarioKind::benchmark_cspl) {
        // Prior-shifted source sample: kappa*n positives, factor*(1-kappa)*n negatives.
        auto neg = static_cast<std::size_t>(std::llround(p.negative_factor * (1.0 - kappa) * static_cast<double>(n)));
        for (std::size_t i = 0; i < kn; ++i) aux->push_back({*pick(hpool).x, 1, std::nullopt});
        for (std::size_t i = 0; i < neg; ++i) aux->push_back({*pick(gpool).x, 0, std::nullopt});
    } else {
        // kappa*n draws from the Z = 1 part of F, labeled with whether they were reported.
        double gz_frac = static_cast<double>(gz.size()) / static_cast<double>(gpool.size());
        double denom = kappa + (1.0 - kappa) * gz_frac;
        double p_reported = denom > 0.0 ? kappa / denom : 1.0;
        for (std::size_t i = 0; i < kn; ++i) {
            if (gz.empty() || rng.uniform() < p_reported)
                aux->push_back({*pick(hpool).x, 1, 1});
            else
                aux->push_back({*gz[rng.below(gz.size())]->x, 0, 1});
        }
    }
    const double threshold = p.threshold.value_or(kind == ScenarioKind::benchmark_cspl ? 0.5 : 0.6);
    const auto train_cfg = p.train;
    c.alpha = [aux, kind, threshold, train_cfg](AlphaKind k, RngStream& arng) -> AcceptanceFn {
        switch (k) {
            case AlphaKind::one: return one_alpha();
            case AlphaKind::oracle: no_alpha(k, kind);
            case AlphaKind::plugin:
                if (kind == ScenarioKind::benchmark_cspl) return cspl_alpha(*aux, train_cfg, threshold, arng);
                return reporting_alpha(*aux, train_cfg, threshold, arng);
        }
        return one_alpha();
    };
    return c;
}

}  // namespace detail

inline Cell make_cell(const ExperimentConfig& cfg, const ScenarioContext& ctx, double kappa, RngStream& rng) {
    switch (cfg.scenario) {
        case ScenarioKind::synthetic: return detail::synthetic_cell(cfg.synthetic, kappa, cfg.m, cfg.n, rng);
        case ScenarioKind::gamma: return detail::gamma_cell(cfg.gamma, kappa, cfg.m, cfg.n, rng);
        case ScenarioKind::irreducible: return detail::irreducible_cell(cfg.irreducible, kappa, cfg.m, cfg.n, rng);
        case ScenarioKind::discrete: return detail::discrete_cell(cfg.discrete, kappa, cfg.m, cfg.n, rng);
        case ScenarioKind::benchmark_cspl:
        case ScenarioKind::benchmark_reporting:
            if (!ctx.dataset) throw ConfigError("benchmark scenario without a dataset");
            return detail::benchmark_cell(cfg.benchmark, cfg.scenario, *ctx.dataset, kappa, cfg.m, cfg.n, rng);
    }
    throw ConfigError("unknown scenario");
}

}  // namespace mpe::harness
