#pragma once

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "mpe/harness/scenario_data.hpp"

namespace mpe::harness {

struct TrialReport {
    std::string scenario;
    double kappa_star = 0.0;
    std::uint64_t seed = 0;
    std::string estimator;
    std::string variant;
    double kappa_hat = 0.0;
    double c_hat = 1.0;
    std::optional<double> wall_ms;

    double abs_error() const { return std::abs(kappa_hat - kappa_star); }
    bool operator==(const TrialReport&) const = default;
};

struct TrialError {
    std::string scenario;
    double kappa_star = 0.0;
    std::uint64_t seed = 0;
    std::string estimator;
    std::string variant;
    std::string error;  // exception type tag
    std::string message;
    bool operator==(const TrialError&) const = default;
};

struct RunResult {
    std::vector<TrialReport> reports;
    std::vector<TrialError> errors;
};

struct RunOptions {
    std::size_t jobs = 1;
    bool timing = false;
};

inline constexpr std::uint64_t kDataTag = 0xda7a;
inline constexpr std::uint64_t kAlphaTag = 0xa1fa;

// Stream for everything random inside one (kappa, seed, estimator) trial.
inline RngStream trial_stream(std::uint64_t base_seed, std::size_t kappa_index, std::uint64_t seed,
                              std::size_t estimator_index) {
    return RngStream(base_seed, mix_ids({kappa_index, seed, estimator_index}));
}

inline std::string error_tag(const std::exception& e) {
    if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
    if (dynamic_cast<const DomainError*>(&e)) return "domain";
    if (dynamic_cast<const InfeasibleError*>(&e)) return "infeasible";
    if (dynamic_cast<const InconsistencyError*>(&e)) return "inconsistency";
    if (dynamic_cast<const DegenerateAcceptanceError*>(&e)) return "degenerate_acceptance";
    if (dynamic_cast<const InsufficientDataError*>(&e)) return "insufficient_data";
    if (dynamic_cast<const DegenerateDataError*>(&e)) return "degenerate_data";
    if (dynamic_cast<const AnchorError*>(&e)) return "anchor";
    if (dynamic_cast<const ConsistencyError*>(&e)) return "consistency";
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const IoError*>(&e)) return "io";
    return "internal";
}

namespace detail {

struct Job {
    Variant variant;
    AlphaKind alpha = AlphaKind::one;
};

inline std::vector<Job> jobs_for(const ExperimentConfig& cfg) {
    std::vector<Job> out;
    for (auto v : cfg.variants) {
        if (v == Variant::sumpe)
            for (auto a : cfg.alphas) out.push_back({v, a});
        else
            out.push_back({v});
    }
    return out;
}

inline MpeEstimate run_variant(const ExperimentConfig& cfg, const Cell& cell, const BaseEstimatorSpec& est,
                               Variant v, const AcceptanceFn* alpha, const RngStream& rng) {
    if (cell.hf) {
        switch (v) {
            case Variant::base: return estimate_kappa_max(*cell.hf, *cell.hh, est);
            case Variant::rempe2: return rempe2_empirical(*cell.hf, *cell.hh, est, cfg.rempe_p);
            case Variant::sumpe: return sumpe(*cell.hf, *cell.hh, *alpha, est, rng);
        }
    }
    switch (v) {
        case Variant::base: return estimate_kappa_max(*cell.xf, *cell.xh, est, rng);
        case Variant::rempe2: return rempe2_empirical(*cell.xf, *cell.xh, est, cfg.rempe_p, rng);
        case Variant::sumpe: return sumpe(*cell.xf, *cell.xh, *alpha, est, rng);
    }
    throw ConfigError("unknown variant");
}

struct CellOutput {
    std::vector<TrialReport> reports;
    std::vector<TrialError> errors;
};

inline CellOutput run_cell(const ExperimentConfig& cfg, const ScenarioContext& ctx, std::size_t ki, std::uint64_t seed,
                           const RunOptions& opt) {
    using clock = std::chrono::steady_clock;
    const double kappa = cfg.kappa_grid[ki];
    const std::string scen = scenario_name(cfg.scenario);
    const auto jobs = jobs_for(cfg);
    CellOutput out;
    auto fail = [&](const std::string& est, const std::string& variant, const std::exception& e) {
        out.errors.push_back({scen, kappa, seed, est, variant, error_tag(e), e.what()});
    };

    std::optional<Cell> cell;
    std::optional<std::string> cell_error_tag, cell_error_msg;
    try {
        RngStream data(cfg.base_seed, mix_ids({kDataTag, ki, seed}));
        cell = make_cell(cfg, ctx, kappa, data);
    } catch (const std::exception& e) {
        for (const auto& est : cfg.estimators)
            for (const auto& j : jobs) fail(est.tag, variant_label(j.variant, j.alpha), e);
        return out;
    }

    // Acceptance functions are shared by every estimator in the cell.
    std::vector<std::optional<AcceptanceFn>> alphas(cfg.alphas.size());
    std::vector<std::string> alpha_tag(cfg.alphas.size()), alpha_msg(cfg.alphas.size());
    bool need_alpha = std::find(cfg.variants.begin(), cfg.variants.end(), Variant::sumpe) != cfg.variants.end();
    if (need_alpha)
        for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
            try {
                RngStream arng(cfg.base_seed, mix_ids({kAlphaTag, ki, seed, static_cast<std::uint64_t>(cfg.alphas[a])}));
                alphas[a] = cell->alpha(cfg.alphas[a], arng);
            } catch (const std::exception& e) {
                alpha_tag[a] = error_tag(e);
                alpha_msg[a] = e.what();
            }
        }

    for (std::size_t ei = 0; ei < cfg.estimators.size(); ++ei) {
        const auto& est = cfg.estimators[ei];
        const auto rng = trial_stream(cfg.base_seed, ki, seed, ei);
        for (const auto& j : jobs) {
            const std::string label = variant_label(j.variant, j.alpha);
            const AcceptanceFn* alpha = nullptr;
            if (j.variant == Variant::sumpe) {
                auto a = static_cast<std::size_t>(
                    std::find(cfg.alphas.begin(), cfg.alphas.end(), j.alpha) - cfg.alphas.begin());
                if (!alphas[a]) {
                    out.errors.push_back({scen, kappa, seed, est.tag, label, alpha_tag[a], alpha_msg[a]});
                    continue;
                }
                alpha = &*alphas[a];
            }
            try {
                auto t0 = clock::now();
                auto r = run_variant(cfg, *cell, est, j.variant, alpha, rng);
                auto t1 = clock::now();
                TrialReport rep{scen, kappa, seed, est.tag, label, r.kappa_hat, r.c_hat, std::nullopt};
                if (opt.timing) rep.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
                out.reports.push_back(std::move(rep));
            } catch (const std::exception& e) {
                fail(est.tag, label, e);
            }
        }
    }
    return out;
}

}  // namespace detail

// Trials are independent per (kappa, seed) cell; output order follows the
// config (kappa grid, seed, estimator, variant) whatever the thread count.
inline RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    cfg.validate();
    const auto ctx = prepare_context(cfg);
    const std::size_t cells = cfg.kappa_grid.size() * cfg.seeds;
    std::vector<detail::CellOutput> results(cells);
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mu;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells;) {
            try {
                results[i] = detail::run_cell(cfg, ctx, i / cfg.seeds, i % cfg.seeds, opt);
            } catch (...) {
                std::lock_guard lock(fatal_mu);
                if (!fatal) fatal = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(opt.jobs, 1, cells);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (fatal) std::rethrow_exception(fatal);
    RunResult out;
    for (auto& r : results) {
        std::move(r.reports.begin(), r.reports.end(), std::back_inserter(out.reports));
        std::move(r.errors.begin(), r.errors.end(), std::back_inserter(out.errors));
    }
    return out;
}

}  // namespace mpe::harness
