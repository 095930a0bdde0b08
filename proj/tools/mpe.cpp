// Command-line front end: population-check, run, report, demo.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "mpe/harness/config.hpp"
#include "mpe/harness/identity_suite.hpp"
#include "mpe/harness/report.hpp"

#ifndef MPE_CONFIG_DIR
#define MPE_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace mpe;
using namespace mpe::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTrials = 3;

void print_summary(const Summary& s) {
    std::printf("%-20s %-8s %-10s %-14s %5s %8s %9s %4s %8s\n", "scenario", "kappa*", "estimator", "variant", "n",
                "mae", "bias", "sgn", "se");
    for (const auto& g : s.groups)
        std::printf("%-20s %-8.3g %-10s %-14s %5zu %8.4f %+9.4f %4s %8.4f\n", g.scenario.c_str(), g.kappa_star,
                    g.estimator.c_str(), g.variant.c_str(), g.count, g.mae, g.bias, g.sign.c_str(), g.se);
    if (s.averages.empty()) return;
    std::printf("\naverage over kappa grid\n");
    for (const auto& a : s.averages)
        std::printf("%-20s %-10s %-14s %8.4f %+9.4f %4s\n", a.scenario.c_str(), a.estimator.c_str(),
                    a.variant.c_str(), a.mae, a.bias, a.sign.c_str());
}

int run_config(ExperimentConfig cfg, std::optional<std::string> out, std::optional<std::uint64_t> seed,
               std::size_t jobs, bool timing) {
    if (seed) {
        cfg.base_seed = *seed;
        cfg.source["base_seed"] = *seed;
    }
    fs::path dir = out ? fs::path(*out) : cfg.output_dir.empty() ? fs::path("out") / cfg.name : fs::path(cfg.output_dir);
    auto result = run_experiment(cfg, {jobs, timing});
    auto summary = aggregate(result.reports);
    emit(result, summary, dir);
    write_file(dir / "config_echo.json", cfg.source.dump(2) + "\n");
    print_summary(summary);
    std::printf("\n%zu trials, %zu failed; output in %s\n", result.reports.size() + result.errors.size(),
                result.errors.size(), dir.string().c_str());
    if (!result.errors.empty()) {
        for (const auto& e : result.errors)
            std::fprintf(stderr, "trial failed: kappa*=%g seed=%llu %s/%s: [%s] %s\n", e.kappa_star,
                         static_cast<unsigned long long>(e.seed), e.estimator.c_str(), e.variant.c_str(),
                         e.error.c_str(), e.message.c_str());
        return kExitTrials;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixture proportion estimation: subsampling, regrouping and experiment harness"};
    app.require_subcommand(1);

    auto* check = app.add_subcommand("population-check", "Run the exact population identity suite");
    std::uint64_t check_seed = 1;
    check->add_option("--seed", check_seed, "Seed for the random triples");

    auto* run = app.add_subcommand("run", "Run an experiment config");
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    bool timing = false;
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out, "Output directory");
    run->add_option("--seed", seed, "Override the config's base seed");
    run->add_option("--jobs", jobs, "Parallel trial cells")->check(CLI::PositiveNumber);
    run->add_flag("--timing", timing, "Record wall time per trial (makes trials.csv run-dependent)");

    auto* report = app.add_subcommand("report", "Re-aggregate trials.csv in an output directory");
    std::string in_dir;
    report->add_option("--in", in_dir, "Directory holding trials.csv")->required();

    auto* demo = app.add_subcommand("demo", "Run a shipped config by scenario name");
    std::string demo_name;
    std::string config_dir = MPE_CONFIG_DIR;
    demo->add_option("scenario", demo_name, "Config name under the config directory")->required();
    demo->add_option("--out", out, "Output directory");
    demo->add_option("--seed", seed, "Override the config's base seed");
    demo->add_option("--jobs", jobs, "Parallel trial cells")->check(CLI::PositiveNumber);
    demo->add_option("--config-dir", config_dir, "Directory of shipped configs");
    demo->add_flag("--timing", timing, "Record wall time per trial");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*check) {
            bool ok = true;
            for (const auto& r : run_identity_suite(check_seed)) {
                std::printf("%s  %s (%s)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
                ok = ok && r.passed;
            }
            return ok ? kExitOk : kExitFailure;
        }
        if (*run) return run_config(load_config(config_path), out, seed, jobs, timing);
        if (*demo) {
            fs::path path = fs::path(config_dir) / (demo_name + ".json");
            if (!fs::exists(path)) throw ConfigError("no shipped config named " + demo_name + " in " + config_dir);
            return run_config(load_config(path.string()), out, seed, jobs, timing);
        }
        if (*report) {
            fs::path dir(in_dir);
            auto reports = read_trials_csv(dir / "trials.csv");
            std::size_t failed = 0;
            if (fs::exists(dir / "errors.csv")) {
                auto text = read_file(dir / "errors.csv");
                failed = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
                failed = failed > 0 ? failed - 1 : 0;
            }
            auto summary = aggregate(reports);
            write_file(dir / "summary.json", summary_json(summary, failed).dump(2) + "\n");
            std::set<std::string> scenarios;
            for (const auto& g : summary.groups) scenarios.insert(g.scenario);
            for (const auto& sc : scenarios) write_file(dir / (sc + "_plot.svg"), plot_svg(summary, sc));
            print_summary(summary);
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitOk;
}
