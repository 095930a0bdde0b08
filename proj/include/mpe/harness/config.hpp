#pragma once

// Experiment configuration and its JSON form. Unknown keys are rejected at
// every level; see docs/config.md for the schema.

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mpe/estimators.hpp"
#include "mpe/sampling.hpp"

namespace mpe::harness {

using nlohmann::json;

enum class ScenarioKind { synthetic, gamma, irreducible, discrete, benchmark_cspl, benchmark_reporting };
enum class Variant { base, rempe2, sumpe };
enum class AlphaKind { oracle, plugin, one };

inline const std::map<std::string, ScenarioKind> kScenarioNames{
    {"synthetic", ScenarioKind::synthetic},       {"gamma", ScenarioKind::gamma},
    {"irreducible", ScenarioKind::irreducible},   {"discrete", ScenarioKind::discrete},
    {"benchmark_cspl", ScenarioKind::benchmark_cspl}, {"benchmark_reporting", ScenarioKind::benchmark_reporting}};

inline std::string scenario_name(ScenarioKind k) {
    for (const auto& [name, v] : kScenarioNames)
        if (v == k) return name;
    return "unknown";
}

// Report label for a variant; sumpe runs carry their alpha kind.
inline std::string variant_label(Variant v, AlphaKind a) {
    switch (v) {
        case Variant::base: return "base";
        case Variant::rempe2: return "rempe2";
        case Variant::sumpe:
            return a == AlphaKind::oracle ? "sumpe" : a == AlphaKind::plugin ? "sumpe-plugin" : "sumpe-one";
    }
    return "unknown";
}

struct SyntheticParams {
    GaussianMixtureSpec h{{1.0}, {0.0}, {1.0}};
    GaussianMixtureSpec g{{0.8, 0.2}, {3.0, 4.0}, {2.0, 1.0}};
    GaussianMixtureSpec source_g{{0.8, 0.2}, {3.0, 5.0}, {2.0, 1.0}};
    std::size_t source_n = 4000;
    double support_max = 2.0;  // A = (-inf, support_max]
    double plugin_threshold = 0.0;
    TrainConfig train;
};

struct GammaParams {
    SpectrumSpec spectrum;
    std::size_t peak_halfwidth = 3;  // A = center +- halfwidth bins
    std::size_t anchor_offset = 10;  // anchors at center +- offset
    bool anchor_average3 = false;
};

struct IrreducibleParams {
    GaussianMixtureSpec h{{1.0}, {0.0}, {1.0}};
    GaussianMixtureSpec g{{1.0}, {2.0}, {1.0}};
    std::size_t labeled_n = 2000;
    double threshold = 0.6;
    TrainConfig train;
};

struct DiscreteParams {
    std::vector<double> g{0.2, 0.3, 0.5};
    std::vector<double> h{0.5, 0.5, 0.0};
};

struct DatasetParams {
    std::string source = "gaussian";  // gaussian | csv
    std::string path;
    std::size_t dim = 1;
    double separation = 4.0;
    std::size_t positives = 3000;
    std::size_t negatives = 3000;
};

struct BenchmarkParams {
    DatasetParams dataset;
    double keep_fraction = 0.9;
    double negative_factor = 0.95;
    std::optional<double> threshold;  // 0.5 for cspl, 0.6 for reporting
    TrainConfig train;
};

struct ExperimentConfig {
    std::string name;
    ScenarioKind scenario = ScenarioKind::synthetic;
    std::vector<double> kappa_grid{0.1, 0.25, 0.5, 0.75};
    std::size_t m = 1000;
    std::size_t n = 1000;
    std::size_t seeds = 10;
    std::uint64_t base_seed = 1;
    std::vector<Variant> variants{Variant::base, Variant::rempe2, Variant::sumpe};
    std::vector<AlphaKind> alphas{AlphaKind::plugin};
    double rempe_p = 0.1;
    std::vector<BaseEstimatorSpec> estimators{BaseEstimatorSpec{}};
    std::string output_dir;

    SyntheticParams synthetic;
    GammaParams gamma;
    IrreducibleParams irreducible;
    DiscreteParams discrete;
    BenchmarkParams benchmark;

    json source;  // the document this config was read from

    void validate() const {
        if (kappa_grid.empty()) throw ConfigError("config: kappa_grid is empty");
        for (double k : kappa_grid)
            if (!(k >= 0.0 && k <= 1.0)) throw ConfigError("config: kappa values must lie in [0,1]");
        if (seeds < 1) throw ConfigError("config: seeds must be >= 1");
        if (m < 1 || n < 1) throw ConfigError("config: m and n must be >= 1");
        if (variants.empty()) throw ConfigError("config: no variants");
        if (alphas.empty()) throw ConfigError("config: no alpha kinds");
        if (estimators.empty()) throw ConfigError("config: no estimators");
        if (!(rempe_p > 0.0 && rempe_p <= 0.5)) throw ConfigError("config: rempe_p must lie in (0, 0.5]");
        std::set<std::string> tags;
        for (const auto& e : estimators) {
            try {
                e.validate();
            } catch (const Error& err) {
                throw ConfigError(std::string("config: ") + err.what());
            }
            if (!tags.insert(e.tag).second) throw ConfigError("config: duplicate estimator tag " + e.tag);
            if (scenario == ScenarioKind::gamma && e.kind != EstimatorKind::histogram_ratio)
                throw ConfigError("config: gamma scenario needs histogram_ratio estimators");
        }
        if (scenario == ScenarioKind::discrete)
            for (auto a : alphas)
                if (a == AlphaKind::plugin) throw ConfigError("config: discrete scenario has no plug-in alpha");
        if (scenario == ScenarioKind::benchmark_cspl || scenario == ScenarioKind::benchmark_reporting)
            for (auto a : alphas)
                if (a == AlphaKind::oracle) throw ConfigError("config: benchmark scenarios have no oracle alpha");
        if (scenario == ScenarioKind::gamma) {
            try {
                gamma.spectrum.validate();
            } catch (const Error& err) {
                throw ConfigError(std::string("config: ") + err.what());
            }
        }
        if ((scenario == ScenarioKind::benchmark_cspl || scenario == ScenarioKind::benchmark_reporting) &&
            benchmark.dataset.source == "csv" && benchmark.dataset.path.empty())
            throw ConfigError("config: csv dataset needs a path");
    }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError("config: unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
    }
}

template <class E>
E read_enum(const json& j, const char* key, E fallback, const std::map<std::string, E>& names,
            const std::string& where) {
    if (!j.contains(key)) return fallback;
    std::string s;
    read(j, key, s, where);
    auto it = names.find(s);
    if (it == names.end()) throw ConfigError("config: unknown value '" + s + "' for '" + key + "' in " + where);
    return it->second;
}

inline GaussianMixtureSpec read_mixture(const json& j, const std::string& where) {
    check_keys(j, {"weights", "means", "stddevs"}, where);
    GaussianMixtureSpec s;
    read(j, "weights", s.weights, where);
    read(j, "means", s.means, where);
    read(j, "stddevs", s.stddevs, where);
    try {
        s.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + where + ": " + e.what());
    }
    return s;
}

inline TrainConfig read_train(const json& j, const std::string& where) {
    check_keys(j, {"architecture", "degree", "hidden", "epochs", "learning_rate", "l2", "batch_size", "optimizer", "seed"},
               where);
    TrainConfig t;
    t.architecture = read_enum(j, "architecture", t.architecture,
                               {{"logistic_poly", Architecture::logistic_poly}, {"mlp", Architecture::mlp}}, where);
    t.optimizer = read_enum(j, "optimizer", t.optimizer, {{"gd", Optimizer::gd}, {"adam", Optimizer::adam}}, where);
    read(j, "degree", t.degree, where);
    read(j, "hidden", t.hidden, where);
    read(j, "epochs", t.epochs, where);
    read(j, "learning_rate", t.learning_rate, where);
    read(j, "l2", t.l2, where);
    read(j, "batch_size", t.batch_size, where);
    read(j, "seed", t.seed, where);
    try {
        t.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + where + ": " + e.what());
    }
    return t;
}

inline BaseEstimatorSpec read_estimator(const json& j, const std::string& where) {
    check_keys(j, {"tag", "kind", "bins", "edges", "tau", "delta", "correction", "z", "sets", "floor", "aggregation", "q",
                   "train"},
               where);
    BaseEstimatorSpec s;
    read(j, "tag", s.tag, where);
    s.kind = read_enum(j, "kind", s.kind,
                       {{"histogram_ratio", EstimatorKind::histogram_ratio},
                        {"classifier_ratio", EstimatorKind::classifier_ratio}},
                       where);
    auto& h = s.histogram;
    read(j, "bins", h.bins, where);
    read(j, "edges", h.edges, where);
    read(j, "tau", h.tau, where);
    read(j, "delta", h.delta, where);
    read(j, "z", h.z, where);
    read(j, "floor", h.floor, where);
    h.correction = read_enum(j, "correction", h.correction,
                             {{"none", Correction::none}, {"hoeffding", Correction::hoeffding},
                              {"binomial", Correction::binomial}},
                             where);
    h.sets = read_enum(j, "sets", h.sets, {{"bins", SetFamily::bins}, {"intervals", SetFamily::intervals}}, where);
    auto& c = s.classifier;
    c.aggregation = read_enum(j, "aggregation", c.aggregation,
                              {{"min", Aggregation::min}, {"quantile", Aggregation::quantile},
                               {"harmonic_mean", Aggregation::harmonic_mean}},
                              where);
    read(j, "q", c.q, where);
    if (j.contains("train")) c.train = read_train(j["train"], where + ".train");
    if (s.kind == EstimatorKind::classifier_ratio && !j.contains("tag")) s.tag = "cls";
    return s;
}

inline void read_scenario_params(const json& j, ExperimentConfig& c) {
    const std::string where = "scenario_params";
    switch (c.scenario) {
        case ScenarioKind::synthetic: {
            auto& p = c.synthetic;
            check_keys(j, {"h", "g", "source_g", "source_n", "support_max", "plugin_threshold", "train"}, where);
            if (j.contains("h")) p.h = read_mixture(j["h"], where + ".h");
            if (j.contains("g")) p.g = read_mixture(j["g"], where + ".g");
            if (j.contains("source_g")) p.source_g = read_mixture(j["source_g"], where + ".source_g");
            read(j, "source_n", p.source_n, where);
            read(j, "support_max", p.support_max, where);
            read(j, "plugin_threshold", p.plugin_threshold, where);
            if (j.contains("train")) p.train = read_train(j["train"], where + ".train");
            break;
        }
        case ScenarioKind::gamma: {
            auto& p = c.gamma;
            check_keys(j, {"spectrum", "peak_halfwidth", "anchor_offset", "anchor_average3"}, where);
            if (j.contains("spectrum")) {
                const auto& s = j["spectrum"];
                const std::string w = where + ".spectrum";
                check_keys(s, {"n_bins", "peak_center", "peak_width", "peak_fraction", "shelf_end", "decay",
                               "secondary_center", "secondary_width", "secondary_fraction"},
                           w);
                auto& sp = p.spectrum;
                read(s, "n_bins", sp.n_bins, w);
                read(s, "peak_center", sp.peak_center, w);
                read(s, "peak_width", sp.peak_width, w);
                read(s, "peak_fraction", sp.peak_fraction, w);
                read(s, "shelf_end", sp.shelf_end, w);
                read(s, "decay", sp.decay, w);
                read(s, "secondary_center", sp.secondary_center, w);
                read(s, "secondary_width", sp.secondary_width, w);
                read(s, "secondary_fraction", sp.secondary_fraction, w);
            }
            read(j, "peak_halfwidth", p.peak_halfwidth, where);
            read(j, "anchor_offset", p.anchor_offset, where);
            read(j, "anchor_average3", p.anchor_average3, where);
            if (p.anchor_offset <= p.peak_halfwidth)
                throw ConfigError("config: anchor_offset must exceed peak_halfwidth");
            break;
        }
        case ScenarioKind::irreducible: {
            auto& p = c.irreducible;
            check_keys(j, {"h", "g", "labeled_n", "threshold", "train"}, where);
            if (j.contains("h")) p.h = read_mixture(j["h"], where + ".h");
            if (j.contains("g")) p.g = read_mixture(j["g"], where + ".g");
            read(j, "labeled_n", p.labeled_n, where);
            read(j, "threshold", p.threshold, where);
            if (j.contains("train")) p.train = read_train(j["train"], where + ".train");
            break;
        }
        case ScenarioKind::discrete: {
            auto& p = c.discrete;
            check_keys(j, {"g", "h"}, where);
            read(j, "g", p.g, where);
            read(j, "h", p.h, where);
            try {
                DiscreteDist g(p.g), h(p.h);
                require_same_support(g, h, "discrete scenario");
            } catch (const Error& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
            break;
        }
        case ScenarioKind::benchmark_cspl:
        case ScenarioKind::benchmark_reporting: {
            auto& p = c.benchmark;
            check_keys(j, {"dataset", "keep_fraction", "negative_factor", "threshold", "train"}, where);
            if (j.contains("dataset")) {
                const auto& d = j["dataset"];
                const std::string w = where + ".dataset";
                check_keys(d, {"source", "path", "dim", "separation", "positives", "negatives"}, w);
                read(d, "source", p.dataset.source, w);
                read(d, "path", p.dataset.path, w);
                read(d, "dim", p.dataset.dim, w);
                read(d, "separation", p.dataset.separation, w);
                read(d, "positives", p.dataset.positives, w);
                read(d, "negatives", p.dataset.negatives, w);
                if (p.dataset.source != "gaussian" && p.dataset.source != "csv")
                    throw ConfigError("config: dataset.source must be 'gaussian' or 'csv'");
                if (p.dataset.dim < 1) throw ConfigError("config: dataset.dim must be >= 1");
            }
            read(j, "keep_fraction", p.keep_fraction, where);
            read(j, "negative_factor", p.negative_factor, where);
            if (j.contains("threshold")) {
                double t = 0.0;
                read(j, "threshold", t, where);
                p.threshold = t;
            }
            if (j.contains("train")) p.train = read_train(j["train"], where + ".train");
            if (!(p.keep_fraction > 0.0 && p.keep_fraction < 1.0))
                throw ConfigError("config: keep_fraction must lie in (0,1)");
            if (!(p.negative_factor > 0.0 && p.negative_factor <= 1.0))
                throw ConfigError("config: negative_factor must lie in (0,1]");
            break;
        }
    }
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
    detail::check_keys(j,
                       {"name", "scenario", "kappa_grid", "m", "n", "seeds", "base_seed", "variants", "alpha", "rempe_p",
                        "estimators", "scenario_params", "output_dir"},
                       "config");
    ExperimentConfig c;
    c.source = j;
    if (!j.contains("scenario")) throw ConfigError("config: missing 'scenario'");
    c.scenario = detail::read_enum(j, "scenario", c.scenario, kScenarioNames, "config");
    c.name = scenario_name(c.scenario);
    if (c.scenario == ScenarioKind::benchmark_cspl) c.benchmark.threshold = 0.5;
    if (c.scenario == ScenarioKind::benchmark_reporting) c.benchmark.threshold = 0.6;
    detail::read(j, "name", c.name, "config");
    detail::read(j, "kappa_grid", c.kappa_grid, "config");
    detail::read(j, "m", c.m, "config");
    detail::read(j, "n", c.n, "config");
    detail::read(j, "seeds", c.seeds, "config");
    detail::read(j, "base_seed", c.base_seed, "config");
    detail::read(j, "rempe_p", c.rempe_p, "config");
    detail::read(j, "output_dir", c.output_dir, "config");
    if (j.contains("variants")) {
        c.variants.clear();
        std::vector<std::string> v;
        detail::read(j, "variants", v, "config");
        const std::map<std::string, Variant> names{
            {"base", Variant::base}, {"rempe2", Variant::rempe2}, {"sumpe", Variant::sumpe}};
        for (const auto& s : v) {
            auto it = names.find(s);
            if (it == names.end()) throw ConfigError("config: unknown variant '" + s + "'");
            c.variants.push_back(it->second);
        }
    }
    if (j.contains("alpha")) {
        c.alphas.clear();
        std::vector<std::string> v;
        if (j["alpha"].is_string())
            v.push_back(j["alpha"].get<std::string>());
        else
            detail::read(j, "alpha", v, "config");
        const std::map<std::string, AlphaKind> names{
            {"oracle", AlphaKind::oracle}, {"plugin", AlphaKind::plugin}, {"one", AlphaKind::one}};
        for (const auto& s : v) {
            auto it = names.find(s);
            if (it == names.end()) throw ConfigError("config: unknown alpha kind '" + s + "'");
            c.alphas.push_back(it->second);
        }
    }
    if (c.scenario == ScenarioKind::discrete && !j.contains("alpha")) c.alphas = {AlphaKind::oracle};
    if (j.contains("estimators")) {
        if (!j["estimators"].is_array()) throw ConfigError("config: 'estimators' must be an array");
        c.estimators.clear();
        std::size_t i = 0;
        for (const auto& e : j["estimators"])
            c.estimators.push_back(detail::read_estimator(e, "estimators[" + std::to_string(i++) + "]"));
    }
    if (j.contains("scenario_params")) detail::read_scenario_params(j["scenario_params"], c);
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace mpe::harness
