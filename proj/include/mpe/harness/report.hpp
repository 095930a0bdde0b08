#pragma once

// Aggregation of trial reports and the on-disk artifacts: trials.csv,
// errors.csv, summary.json and <scenario>_plot.svg.

#include <array>
#include <filesystem>
#include <fstream>

#include "mpe/harness/dataset.hpp"
#include "mpe/harness/runner.hpp"

namespace mpe::harness {

struct GroupSummary {
    std::string scenario;
    double kappa_star = 0.0;
    std::string estimator;
    std::string variant;
    std::size_t count = 0;
    double mae = 0.0;
    double bias = 0.0;  // mean of kappa_hat - kappa_star
    std::string sign;
    double se = 0.0;  // standard error of the absolute error across seeds
};

struct AverageSummary {
    std::string scenario;
    std::string estimator;
    std::string variant;
    std::size_t kappas = 0;
    double mae = 0.0;  // mean of the per-kappa MAEs
    double bias = 0.0;
    std::string sign;
};

struct Summary {
    std::vector<GroupSummary> groups;
    std::vector<AverageSummary> averages;
};

inline std::string sign_tag(double bias) {
    if (std::abs(bias) <= 1e-12) return "\xC2\xB7";  // middle dot
    return bias > 0.0 ? "+" : "-";
}

// Groups keep the order in which they first appear in `reports`.
inline Summary aggregate(const std::vector<TrialReport>& reports) {
    Summary s;
    std::map<std::tuple<std::string, double, std::string, std::string>, std::size_t> index;
    std::vector<std::vector<double>> signed_err;
    for (const auto& r : reports) {
        auto key = std::tuple{r.scenario, r.kappa_star, r.estimator, r.variant};
        auto [it, fresh] = index.try_emplace(key, s.groups.size());
        if (fresh) {
            s.groups.push_back({r.scenario, r.kappa_star, r.estimator, r.variant, 0, 0.0, 0.0, {}, 0.0});
            signed_err.emplace_back();
        }
        signed_err[it->second].push_back(r.kappa_hat - r.kappa_star);
    }
    for (std::size_t g = 0; g < s.groups.size(); ++g) {
        const auto& e = signed_err[g];
        auto& out = s.groups[g];
        const double k = static_cast<double>(e.size());
        out.count = e.size();
        double abs_sum = 0.0, sum = 0.0;
        for (double v : e) {
            abs_sum += std::abs(v);
            sum += v;
        }
        out.mae = abs_sum / k;
        out.bias = sum / k;
        out.sign = sign_tag(out.bias);
        if (e.size() > 1) {
            double ss = 0.0;
            for (double v : e) ss += (std::abs(v) - out.mae) * (std::abs(v) - out.mae);
            out.se = std::sqrt(ss / (k - 1.0) / k);
        }
    }

    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> avg_index;
    for (const auto& g : s.groups) {
        auto [it, fresh] = avg_index.try_emplace(std::tuple{g.scenario, g.estimator, g.variant}, s.averages.size());
        if (fresh) s.averages.push_back({g.scenario, g.estimator, g.variant, 0, 0.0, 0.0, {}});
        auto& a = s.averages[it->second];
        ++a.kappas;
        a.mae += g.mae;
        a.bias += g.bias;
    }
    for (auto& a : s.averages) {
        a.mae /= static_cast<double>(a.kappas);
        a.bias /= static_cast<double>(a.kappas);
        a.sign = sign_tag(a.bias);
    }
    return s;
}

inline const GroupSummary* find_group(const Summary& s, double kappa, const std::string& variant,
                                      const std::string& estimator = "") {
    for (const auto& g : s.groups)
        if (g.kappa_star == kappa && g.variant == variant && (estimator.empty() || g.estimator == estimator)) return &g;
    return nullptr;
}

inline const AverageSummary* find_average(const Summary& s, const std::string& variant,
                                          const std::string& estimator = "") {
    for (const auto& a : s.averages)
        if (a.variant == variant && (estimator.empty() || a.estimator == estimator)) return &a;
    return nullptr;
}

// Shortest decimal form that parses back to the same double.
inline std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), p);
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline const char* kTrialsHeader = "scenario,kappa_star,seed,estimator,variant,kappa_hat,c_hat,abs_error,wall_ms";
inline const char* kErrorsHeader = "scenario,kappa_star,seed,estimator,variant,error,message";

inline std::string trials_csv(const std::vector<TrialReport>& reports) {
    std::string out = std::string(kTrialsHeader) + "\n";
    for (const auto& r : reports) {
        out += csv_escape(r.scenario) + "," + format_number(r.kappa_star) + "," + std::to_string(r.seed) + "," +
               csv_escape(r.estimator) + "," + csv_escape(r.variant) + "," + format_number(r.kappa_hat) + "," +
               format_number(r.c_hat) + "," + format_number(r.abs_error()) + "," +
               (r.wall_ms ? format_number(*r.wall_ms) : std::string()) + "\n";
    }
    return out;
}

inline std::string errors_csv(const std::vector<TrialError>& errors) {
    std::string out = std::string(kErrorsHeader) + "\n";
    for (const auto& e : errors)
        out += csv_escape(e.scenario) + "," + format_number(e.kappa_star) + "," + std::to_string(e.seed) + "," +
               csv_escape(e.estimator) + "," + csv_escape(e.variant) + "," + csv_escape(e.error) + "," +
               csv_escape(e.message) + "\n";
    return out;
}

inline nlohmann::ordered_json summary_json(const Summary& s, std::size_t error_count = 0) {
    using oj = nlohmann::ordered_json;
    oj groups = oj::array(), averages = oj::array();
    for (const auto& g : s.groups)
        groups.push_back(oj{{"scenario", g.scenario}, {"kappa_star", g.kappa_star}, {"estimator", g.estimator},
                            {"variant", g.variant},   {"count", g.count},           {"mae", g.mae},
                            {"bias", g.bias},         {"sign", g.sign},             {"se", g.se}});
    for (const auto& a : s.averages)
        averages.push_back(oj{{"scenario", a.scenario}, {"estimator", a.estimator}, {"variant", a.variant},
                              {"kappas", a.kappas},     {"mae", a.mae},             {"bias", a.bias},
                              {"sign", a.sign}});
    return oj{{"groups", groups}, {"averages", averages}, {"failed_trials", error_count}};
}

inline Summary parse_summary_json(const nlohmann::json& j) {
    Summary s;
    try {
        for (const auto& g : j.at("groups"))
            s.groups.push_back({g.at("scenario"), g.at("kappa_star"), g.at("estimator"), g.at("variant"),
                                g.at("count"), g.at("mae"), g.at("bias"), g.at("sign"), g.at("se")});
        for (const auto& a : j.at("averages"))
            s.averages.push_back({a.at("scenario"), a.at("estimator"), a.at("variant"), a.at("kappas"), a.at("mae"),
                                  a.at("bias"), a.at("sign")});
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("summary.json: ") + e.what());
    }
    return s;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace detail

// MAE against kappa*, one polyline per (estimator, variant) series.
inline std::string plot_svg(const Summary& s, const std::string& scenario) {
    const double W = 640, H = 400, L = 70, R = 170, T = 40, B = 50;
    std::vector<std::pair<std::string, std::vector<const GroupSummary*>>> series;
    std::set<std::string> estimators;
    for (const auto& g : s.groups)
        if (g.scenario == scenario) estimators.insert(g.estimator);
    double kmin = 1.0, kmax = 0.0, ymax = 0.0;
    for (const auto& g : s.groups) {
        if (g.scenario != scenario) continue;
        std::string name = estimators.size() > 1 ? g.variant + " (" + g.estimator + ")" : g.variant;
        auto it = std::find_if(series.begin(), series.end(), [&](const auto& p) { return p.first == name; });
        if (it == series.end()) {
            series.push_back({name, {}});
            it = series.end() - 1;
        }
        it->second.push_back(&g);
        kmin = std::min(kmin, g.kappa_star);
        kmax = std::max(kmax, g.kappa_star);
        ymax = std::max(ymax, g.mae);
    }
    if (kmax <= kmin) {
        kmin = std::max(0.0, kmin - 0.05);
        kmax = kmin + 0.1;
    }
    ymax = ymax > 0.0 ? ymax * 1.1 : 0.1;
    auto px = [&](double k) { return L + (k - kmin) / (kmax - kmin) * (W - L - R); };
    auto py = [&](double v) { return H - B - v / ymax * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

    std::string o;
    o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    o += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
    o += "<text x=\"" + detail::fixed(L, 1) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" +
         detail::xml_escape(scenario) + ": mean absolute error</text>\n";
    o += "<line x1=\"" + detail::fixed(L, 1) + "\" y1=\"" + detail::fixed(H - B, 1) + "\" x2=\"" +
         detail::fixed(W - R, 1) + "\" y2=\"" + detail::fixed(H - B, 1) + "\" stroke=\"black\"/>\n";
    o += "<line x1=\"" + detail::fixed(L, 1) + "\" y1=\"" + detail::fixed(T, 1) + "\" x2=\"" + detail::fixed(L, 1) +
         "\" y2=\"" + detail::fixed(H - B, 1) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double v = ymax * i / 4.0;
        o += "<text x=\"" + detail::fixed(L - 6, 1) + "\" y=\"" + detail::fixed(py(v) + 4, 1) +
             "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + detail::fixed(v, 3) + "</text>\n";
    }
    std::set<double> ks;
    for (const auto& [name, pts] : series)
        for (auto* g : pts) ks.insert(g->kappa_star);
    for (double k : ks)
        o += "<text x=\"" + detail::fixed(px(k), 1) + "\" y=\"" + detail::fixed(H - B + 16, 1) +
             "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" + detail::fixed(k, 2) +
             "</text>\n";
    o += "<text x=\"" + detail::fixed((L + W - R) / 2, 1) + "\" y=\"" + detail::fixed(H - 12, 1) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">kappa*</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& [name, pts] = series[i];
        const std::string color = colors[i % std::size(colors)];
        std::string points;
        for (auto* g : pts) points += (points.empty() ? "" : " ") + detail::fixed(px(g->kappa_star), 1) + "," +
                                      detail::fixed(py(g->mae), 1);
        o += "<polyline class=\"series\" data-series=\"" + detail::xml_escape(name) + "\" fill=\"none\" stroke=\"" +
             color + "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
        for (auto* g : pts)
            o += "<circle cx=\"" + detail::fixed(px(g->kappa_star), 1) + "\" cy=\"" + detail::fixed(py(g->mae), 1) +
                 "\" r=\"3\" fill=\"" + color + "\"/>\n";
        double ly = T + 10 + 18.0 * static_cast<double>(i);
        o += "<line x1=\"" + detail::fixed(W - R + 15, 1) + "\" y1=\"" + detail::fixed(ly, 1) + "\" x2=\"" +
             detail::fixed(W - R + 35, 1) + "\" y2=\"" + detail::fixed(ly, 1) + "\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
        o += "<text x=\"" + detail::fixed(W - R + 40, 1) + "\" y=\"" + detail::fixed(ly + 4, 1) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::xml_escape(name) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes trials.csv, summary.json, one plot per scenario, and errors.csv when
// any trial failed. A stale errors.csv from an earlier run is removed.
inline void emit(const RunResult& run, const Summary& summary, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "trials.csv", trials_csv(run.reports));
    write_file(dir / "summary.json", summary_json(summary, run.errors.size()).dump(2) + "\n");
    if (!run.errors.empty())
        write_file(dir / "errors.csv", errors_csv(run.errors));
    else
        std::filesystem::remove(dir / "errors.csv", ec);
    std::set<std::string> scenarios;
    for (const auto& g : summary.groups) scenarios.insert(g.scenario);
    for (const auto& sc : scenarios) write_file(dir / (sc + "_plot.svg"), plot_svg(summary, sc));
}

namespace detail {

// Splits one CSV record, honoring double-quoted fields.
inline std::vector<std::string> split_quoted(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

inline std::vector<TrialReport> parse_trials_csv(const std::string& text, const std::string& ctx = "trials.csv") {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || detail::split_quoted(line) != detail::split_quoted(kTrialsHeader))
        throw IoError(ctx + ": unexpected header");
    std::vector<TrialReport> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = ctx + ":" + std::to_string(lineno);
        auto f = detail::split_quoted(line);
        if (f.size() != 9) throw IoError(where + ": expected 9 fields");
        TrialReport r;
        r.scenario = f[0];
        r.kappa_star = detail::parse_number(f[1], where);
        auto [p, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), r.seed);
        if (ec != std::errc() || p != f[2].data() + f[2].size()) throw IoError(where + ": bad seed");
        r.estimator = f[3];
        r.variant = f[4];
        r.kappa_hat = detail::parse_number(f[5], where);
        r.c_hat = detail::parse_number(f[6], where);
        if (!f[8].empty()) r.wall_ms = detail::parse_number(f[8], where);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<TrialReport> read_trials_csv(const std::filesystem::path& path) {
    return parse_trials_csv(read_file(path), path.string());
}

}  // namespace mpe::harness
