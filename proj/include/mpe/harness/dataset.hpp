#pragma once

// Labeled tabular data for the benchmark-style scenarios.

#include <charconv>
#include <fstream>
#include <sstream>

#include "mpe/core.hpp"
#include "mpe/harness/config.hpp"
#include "mpe/sampling.hpp"

namespace mpe::harness {

struct Dataset {
    std::size_t dim = 0;
    std::vector<LabeledExample> rows;
    bool has_z = false;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        auto b = f.find_first_not_of(" \t");
        auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

inline double parse_number(const std::string& s, const std::string& ctx) {
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    auto [p, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw IoError(ctx + ": not a number: '" + s + "'");
    return v;
}

inline int parse_binary(const std::string& s, const std::string& ctx) {
    double v = parse_number(s, ctx);
    if (v != 0.0 && v != 1.0) throw IoError(ctx + ": label must be 0 or 1, got '" + s + "'");
    return static_cast<int>(v);
}

}  // namespace detail

// Header row required; `y` is the label, optional `z`, every other column a numeric feature.
inline Dataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    auto header = detail::split_csv_line(line);
    std::optional<std::size_t> ycol, zcol;
    std::vector<std::size_t> features;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "y") {
            if (ycol) throw IoError(path + ": duplicate column y");
            ycol = i;
        } else if (header[i] == "z") {
            if (zcol) throw IoError(path + ": duplicate column z");
            zcol = i;
        } else {
            features.push_back(i);
        }
    }
    if (!ycol) throw IoError(path + ": no label column named y");
    if (features.empty()) throw IoError(path + ": no feature columns");

    Dataset d;
    d.dim = features.size();
    d.has_z = zcol.has_value();
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = detail::split_csv_line(line);
        const std::string ctx = path + ":" + std::to_string(lineno);
        if (fields.size() != header.size())
            throw IoError(ctx + ": expected " + std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));
        LabeledExample e;
        e.x.reserve(features.size());
        for (auto c : features) e.x.push_back(detail::parse_number(fields[c], ctx));
        e.y = detail::parse_binary(fields[*ycol], ctx);
        if (zcol) {
            e.z = detail::parse_binary(fields[*zcol], ctx);
            if (e.y == 1 && *e.z == 0) throw IoError(ctx + ": y = 1 requires z = 1 (no false reports)");
        }
        d.rows.push_back(std::move(e));
    }
    if (d.rows.empty()) throw IoError(path + ": no data rows");
    return d;
}

// Two unit-variance Gaussian classes whose means differ by `separation` along the first axis.
inline Dataset gaussian_dataset(const DatasetParams& p, RngStream& rng) {
    Dataset d;
    d.dim = p.dim;
    auto draw = [&](std::size_t count, int y, double shift) {
        for (std::size_t i = 0; i < count; ++i) {
            LabeledExample e;
            e.x.resize(p.dim);
            for (auto& v : e.x) v = rng.normal();
            e.x[0] += shift;
            e.y = y;
            d.rows.push_back(std::move(e));
        }
    };
    draw(p.positives, 1, 0.5 * p.separation);
    draw(p.negatives, 0, -0.5 * p.separation);
    return d;
}

}  // namespace mpe::harness
