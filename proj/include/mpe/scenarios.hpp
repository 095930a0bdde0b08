#pragma once

#include <memory>

#include "mpe/core.hpp"
#include "mpe/learner.hpp"

namespace mpe {

using Predicate = std::function<bool(std::span<const double>)>;

// alpha = s on A, 1 elsewhere.
inline AcceptanceFn constant_alpha(Predicate A, double s) {
    if (!(s > 0.0 && s <= 1.0)) throw DomainError("constant_alpha: s must lie in (0,1]");
    if (!A) throw DomainError("constant_alpha: empty region predicate");
    return AcceptanceFn([A, s](std::span<const double> x) { return A(x) ? s : 1.0; }, A);
}

// alpha = p(x) where region(x) holds, 1 elsewhere.
inline AcceptanceFn region_alpha(std::function<double(std::span<const double>)> p, Predicate region) {
    return AcceptanceFn([p, region](std::span<const double> x) { return region(x) ? p(x) : 1.0; }, region);
}

struct UnfoldingOptions {
    // Anchor bins; default to the bins just outside A.
    std::optional<std::size_t> anchor_lo;
    std::optional<std::size_t> anchor_hi;
    // Average each anchor with the two bins further from A.
    bool average3 = false;
};

struct UnfoldingAlpha {
    AcceptanceFn alpha;
    std::vector<double> per_bin;  // alpha for every bin of the histogram
    std::vector<double> rho;      // interpolated background density, 0 outside A
};

// alpha = 1 - rho/f on A = [lo, hi], rho linear between the anchors on the density scale.
inline UnfoldingAlpha unfolding_alpha_detail(const Histogram& hf, std::size_t lo, std::size_t hi,
                                             const UnfoldingOptions& opt = {}) {
    const std::size_t B = hf.bins();
    if (lo > hi) throw DomainError("unfolding_alpha: empty peak region");
    if (lo == 0 || hi + 1 >= B) throw DomainError("unfolding_alpha: peak region must lie strictly inside the histogram");
    if (hf.total() == 0) throw AnchorError("unfolding_alpha: histogram is empty");
    std::size_t alo = opt.anchor_lo.value_or(lo - 1);
    std::size_t ahi = opt.anchor_hi.value_or(hi + 1);
    if (alo >= lo || ahi <= hi || ahi >= B) throw DomainError("unfolding_alpha: anchors must lie outside A");

    const double total = static_cast<double>(hf.total());
    auto density = [&](std::size_t b) { return static_cast<double>(hf.counts()[b]) / (total * hf.width(b)); };
    auto anchor = [&](std::size_t a, bool below) {
        std::vector<std::size_t> bins{a};
        if (opt.average3)
            for (std::size_t k = 1; k <= 2; ++k) {
                if (below && a >= k) bins.push_back(a - k);
                if (!below && a + k < B) bins.push_back(a + k);
            }
        double pos = 0.0, val = 0.0;
        for (auto b : bins) {
            pos += hf.center(b);
            val += density(b);
        }
        return std::pair{pos / static_cast<double>(bins.size()), val / static_cast<double>(bins.size())};
    };
    auto [x0, y0] = anchor(alo, true);
    auto [x1, y1] = anchor(ahi, false);
    if (y0 <= 0.0 && y1 <= 0.0) throw AnchorError("unfolding_alpha: both interpolation anchors have zero counts");

    UnfoldingAlpha out;
    out.per_bin.assign(B, 1.0);
    out.rho.assign(B, 0.0);
    for (std::size_t b = lo; b <= hi; ++b) {
        double t = (hf.center(b) - x0) / (x1 - x0);
        double rho = y0 + t * (y1 - y0);
        out.rho[b] = rho;
        double f = density(b);
        out.per_bin[b] = f > 0.0 ? std::clamp(1.0 - rho / f, 0.0, 1.0) : 1.0;
    }
    auto edges = hf.edges();
    auto table = out.per_bin;
    out.alpha = AcceptanceFn(
        [edges, table](std::span<const double> x) { return table[Histogram::locate(edges, x[0])]; },
        [edges, lo, hi](std::span<const double> x) {
            auto b = Histogram::locate(edges, x[0]);
            return b >= lo && b <= hi;
        });
    return out;
}

inline AcceptanceFn unfolding_alpha(const Histogram& hf, std::size_t lo, std::size_t hi,
                                    const UnfoldingOptions& opt = {}) {
    return unfolding_alpha_detail(hf, lo, hi, opt).alpha;
}

// alpha = p_hat(x) where p_hat(x) > threshold (and x lies in the optional support), 1 elsewhere.
inline AcceptanceFn posterior_alpha(ClassifierModel model, double threshold, Predicate support = nullptr) {
    auto m = std::make_shared<const ClassifierModel>(std::move(model));
    auto region = [m, threshold, support](std::span<const double> x) {
        if (support && !support(x)) return false;
        return predict_proba(*m, x) > threshold;
    };
    return AcceptanceFn(
        [m, region](std::span<const double> x) { return region(x) ? predict_proba(*m, x) : 1.0; }, region);
}

inline AcceptanceFn cspl_alpha(const std::vector<LabeledExample>& source_data, const TrainConfig& cfg,
                               double threshold, RngStream& rng, Predicate support = nullptr) {
    return posterior_alpha(train(source_data, cfg, rng), threshold, std::move(support));
}

inline AcceptanceFn cspl_alpha(const std::vector<LabeledExample>& source_data, const TrainConfig& cfg,
                               RngStream& rng) {
    return cspl_alpha(source_data, cfg, 0.5, rng);
}

// report_data: (x, y) observed among Z = 1 cases.
inline AcceptanceFn reporting_alpha(const std::vector<LabeledExample>& report_data, const TrainConfig& cfg,
                                    double threshold, RngStream& rng) {
    if (report_data.empty()) throw DegenerateDataError("reporting_alpha: no report data");
    std::size_t reported = 0;
    for (const auto& e : report_data) {
        if (e.z && *e.z != 1) throw DomainError("reporting_alpha: report data must all have z = 1");
        reported += e.y == 1;
    }
    // All reported: e = 1 and alpha = 1 on A = everything. None reported: A is empty.
    if (reported == report_data.size()) {
        Predicate all = [](std::span<const double>) { return true; };
        return AcceptanceFn([](std::span<const double>) { return 1.0; }, all);
    }
    if (reported == 0) {
        Predicate none = [](std::span<const double>) { return false; };
        return AcceptanceFn([](std::span<const double>) { return 1.0; }, none);
    }
    return posterior_alpha(train(report_data, cfg, rng), threshold);
}

inline AcceptanceFn reporting_alpha(const std::vector<LabeledExample>& report_data, const TrainConfig& cfg,
                                    RngStream& rng) {
    return reporting_alpha(report_data, cfg, 0.6, rng);
}

}  // namespace mpe
