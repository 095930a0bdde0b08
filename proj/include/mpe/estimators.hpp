#pragma once

#include <limits>

#include "mpe/core.hpp"
#include "mpe/learner.hpp"
#include "mpe/sampling.hpp"

namespace mpe {

enum class EstimatorKind { histogram_ratio, classifier_ratio };

// none: F(S)/H(S).
// hoeffding: (F(S) + eF) / max(H(S) - eH, floor), e = sqrt(ln(2/delta) / (2 n)).
// binomial: same shape with e = z * sqrt(p(1-p)/n); the F side uses max(p(1-p), 1/n).
enum class Correction { none, hoeffding, binomial };

// bins: S ranges over single bins. intervals: S ranges over runs of adjacent bins.
enum class SetFamily { bins, intervals };

enum class Aggregation { min, quantile, harmonic_mean };

struct HistogramParams {
    std::size_t bins = 32;
    std::vector<double> edges;  // shared edges; overrides bins when non-empty
    double tau = 5.0;           // minimum H count per set
    double delta = 0.05;
    Correction correction = Correction::hoeffding;
    double z = 1.0;
    SetFamily sets = SetFamily::bins;
    double floor = 1e-12;
};

struct ClassifierParams {
    TrainConfig train;
    Aggregation aggregation = Aggregation::quantile;
    double q = 0.05;
};

struct BaseEstimatorSpec {
    std::string tag = "hist";
    EstimatorKind kind = EstimatorKind::histogram_ratio;
    HistogramParams histogram;
    ClassifierParams classifier;

    void validate() const {
        if (kind == EstimatorKind::histogram_ratio) {
            const auto& p = histogram;
            if (p.edges.empty() && p.bins == 0) throw DomainError("estimator: bin count must be positive");
            if (!(p.tau >= 1.0)) throw DomainError("estimator: tau must be >= 1");
            if (!(p.delta > 0.0 && p.delta < 1.0)) throw DomainError("estimator: delta must lie in (0,1)");
            if (!(p.z >= 0.0)) throw DomainError("estimator: z must be >= 0");
            if (!(p.floor > 0.0)) throw DomainError("estimator: floor must be positive");
        } else {
            classifier.train.validate();
            if (classifier.aggregation == Aggregation::quantile && !(classifier.q > 0.0 && classifier.q < 1.0))
                throw DomainError("estimator: q must lie in (0,1)");
        }
    }
};

namespace detail {

inline constexpr std::uint64_t kRejectStream = 0x5eed0001;
inline constexpr std::uint64_t kRatioStream = 0x5eed0002;

inline double set_ratio(double fc, double nf, double hc, double nh, const HistogramParams& p) {
    double f = fc / nf;
    double h = hc / nh;
    switch (p.correction) {
        case Correction::none:
            return f / h;
        case Correction::hoeffding: {
            double ef = std::sqrt(std::log(2.0 / p.delta) / (2.0 * nf));
            double eh = std::sqrt(std::log(2.0 / p.delta) / (2.0 * nh));
            return (f + ef) / std::max(h - eh, p.floor);
        }
        case Correction::binomial: {
            double ef = p.z * std::sqrt(std::max(f * (1.0 - f), 1.0 / nf) / nf);
            double eh = p.z * std::sqrt(h * (1.0 - h) / nh);
            return (f + ef) / std::max(h - eh, p.floor);
        }
    }
    return f / h;
}

// Minimum set ratio over counts; witness is the first bin of the minimizing set.
inline MpeEstimate histogram_infimum(const std::vector<std::uint64_t>& cf, const std::vector<std::uint64_t>& ch,
                                     const HistogramParams& p) {
    double nf = 0.0, nh = 0.0;
    for (auto c : cf) nf += static_cast<double>(c);
    for (auto c : ch) nh += static_cast<double>(c);
    if (nf <= 0.0 || nh <= 0.0) throw InsufficientDataError("histogram_ratio: empty sample");

    double best = std::numeric_limits<double>::infinity();
    std::size_t witness = 0;
    bool any = false;
    const std::size_t B = cf.size();
    auto consider = [&](double fsum, double hsum, std::size_t start) {
        if (hsum < p.tau) return;
        double r = set_ratio(fsum, nf, hsum, nh, p);
        if (!any || r < best) {
            best = r;
            witness = start;
            any = true;
        }
    };
    if (p.sets == SetFamily::bins) {
        for (std::size_t b = 0; b < B; ++b) consider(static_cast<double>(cf[b]), static_cast<double>(ch[b]), b);
    } else {
        for (std::size_t i = 0; i < B; ++i) {
            double fs = 0.0, hs = 0.0;
            for (std::size_t j = i; j < B; ++j) {
                fs += static_cast<double>(cf[j]);
                hs += static_cast<double>(ch[j]);
                consider(fs, hs, i);
            }
        }
    }
    if (!any) throw InsufficientDataError("histogram_ratio: no set reaches the H-count threshold tau");
    MpeEstimate out;
    out.kappa_hat = std::clamp(best, 0.0, 1.0);
    out.witness = witness;
    out.method_tag = "histogram_ratio";
    return out;
}

inline void require_1d(const SampleSet& s) {
    if (s.dim() != 1) throw DimensionError("histogram_ratio needs 1-dimensional samples; use classifier_ratio");
}

}  // namespace detail

// Equal-width edges over the pooled range, unless the spec pins edges.
inline std::vector<double> resolve_edges(const SampleSet& xf, const SampleSet& xh, const HistogramParams& p) {
    if (!p.edges.empty()) return p.edges;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto* s : {&xf, &xh})
        for (std::size_t i = 0; i < s->size(); ++i) {
            lo = std::min(lo, s->scalar(i));
            hi = std::max(hi, s->scalar(i));
        }
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw InsufficientDataError("histogram_ratio: empty sample");
    return Histogram::equal_width_edges(lo, hi, p.bins);
}

// Spec with histogram edges fixed from the raw inputs, so derived samples share bins.
inline BaseEstimatorSpec freeze_edges(const BaseEstimatorSpec& spec, const SampleSet& xf, const SampleSet& xh) {
    BaseEstimatorSpec out = spec;
    if (spec.kind == EstimatorKind::histogram_ratio && spec.histogram.edges.empty()) {
        detail::require_1d(xf);
        detail::require_1d(xh);
        out.histogram.edges = resolve_edges(xf, xh, spec.histogram);
    }
    return out;
}

struct Discriminator {
    ClassifierModel model;
    double m_over_n = 1.0;

    // Estimated f(x)/h(x).
    double ratio(std::span<const double> x) const {
        double g = std::clamp(predict_proba(model, x), kRatioProbFloor, 1.0 - kRatioProbFloor);
        return m_over_n * (1.0 - g) / g;
    }
};

// Classifier of "came from X_H" (label 1) against "came from X_F" (label 0).
inline Discriminator fit_discriminator(const SampleSet& xf, const SampleSet& xh, const TrainConfig& cfg,
                                       RngStream& rng) {
    if (xf.empty() || xh.empty()) throw InsufficientDataError("classifier_ratio: empty sample");
    if (xf.dim() != xh.dim()) throw DimensionError("classifier_ratio: samples differ in dimension");
    std::vector<LabeledExample> ex;
    ex.reserve(xf.size() + xh.size());
    for (std::size_t i = 0; i < xh.size(); ++i) {
        auto p = xh.point(i);
        ex.push_back({std::vector<double>(p.begin(), p.end()), 1, std::nullopt});
    }
    for (std::size_t i = 0; i < xf.size(); ++i) {
        auto p = xf.point(i);
        ex.push_back({std::vector<double>(p.begin(), p.end()), 0, std::nullopt});
    }
    Discriminator d{train(ex, cfg, rng), static_cast<double>(xh.size()) / static_cast<double>(xf.size())};
    return d;
}

inline MpeEstimate estimate_kappa_max(const Histogram& hf, const Histogram& hh, const BaseEstimatorSpec& spec) {
    spec.validate();
    if (spec.kind != EstimatorKind::histogram_ratio)
        throw DomainError("estimate_kappa_max: histogram inputs need a histogram_ratio spec");
    if (hf.edges() != hh.edges()) throw DimensionError("estimate_kappa_max: histograms must share edges");
    auto out = detail::histogram_infimum(hf.counts(), hh.counts(), spec.histogram);
    out.method_tag = spec.tag;
    return out;
}

inline MpeEstimate estimate_kappa_max(const SampleSet& xf, const SampleSet& xh, const BaseEstimatorSpec& spec,
                                      RngStream rng) {
    spec.validate();
    if (xf.empty() || xh.empty()) throw InsufficientDataError("estimate_kappa_max: empty sample");
    if (xf.dim() != xh.dim()) throw DimensionError("estimate_kappa_max: samples differ in dimension");

    if (spec.kind == EstimatorKind::histogram_ratio) {
        detail::require_1d(xf);
        auto edges = resolve_edges(xf, xh, spec.histogram);
        auto hf = Histogram::from_samples(xf, edges);
        auto hh = Histogram::from_samples(xh, std::move(edges));
        auto out = detail::histogram_infimum(hf.counts(), hh.counts(), spec.histogram);
        out.method_tag = spec.tag;
        return out;
    }

    auto disc = fit_discriminator(xf, xh, spec.classifier.train, rng);
    std::vector<std::pair<double, std::size_t>> r(xh.size());
    for (std::size_t i = 0; i < xh.size(); ++i) r[i] = {disc.ratio(xh.point(i)), i};
    std::sort(r.begin(), r.end());
    MpeEstimate out;
    out.method_tag = spec.tag;
    switch (spec.classifier.aggregation) {
        case Aggregation::min:
            out.kappa_hat = r.front().first;
            out.witness = r.front().second;
            break;
        case Aggregation::quantile: {
            double pos = spec.classifier.q * static_cast<double>(r.size() - 1);
            auto lo = static_cast<std::size_t>(std::floor(pos));
            auto hi = std::min(lo + 1, r.size() - 1);
            double w = pos - static_cast<double>(lo);
            out.kappa_hat = (1.0 - w) * r[lo].first + w * r[hi].first;
            out.witness = r[w < 0.5 ? lo : hi].second;
            break;
        }
        case Aggregation::harmonic_mean: {
            double s = 0.0;
            for (const auto& [v, i] : r) s += 1.0 / v;
            out.kappa_hat = static_cast<double>(r.size()) / s;
            out.witness = r.front().second;
            break;
        }
    }
    out.kappa_hat = std::clamp(out.kappa_hat, 0.0, 1.0);
    return out;
}

// Rejection-sample X_F with alpha, estimate on the kept part, scale by the kept fraction.
inline MpeEstimate sumpe(const SampleSet& xf, const SampleSet& xh, const AcceptanceFn& alpha,
                         const BaseEstimatorSpec& base, RngStream rng) {
    if (xf.empty()) throw InsufficientDataError("sumpe: X_F is empty");
    auto reject = rng.derive(detail::kRejectStream);
    auto kept = rejection_sample(xf, alpha, reject);
    if (kept.empty()) throw DegenerateAcceptanceError("sumpe: rejection sampling kept no points");
    auto frozen = freeze_edges(base, xf, xh);
    auto inner = estimate_kappa_max(kept, xh, frozen, rng);
    double c = static_cast<double>(kept.size()) / static_cast<double>(xf.size());
    MpeEstimate out;
    out.c_hat = c;
    out.kappa_hat = std::clamp(c * inner.kappa_hat, 0.0, 1.0);
    out.witness = inner.witness;
    out.method_tag = "sumpe/" + base.tag;
    return out;
}

inline MpeEstimate sumpe(const Histogram& hf, const Histogram& hh, const AcceptanceFn& alpha,
                         const BaseEstimatorSpec& base, RngStream rng) {
    if (hf.total() == 0) throw InsufficientDataError("sumpe: F histogram is empty");
    auto reject = rng.derive(detail::kRejectStream);
    auto kept = rejection_sample(hf, alpha, reject);
    if (kept.total() == 0) throw DegenerateAcceptanceError("sumpe: rejection sampling kept no counts");
    auto inner = estimate_kappa_max(kept, hh, base);
    double c = static_cast<double>(kept.total()) / static_cast<double>(hf.total());
    MpeEstimate out;
    out.c_hat = c;
    out.kappa_hat = std::clamp(c * inner.kappa_hat, 0.0, 1.0);
    out.witness = inner.witness;
    out.method_tag = "sumpe/" + base.tag;
    return out;
}

namespace detail {
inline std::size_t moved_count(double p, std::size_t n) {
    if (!(p > 0.0 && p <= 0.5)) throw DomainError("rempe2: p must lie in (0, 0.5]");
    return static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
}
}  // namespace detail

// Moves the p-fraction of X_F with the smallest estimated f/h into X_H, then estimates.
inline MpeEstimate rempe2_empirical(const SampleSet& xf, const SampleSet& xh, const BaseEstimatorSpec& base,
                                    double p, RngStream rng) {
    if (xf.empty() || xh.empty()) throw InsufficientDataError("rempe2: empty sample");
    const std::size_t k = detail::moved_count(p, xf.size());
    auto frozen = freeze_edges(base, xf, xh);

    std::vector<double> ratio(xf.size());
    if (frozen.kind == EstimatorKind::histogram_ratio) {
        auto hf = Histogram::from_samples(xf, frozen.histogram.edges);
        auto hh = Histogram::from_samples(xh, frozen.histogram.edges);
        double nf = static_cast<double>(hf.total()), nh = static_cast<double>(hh.total());
        for (std::size_t i = 0; i < xf.size(); ++i) {
            auto b = hf.bin_of(xf.scalar(i));
            ratio[i] = hh.counts()[b] == 0 ? std::numeric_limits<double>::infinity()
                                           : (static_cast<double>(hf.counts()[b]) / nf) /
                                                 (static_cast<double>(hh.counts()[b]) / nh);
        }
    } else {
        auto sub = rng.derive(detail::kRatioStream);
        auto disc = fit_discriminator(xf, xh, frozen.classifier.train, sub);
        for (std::size_t i = 0; i < xf.size(); ++i) ratio[i] = disc.ratio(xf.point(i));
    }
    std::vector<std::size_t> order(xf.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ratio[a] < ratio[b]; });

    SampleSet augmented = xh;
    for (std::size_t i = 0; i < k; ++i) augmented.push_back(xf.point(order[i]));
    auto out = estimate_kappa_max(xf, augmented, frozen, rng);
    out.method_tag = "rempe2/" + base.tag;
    return out;
}

inline MpeEstimate rempe2_empirical(const Histogram& hf, const Histogram& hh, const BaseEstimatorSpec& base,
                                    double p) {
    if (hf.edges() != hh.edges()) throw DimensionError("rempe2: histograms must share edges");
    if (hf.total() == 0 || hh.total() == 0) throw InsufficientDataError("rempe2: empty histogram");
    std::size_t k = detail::moved_count(p, static_cast<std::size_t>(hf.total()));
    const double nf = static_cast<double>(hf.total()), nh = static_cast<double>(hh.total());
    std::vector<double> ratio(hf.bins());
    for (std::size_t b = 0; b < hf.bins(); ++b)
        ratio[b] = hh.counts()[b] == 0 ? std::numeric_limits<double>::infinity()
                                       : (static_cast<double>(hf.counts()[b]) / nf) /
                                             (static_cast<double>(hh.counts()[b]) / nh);
    std::vector<std::size_t> order(hf.bins());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ratio[a] < ratio[b]; });
    auto counts = hh.counts();
    for (auto b : order) {
        if (k == 0) break;
        auto take = std::min<std::uint64_t>(k, hf.counts()[b]);
        counts[b] += take;
        k -= take;
    }
    auto out = estimate_kappa_max(hf, Histogram(hh.edges(), std::move(counts)), base);
    out.method_tag = "rempe2/" + base.tag;
    return out;
}

}  // namespace mpe
