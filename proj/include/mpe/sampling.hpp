#pragma once

// Seeded generators.
//
// Engine: std::mt19937_64 seeded through std::seed_seq with the four 32-bit
// halves of (seed, stream_id). Both algorithms are fully specified by the
// C++ standard, so a (seed, stream_id) pair gives the same sequence on any
// conforming library. Uniforms take the top 53 bits of one engine draw.
// Normals use the Marsaglia polar method, caching the second variate.

#include <cstdint>
#include <random>

#include "mpe/core.hpp"
#include "mpe/population.hpp"

namespace mpe {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Order-sensitive combination of identifiers into one stream id.
inline std::uint64_t mix_ids(std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = 0x6A09E667F3BCC909ULL;
    for (auto v : ids) h = splitmix64(h ^ splitmix64(v));
    return h;
}

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    // Independent child stream; does not advance this one.
    RngStream derive(std::uint64_t tag) const { return RngStream(seed_, mix_ids({stream_, tag})); }

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double k = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * k;
        has_spare_ = true;
        return u * k;
    }

    // Uniform integer in [0, n), rejecting the biased low range.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw DomainError("RngStream::below: n must be positive");
        std::uint64_t threshold = (0 - n) % n;
        std::uint64_t x;
        do x = engine_();
        while (x < threshold);
        return x % n;
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct GaussianMixtureSpec {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stddevs;

    void validate() const {
        if (weights.empty() || weights.size() != means.size() || weights.size() != stddevs.size())
            throw DimensionError("GaussianMixtureSpec: weights, means and stddevs must have equal non-zero length");
        double s = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (!(weights[i] >= 0.0)) throw DomainError("GaussianMixtureSpec: negative weight");
            if (!(stddevs[i] > 0.0)) throw DomainError("GaussianMixtureSpec: stddev must be positive");
            s += weights[i];
        }
        if (std::abs(s - 1.0) > 1e-9) throw DomainError("GaussianMixtureSpec: weights must sum to 1");
    }

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) m += weights[i] * means[i];
        return m;
    }

    double pdf(double x) const {
        constexpr double kInvSqrt2Pi = 0.3989422804014327;
        double p = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            double z = (x - means[i]) / stddevs[i];
            p += weights[i] * kInvSqrt2Pi / stddevs[i] * std::exp(-0.5 * z * z);
        }
        return p;
    }

    // (1-k) g + k h as one flat mixture.
    static GaussianMixtureSpec mix(const GaussianMixtureSpec& g, const GaussianMixtureSpec& h, double k) {
        GaussianMixtureSpec out;
        for (std::size_t i = 0; i < g.weights.size(); ++i) {
            out.weights.push_back((1.0 - k) * g.weights[i]);
            out.means.push_back(g.means[i]);
            out.stddevs.push_back(g.stddevs[i]);
        }
        for (std::size_t i = 0; i < h.weights.size(); ++i) {
            out.weights.push_back(k * h.weights[i]);
            out.means.push_back(h.means[i]);
            out.stddevs.push_back(h.stddevs[i]);
        }
        return out;
    }
};

namespace detail {

inline std::size_t pick(const std::vector<double>& cdf, double u) {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
    auto i = static_cast<std::size_t>(it - cdf.begin());
    if (i >= cdf.size()) {
        // u * total rounded up to total: take the last bin with mass.
        i = cdf.size() - 1;
        while (i > 0 && cdf[i] == cdf[i - 1]) --i;
    }
    return i;
}

inline std::vector<double> cumulative(const std::vector<double>& w) {
    std::vector<double> cdf(w.size());
    std::partial_sum(w.begin(), w.end(), cdf.begin());
    return cdf;
}

}  // namespace detail

inline SampleSet sample_discrete(const DiscreteDist& dist, std::size_t n, RngStream& rng) {
    auto cdf = detail::cumulative(dist.mass());
    SampleSet out(1);
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_scalar(static_cast<double>(detail::pick(cdf, rng.uniform())));
    return out;
}

inline std::vector<std::uint64_t> sample_counts(const DiscreteDist& dist, std::size_t n, RngStream& rng) {
    auto cdf = detail::cumulative(dist.mass());
    std::vector<std::uint64_t> counts(dist.size(), 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[detail::pick(cdf, rng.uniform())];
    return counts;
}

inline SampleSet sample_gaussian_mixture(const GaussianMixtureSpec& spec, std::size_t n, RngStream& rng) {
    spec.validate();
    auto cdf = detail::cumulative(spec.weights);
    SampleSet out(1);
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto k = detail::pick(cdf, rng.uniform());
        out.push_scalar(spec.means[k] + spec.stddevs[k] * rng.normal());
    }
    return out;
}

// Keeps each point independently with probability alpha(x), in input order.
inline SampleSet rejection_sample(const SampleSet& sample, const AcceptanceFn& alpha, RngStream& rng) {
    SampleSet out(sample.dim());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        auto x = sample.point(i);
        double u = rng.uniform();
        if (u < alpha(x)) out.push_back(x);
    }
    return out;
}

// Count-level thinning; alpha is evaluated at each bin center.
inline Histogram rejection_sample(const Histogram& hist, const AcceptanceFn& alpha, RngStream& rng) {
    std::vector<std::uint64_t> kept(hist.bins(), 0);
    for (std::size_t b = 0; b < hist.bins(); ++b) {
        double a = alpha(hist.center(b));
        for (std::uint64_t k = 0; k < hist.counts()[b]; ++k)
            if (rng.uniform() < a) ++kept[b];
    }
    return Histogram(hist.edges(), std::move(kept));
}

// Parametric gamma-spectrum proxy. Negative positions select the defaults
// noted beside each field, scaled to n_bins.
struct SpectrumSpec {
    std::size_t n_bins = 128;
    double peak_center = -1.0;     // 0.662 * n_bins
    double peak_width = 3.0;
    double peak_fraction = 0.7;
    double shelf_end = -1.0;       // 0.72 * peak_center
    double decay = 1.5;            // continuum exp(-decay * b / n_bins)
    double secondary_center = -1.0;  // 0.88 * n_bins
    double secondary_width = 4.0;
    double secondary_fraction = 0.2;
    std::uint64_t counts = 50000;
    std::uint64_t source_counts = 0;  // H-histogram size; 0 means counts

    double center() const { return peak_center >= 0.0 ? peak_center : std::round(0.662 * n_bins); }
    double shelf() const { return shelf_end >= 0.0 ? shelf_end : std::round(0.72 * center()); }
    double secondary() const { return secondary_center >= 0.0 ? secondary_center : std::round(0.88 * n_bins); }

    void validate() const {
        if (n_bins < 8) throw DomainError("SpectrumSpec: need at least 8 bins");
        if (!(peak_width > 0.0 && secondary_width > 0.0)) throw DomainError("SpectrumSpec: widths must be positive");
        if (!(peak_fraction >= 0.0 && peak_fraction <= 1.0)) throw DomainError("SpectrumSpec: peak_fraction outside [0,1]");
        if (!(secondary_fraction >= 0.0 && secondary_fraction < 1.0))
            throw DomainError("SpectrumSpec: secondary_fraction outside [0,1)");
        if (!(decay >= 0.0)) throw DomainError("SpectrumSpec: decay must be >= 0");
        double c = center();
        if (!(c > 0.0 && c < static_cast<double>(n_bins - 1))) throw DomainError("SpectrumSpec: peak outside axis");
        if (peak_fraction < 1.0 && !(shelf() >= 1.0 && shelf() <= c))
            throw DomainError("SpectrumSpec: shelf must end between bin 1 and the peak");
        if (counts == 0) throw DomainError("SpectrumSpec: counts must be positive");
    }
};

namespace detail {
inline std::vector<double> gaussian_bins(std::size_t n, double c, double w) {
    std::vector<double> v(n);
    for (std::size_t b = 0; b < n; ++b) {
        double z = (static_cast<double>(b) - c) / w;
        v[b] = std::exp(-0.5 * z * z);
    }
    double s = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x /= s;
    return v;
}
}  // namespace detail

inline DiscreteDist spectrum_source_pmf(const SpectrumSpec& spec) {
    spec.validate();
    auto peak = detail::gaussian_bins(spec.n_bins, spec.center(), spec.peak_width);
    auto shelf_bins = static_cast<std::size_t>(spec.shelf());
    std::vector<double> w(spec.n_bins, 0.0);
    for (std::size_t b = 0; b < spec.n_bins; ++b) {
        w[b] = spec.peak_fraction * peak[b];
        if (b < shelf_bins) w[b] += (1.0 - spec.peak_fraction) / static_cast<double>(shelf_bins);
    }
    return DiscreteDist::from_weights(std::move(w));
}

inline DiscreteDist spectrum_background_pmf(const SpectrumSpec& spec) {
    spec.validate();
    std::vector<double> cont(spec.n_bins);
    for (std::size_t b = 0; b < spec.n_bins; ++b)
        cont[b] = std::exp(-spec.decay * static_cast<double>(b) / static_cast<double>(spec.n_bins));
    double s = std::accumulate(cont.begin(), cont.end(), 0.0);
    auto sec = detail::gaussian_bins(spec.n_bins, spec.secondary(), spec.secondary_width);
    std::vector<double> w(spec.n_bins);
    for (std::size_t b = 0; b < spec.n_bins; ++b)
        w[b] = (1.0 - spec.secondary_fraction) * cont[b] / s + spec.secondary_fraction * sec[b];
    return DiscreteDist::from_weights(std::move(w));
}

struct Spectrum {
    Histogram hist_F;
    Histogram hist_H;
    DiscreteDist true_G;
    DiscreteDist source;
};

inline Spectrum simulate_spectrum(const SpectrumSpec& spec, double kappa_star, RngStream& rng) {
    if (!(kappa_star >= 0.0 && kappa_star <= 1.0)) throw DomainError("simulate_spectrum: kappa outside [0,1]");
    auto h = spectrum_source_pmf(spec);
    auto g = spectrum_background_pmf(spec);
    auto f = make_mixture(g, h, kappa_star);
    auto edges = Histogram::unit_edges(spec.n_bins);
    auto cf = sample_counts(f, spec.counts, rng);
    auto ch = sample_counts(h, spec.source_counts ? spec.source_counts : spec.counts, rng);
    return {Histogram(edges, std::move(cf)), Histogram(edges, std::move(ch)), g, h};
}

// Expands a histogram into one point per count, located at the bin center.
inline SampleSet histogram_points(const Histogram& hist) {
    SampleSet out(1);
    out.reserve(hist.total());
    for (std::size_t b = 0; b < hist.bins(); ++b)
        for (std::uint64_t k = 0; k < hist.counts()[b]; ++k) out.push_scalar(hist.center(b));
    return out;
}

}  // namespace mpe
