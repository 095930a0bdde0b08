#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mpe {

// Error hierarchy. Everything thrown by the library derives from Error.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct InfeasibleError : Error { using Error::Error; };
struct InconsistencyError : Error { using Error::Error; };
struct DegenerateAcceptanceError : Error { using Error::Error; };
struct InsufficientDataError : Error { using Error::Error; };
struct DegenerateDataError : Error { using Error::Error; };
struct AnchorError : Error { using Error::Error; };
struct ConsistencyError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Probability mass function on {0, ..., size-1}.
class DiscreteDist {
public:
    static constexpr double kSumTolerance = 1e-6;

    DiscreteDist() = default;

    // Rejects sums off by more than kSumTolerance, renormalizes smaller drift.
    explicit DiscreteDist(std::vector<double> mass) : mass_(std::move(mass)) {
        if (mass_.empty()) throw DomainError("DiscreteDist: empty support");
        double sum = 0.0;
        for (double m : mass_) {
            if (!std::isfinite(m) || m < 0.0)
                throw DomainError("DiscreteDist: entries must be finite and >= 0");
            sum += m;
        }
        if (std::abs(sum - 1.0) > kSumTolerance)
            throw DomainError("DiscreteDist: mass sums to " + std::to_string(sum));
        for (double& m : mass_) m /= sum;
    }

    // Normalizes arbitrary non-negative weights with a positive total.
    static DiscreteDist from_weights(std::vector<double> w) {
        double sum = 0.0;
        for (double v : w) {
            if (!std::isfinite(v) || v < 0.0)
                throw DomainError("DiscreteDist: weights must be finite and >= 0");
            sum += v;
        }
        if (!(sum > 0.0)) throw DomainError("DiscreteDist: weights sum to zero");
        for (double& v : w) v /= sum;
        return DiscreteDist(std::move(w));
    }

    std::size_t size() const { return mass_.size(); }
    double operator[](std::size_t i) const { return mass_[i]; }
    const std::vector<double>& mass() const { return mass_; }

    double mass_of(std::span<const std::size_t> bins) const {
        double s = 0.0;
        for (auto b : bins) s += mass_.at(b);
        return s;
    }

private:
    std::vector<double> mass_;
};

// Row-major collection of d-dimensional points.
class SampleSet {
public:
    SampleSet() = default;
    explicit SampleSet(std::size_t dim) : dim_(dim) {
        if (dim == 0) throw DimensionError("SampleSet: dimension must be >= 1");
    }
    SampleSet(std::size_t dim, std::vector<double> flat) : dim_(dim), data_(std::move(flat)) {
        if (dim == 0) throw DimensionError("SampleSet: dimension must be >= 1");
        if (data_.size() % dim != 0) throw DimensionError("SampleSet: ragged flat data");
    }

    static SampleSet from_scalars(std::vector<double> xs) { return SampleSet(1, std::move(xs)); }

    static SampleSet from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) throw DimensionError("SampleSet: cannot infer dimension from no rows");
        SampleSet s(rows.front().size());
        for (const auto& r : rows) s.push_back(r);
        return s;
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    bool empty() const { return size() == 0; }

    std::span<const double> point(std::size_t i) const {
        return std::span<const double>(data_).subspan(i * dim_, dim_);
    }
    double scalar(std::size_t i) const { return data_[i * dim_]; }

    void push_back(std::span<const double> x) {
        if (x.size() != dim_) throw DimensionError("SampleSet: point dimension mismatch");
        data_.insert(data_.end(), x.begin(), x.end());
    }
    void push_scalar(double x) { push_back(std::span<const double>(&x, 1)); }
    void append(const SampleSet& other) {
        if (other.empty()) return;
        if (other.dim_ != dim_) throw DimensionError("SampleSet: append dimension mismatch");
        data_.insert(data_.end(), other.data_.begin(), other.data_.end());
    }
    void reserve(std::size_t n) { data_.reserve(n * dim_); }

    const std::vector<double>& flat() const { return data_; }

    friend bool operator==(const SampleSet&, const SampleSet&) = default;

private:
    std::size_t dim_ = 1;
    std::vector<double> data_;
};

class Histogram {
public:
    Histogram() = default;
    Histogram(std::vector<double> edges, std::vector<std::uint64_t> counts)
        : edges_(std::move(edges)), counts_(std::move(counts)) {
        if (edges_.size() < 2) throw DomainError("Histogram: need at least one bin");
        if (counts_.size() + 1 != edges_.size())
            throw DimensionError("Histogram: counts must have one entry per bin");
        for (std::size_t i = 1; i < edges_.size(); ++i)
            if (!(edges_[i] > edges_[i - 1]))
                throw DomainError("Histogram: edges must be strictly increasing");
        total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
    }

    static std::vector<double> equal_width_edges(double lo, double hi, std::size_t bins) {
        if (bins == 0) throw DomainError("Histogram: bin count must be positive");
        if (!(hi > lo)) {
            lo -= 0.5;
            hi += 0.5;
        }
        std::vector<double> e(bins + 1);
        for (std::size_t i = 0; i <= bins; ++i)
            e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
        e.back() = hi;
        return e;
    }

    // Edges (i - 0.5, i + 0.5) so bin i is centered on the integer i.
    static std::vector<double> unit_edges(std::size_t bins) {
        std::vector<double> e(bins + 1);
        for (std::size_t i = 0; i <= bins; ++i) e[i] = static_cast<double>(i) - 0.5;
        return e;
    }

    // Values outside the edges land in the end bins.
    static std::size_t locate(const std::vector<double>& edges, double x) {
        auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, x);
        return static_cast<std::size_t>(it - (edges.begin() + 1));
    }

    static Histogram from_samples(const SampleSet& s, std::vector<double> edges) {
        if (s.dim() != 1) throw DimensionError("Histogram: samples must be 1-dimensional");
        std::vector<std::uint64_t> counts(edges.size() < 2 ? 0 : edges.size() - 1, 0);
        for (std::size_t i = 0; i < s.size(); ++i) ++counts.at(locate(edges, s.scalar(i)));
        return Histogram(std::move(edges), std::move(counts));
    }

    std::size_t bins() const { return counts_.size(); }
    const std::vector<double>& edges() const { return edges_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    std::uint64_t total() const { return total_; }
    double center(std::size_t b) const { return 0.5 * (edges_[b] + edges_[b + 1]); }
    double width(std::size_t b) const { return edges_[b + 1] - edges_[b]; }
    std::size_t bin_of(double x) const { return locate(edges_, x); }

private:
    std::vector<double> edges_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

// x -> alpha(x), clamped into [0,1]. NaN maps to 1 (keep the point).
class AcceptanceFn {
public:
    using Fn = std::function<double(std::span<const double>)>;
    using Region = std::function<bool(std::span<const double>)>;

    AcceptanceFn() : AcceptanceFn([](std::span<const double>) { return 1.0; }) {}
    explicit AcceptanceFn(Fn f, Region a = nullptr) : fn_(std::move(f)), region_(std::move(a)) {
        if (!fn_) throw DomainError("AcceptanceFn: empty function");
    }

    static AcceptanceFn constant(double v) {
        return AcceptanceFn([v](std::span<const double>) { return v; });
    }

    // alpha over a discrete support, evaluated at the bin index.
    static AcceptanceFn tabulated(std::vector<double> table) {
        return AcceptanceFn([t = std::move(table)](std::span<const double> x) {
            auto i = static_cast<long long>(std::llround(x[0]));
            if (i < 0 || static_cast<std::size_t>(i) >= t.size()) return 1.0;
            return t[static_cast<std::size_t>(i)];
        });
    }

    double operator()(std::span<const double> x) const {
        double v = fn_(x);
        if (std::isnan(v)) return 1.0;
        return std::clamp(v, 0.0, 1.0);
    }
    double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

    bool has_region() const { return static_cast<bool>(region_); }
    bool in_region(std::span<const double> x) const { return region_ && region_(x); }
    bool in_region(double x) const { return in_region(std::span<const double>(&x, 1)); }

    std::vector<double> tabulate(std::size_t support) const {
        std::vector<double> out(support);
        for (std::size_t i = 0; i < support; ++i) out[i] = (*this)(static_cast<double>(i));
        return out;
    }

private:
    Fn fn_;
    Region region_;
};

struct MpeEstimate {
    double kappa_hat = 0.0;
    double c_hat = 1.0;
    std::optional<std::size_t> witness;
    std::string method_tag;
};

struct LabeledExample {
    std::vector<double> x;
    int y = 0;
    std::optional<int> z;
};

inline void require_same_support(const DiscreteDist& a, const DiscreteDist& b, const char* what) {
    if (a.size() != b.size()) throw DimensionError(std::string(what) + ": support sizes differ");
}

inline DiscreteDist make_mixture(const DiscreteDist& g, const DiscreteDist& h, double kappa_star) {
    require_same_support(g, h, "make_mixture");
    if (!(kappa_star >= 0.0 && kappa_star <= 1.0)) throw DomainError("make_mixture: kappa outside [0,1]");
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = (1.0 - kappa_star) * g[i] + kappa_star * h[i];
    return DiscreteDist(std::move(f));
}

inline DiscreteDist residual_component(const DiscreteDist& f, const DiscreteDist& h, double kappa_star) {
    require_same_support(f, h, "residual_component");
    if (!(kappa_star >= 0.0 && kappa_star < 1.0))
        throw DomainError("residual_component: kappa must lie in [0,1)");
    std::vector<double> g(f.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double r = f[i] - kappa_star * h[i];
        if (r < -1e-9)
            throw InfeasibleError("residual_component: negative residual " + std::to_string(r) +
                                  " at bin " + std::to_string(i));
        g[i] = std::max(0.0, r) / (1.0 - kappa_star);
    }
    return DiscreteDist::from_weights(std::move(g));
}

}  // namespace mpe
