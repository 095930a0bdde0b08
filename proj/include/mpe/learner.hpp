#pragma once

// Small binary classifier: logistic regression on per-dimension polynomial
// features, or a one-hidden-layer tanh network. Objective is mean
// cross-entropy plus (l2/2)*||w||^2 over non-bias weights.

#include <cstdint>

#include "mpe/core.hpp"
#include "mpe/sampling.hpp"

namespace mpe {

enum class Architecture { logistic_poly, mlp };
enum class Optimizer { gd, adam };

struct TrainConfig {
    Architecture architecture = Architecture::logistic_poly;
    int degree = 3;
    int hidden = 16;
    int epochs = 2000;
    double learning_rate = 0.5;
    double l2 = 1e-4;
    std::size_t batch_size = 0;  // 0 = full batch
    Optimizer optimizer = Optimizer::gd;
    std::uint64_t seed = 0;

    void validate() const {
        if (degree < 1) throw DomainError("TrainConfig: degree must be >= 1");
        if (hidden < 1) throw DomainError("TrainConfig: hidden width must be >= 1");
        if (epochs < 0) throw DomainError("TrainConfig: epochs must be >= 0");
        if (!(learning_rate > 0.0)) throw DomainError("TrainConfig: learning rate must be positive");
        if (!(l2 >= 0.0)) throw DomainError("TrainConfig: l2 must be >= 0");
    }
};

struct ClassifierModel {
    Architecture architecture = Architecture::logistic_poly;
    std::size_t input_dim = 1;
    int degree = 1;
    int hidden = 16;
    double l2 = 0.0;
    // Raw-input standardization.
    std::vector<double> mean;
    std::vector<double> scale;
    // Second standardization of the polynomial columns (logistic_poly only).
    std::vector<double> feat_mean;
    std::vector<double> feat_scale;
    std::vector<double> params;
    std::vector<double> training_loss;

    // logistic_poly: [w (input_dim*degree), b]; mlp: [W1 (hidden x input_dim), b1, w2, b2].
    std::size_t n_params() const {
        if (architecture == Architecture::logistic_poly) return input_dim * static_cast<std::size_t>(degree) + 1;
        auto H = static_cast<std::size_t>(hidden);
        return H * input_dim + H + H + 1;
    }
    std::size_t n_features() const {
        return architecture == Architecture::logistic_poly ? input_dim * static_cast<std::size_t>(degree) : input_dim;
    }

    // Zero-weight model with identity standardization.
    static ClassifierModel zeros(Architecture arch, std::size_t dim, int degree = 1, int hidden = 16) {
        ClassifierModel m;
        m.architecture = arch;
        m.input_dim = dim;
        m.degree = degree;
        m.hidden = hidden;
        m.mean.assign(dim, 0.0);
        m.scale.assign(dim, 1.0);
        m.feat_mean.assign(m.n_features(), 0.0);
        m.feat_scale.assign(m.n_features(), 1.0);
        m.params.assign(m.n_params(), 0.0);
        return m;
    }

    // First-layer inputs for x, fully standardized.
    void features(std::span<const double> x, double* out) const {
        if (x.size() != input_dim) throw DimensionError("ClassifierModel: input dimension mismatch");
        if (architecture == Architecture::mlp) {
            for (std::size_t j = 0; j < input_dim; ++j) out[j] = (x[j] - mean[j]) / scale[j];
            return;
        }
        std::size_t k = 0;
        for (std::size_t j = 0; j < input_dim; ++j) {
            double z = (x[j] - mean[j]) / scale[j];
            double p = 1.0;
            for (int d = 0; d < degree; ++d, ++k) {
                p *= z;
                out[k] = (p - feat_mean[k]) / feat_scale[k];
            }
        }
    }

    double logit_from_features(const double* phi) const {
        const double* p = params.data();
        if (architecture == Architecture::logistic_poly) {
            std::size_t k = n_features();
            double t = p[k];
            for (std::size_t i = 0; i < k; ++i) t += p[i] * phi[i];
            return t;
        }
        auto H = static_cast<std::size_t>(hidden);
        const double* W1 = p;
        const double* b1 = p + H * input_dim;
        const double* w2 = b1 + H;
        double t = w2[H];
        for (std::size_t u = 0; u < H; ++u) {
            double a = b1[u];
            for (std::size_t j = 0; j < input_dim; ++j) a += W1[u * input_dim + j] * phi[j];
            t += w2[u] * std::tanh(a);
        }
        return t;
    }

    double logit(std::span<const double> x) const {
        std::vector<double> phi(n_features());
        features(x, phi.data());
        return logit_from_features(phi.data());
    }
};

inline constexpr double kProbFloor = 1e-12;
// Clamp used wherever a probability enters a ratio.
inline constexpr double kRatioProbFloor = 1e-6;

inline double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    double e = std::exp(t);
    return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
inline double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

inline double predict_proba(const ClassifierModel& model, std::span<const double> x) {
    return std::clamp(sigmoid(model.logit(x)), kProbFloor, 1.0 - kProbFloor);
}
inline double predict_proba(const ClassifierModel& model, double x) {
    return predict_proba(model, std::span<const double>(&x, 1));
}

namespace detail {

struct Batch {
    std::size_t n = 0;
    std::size_t k = 0;           // feature count
    std::vector<double> phi;     // n x k
    std::vector<double> y;
};

inline Batch make_batch(const ClassifierModel& m, const std::vector<LabeledExample>& ex) {
    Batch b;
    b.n = ex.size();
    b.k = m.n_features();
    b.phi.resize(b.n * b.k);
    b.y.resize(b.n);
    for (std::size_t i = 0; i < b.n; ++i) {
        m.features(ex[i].x, b.phi.data() + i * b.k);
        b.y[i] = ex[i].y;
    }
    return b;
}

// Objective and gradient over the rows in idx (all rows when idx is empty).
inline double objective(const ClassifierModel& m, const Batch& b, const std::vector<std::size_t>* idx,
                        std::vector<double>* grad) {
    const std::size_t P = m.n_params();
    if (grad) grad->assign(P, 0.0);
    const std::size_t rows = idx ? idx->size() : b.n;
    if (rows == 0) throw DomainError("objective: empty batch");
    const double inv = 1.0 / static_cast<double>(rows);
    const double* p = m.params.data();
    double loss = 0.0;

    if (m.architecture == Architecture::logistic_poly) {
        const std::size_t k = b.k;
        for (std::size_t r = 0; r < rows; ++r) {
            std::size_t i = idx ? (*idx)[r] : r;
            const double* phi = b.phi.data() + i * k;
            double t = p[k];
            for (std::size_t j = 0; j < k; ++j) t += p[j] * phi[j];
            loss += softplus(t) - b.y[i] * t;
            if (grad) {
                double d = (sigmoid(t) - b.y[i]) * inv;
                for (std::size_t j = 0; j < k; ++j) (*grad)[j] += d * phi[j];
                (*grad)[k] += d;
            }
        }
        loss *= inv;
        double reg = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            reg += p[j] * p[j];
            if (grad) (*grad)[j] += m.l2 * p[j];
        }
        return loss + 0.5 * m.l2 * reg;
    }

    const auto H = static_cast<std::size_t>(m.hidden);
    const std::size_t d = m.input_dim;
    const double* W1 = p;
    const double* b1 = p + H * d;
    const double* w2 = b1 + H;
    std::vector<double> a(H);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t i = idx ? (*idx)[r] : r;
        const double* x = b.phi.data() + i * d;
        double t = w2[H];
        for (std::size_t u = 0; u < H; ++u) {
            double s = b1[u];
            for (std::size_t j = 0; j < d; ++j) s += W1[u * d + j] * x[j];
            a[u] = std::tanh(s);
            t += w2[u] * a[u];
        }
        loss += softplus(t) - b.y[i] * t;
        if (grad) {
            double dt = (sigmoid(t) - b.y[i]) * inv;
            double* gW1 = grad->data();
            double* gb1 = gW1 + H * d;
            double* gw2 = gb1 + H;
            gw2[H] += dt;
            for (std::size_t u = 0; u < H; ++u) {
                gw2[u] += dt * a[u];
                double ds = dt * w2[u] * (1.0 - a[u] * a[u]);
                gb1[u] += ds;
                for (std::size_t j = 0; j < d; ++j) gW1[u * d + j] += ds * x[j];
            }
        }
    }
    loss *= inv;
    double reg = 0.0;
    auto add_reg = [&](std::size_t from, std::size_t to) {
        for (std::size_t j = from; j < to; ++j) {
            reg += p[j] * p[j];
            if (grad) (*grad)[j] += m.l2 * p[j];
        }
    };
    add_reg(0, H * d);
    add_reg(H * d + H, H * d + 2 * H);
    return loss + 0.5 * m.l2 * reg;
}

}  // namespace detail

struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

inline LossAndGradient loss_and_gradient(const ClassifierModel& model, const std::vector<LabeledExample>& batch) {
    auto b = detail::make_batch(model, batch);
    LossAndGradient out;
    out.loss = detail::objective(model, b, nullptr, &out.gradient);
    return out;
}

// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-4),
// numeric gradient by central differences with step 1e-5.
inline double gradient_check(const ClassifierModel& model, const std::vector<LabeledExample>& batch) {
    if (batch.empty()) throw DomainError("gradient_check: empty batch");
    constexpr double step = 1e-5;
    auto b = detail::make_batch(model, batch);
    std::vector<double> grad;
    detail::objective(model, b, nullptr, &grad);
    ClassifierModel probe = model;
    double worst = 0.0;
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        double orig = probe.params[i];
        probe.params[i] = orig + step;
        double up = detail::objective(probe, b, nullptr, nullptr);
        probe.params[i] = orig - step;
        double down = detail::objective(probe, b, nullptr, nullptr);
        probe.params[i] = orig;
        double numeric = (up - down) / (2.0 * step);
        double denom = std::max({std::abs(grad[i]), std::abs(numeric), 1e-4});
        worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
    }
    return worst;
}

// Random parameters for a model of the given shape; used by tests and as MLP init.
inline void randomize_params(ClassifierModel& m, RngStream& rng, double scale = 1.0) {
    if (m.architecture == Architecture::logistic_poly) {
        for (double& v : m.params) v = scale * rng.normal();
        return;
    }
    const auto H = static_cast<std::size_t>(m.hidden);
    const std::size_t d = m.input_dim;
    double s1 = scale / std::sqrt(static_cast<double>(d));
    double s2 = scale / std::sqrt(static_cast<double>(H));
    for (std::size_t j = 0; j < H * d; ++j) m.params[j] = s1 * rng.normal();
    for (std::size_t j = H * d; j < H * d + H; ++j) m.params[j] = 0.1 * scale * rng.normal();
    for (std::size_t j = H * d + H; j < H * d + 2 * H; ++j) m.params[j] = s2 * rng.normal();
    m.params.back() = 0.0;
}

inline ClassifierModel train(const std::vector<LabeledExample>& examples, const TrainConfig& config, RngStream& rng) {
    config.validate();
    if (examples.empty()) throw DegenerateDataError("train: no examples");
    const std::size_t d = examples.front().x.size();
    if (d == 0) throw DimensionError("train: empty feature vector");
    bool pos = false, neg = false;
    for (const auto& e : examples) {
        if (e.x.size() != d) throw DimensionError("train: examples differ in dimension");
        if (e.y != 0 && e.y != 1) throw DomainError("train: labels must be 0 or 1");
        (e.y == 1 ? pos : neg) = true;
    }
    if (!pos || !neg) throw DegenerateDataError("train: need examples of both labels");

    auto m = ClassifierModel::zeros(config.architecture, d, config.degree, config.hidden);
    m.l2 = config.l2;
    const double n = static_cast<double>(examples.size());
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0, ss = 0.0;
        for (const auto& e : examples) s += e.x[j];
        double mu = s / n;
        for (const auto& e : examples) ss += (e.x[j] - mu) * (e.x[j] - mu);
        double sd = std::sqrt(ss / n);
        m.mean[j] = mu;
        m.scale[j] = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
    }
    if (m.architecture == Architecture::logistic_poly) {
        // Standardize each polynomial column using the raw-standardized inputs.
        const std::size_t k = m.n_features();
        std::vector<double> phi(k), s(k, 0.0), ss(k, 0.0);
        for (const auto& e : examples) {
            m.features(e.x, phi.data());
            for (std::size_t j = 0; j < k; ++j) s[j] += phi[j];
        }
        for (std::size_t j = 0; j < k; ++j) s[j] /= n;
        for (const auto& e : examples) {
            m.features(e.x, phi.data());
            for (std::size_t j = 0; j < k; ++j) ss[j] += (phi[j] - s[j]) * (phi[j] - s[j]);
        }
        for (std::size_t j = 0; j < k; ++j) {
            double sd = std::sqrt(ss[j] / n);
            m.feat_mean[j] = s[j];
            m.feat_scale[j] = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
        }
    } else {
        randomize_params(m, rng);
    }

    auto batch = detail::make_batch(m, examples);
    const std::size_t P = m.n_params();
    std::vector<double> grad, mom(P, 0.0), vel(P, 0.0);
    std::uint64_t t = 0;
    auto step = [&](const std::vector<double>& g) {
        ++t;
        if (config.optimizer == Optimizer::gd) {
            for (std::size_t j = 0; j < P; ++j) m.params[j] -= config.learning_rate * g[j];
            return;
        }
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
        double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
        for (std::size_t j = 0; j < P; ++j) {
            mom[j] = b1 * mom[j] + (1.0 - b1) * g[j];
            vel[j] = b2 * vel[j] + (1.0 - b2) * g[j] * g[j];
            m.params[j] -= config.learning_rate * (mom[j] / c1) / (std::sqrt(vel[j] / c2) + eps);
        }
    };

    const bool full = config.batch_size == 0 || config.batch_size >= batch.n;
    std::vector<std::size_t> order(batch.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    m.training_loss.reserve(static_cast<std::size_t>(config.epochs) + 1);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (full) {
            m.training_loss.push_back(detail::objective(m, batch, nullptr, &grad));
            step(grad);
            continue;
        }
        m.training_loss.push_back(detail::objective(m, batch, nullptr, nullptr));
        for (std::size_t i = batch.n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        for (std::size_t from = 0; from < batch.n; from += config.batch_size) {
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(from),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(batch.n, from + config.batch_size)));
            detail::objective(m, batch, &idx, &grad);
            step(grad);
        }
    }
    m.training_loss.push_back(detail::objective(m, batch, nullptr, nullptr));
    return m;
}

inline ClassifierModel train(const std::vector<LabeledExample>& examples, const TrainConfig& config) {
    RngStream rng(config.seed, 0);
    return train(examples, config, rng);
}

}  // namespace mpe
