#pragma once

// Exact identities on finite supports. No sampling here.

#include <limits>

#include "mpe/core.hpp"

namespace mpe {

struct KappaMax {
    double kappa = 1.0;
    std::size_t witness = 0;
};

struct SubsampleResult {
    DiscreteDist f_tilde;
    double c = 1.0;
};

struct Regrouped {
    DiscreteDist h_prime;
    double kappa = 0.0;
    std::vector<std::size_t> B;
};

// min over bins with h > 0 of f/h, capped at 1. Ratios within relative 1e-12
// of the minimum count as ties; ties go to the smallest index.
inline KappaMax kappa_max(const DiscreteDist& f, const DiscreteDist& h) {
    require_same_support(f, h, "kappa_max");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i)
        if (h[i] > 0.0) best = std::min(best, f[i] / h[i]);
    if (!std::isfinite(best)) throw DomainError("kappa_max: h has no positive bin");
    KappaMax out{std::min(best, 1.0), 0};
    double cut = best + 1e-12 * best;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (h[i] > 0.0 && f[i] / h[i] <= cut) {
            out.witness = i;
            break;
        }
    return out;
}

// Bins whose f/h ratio is within relative 1e-9 of the minimum.
inline std::vector<std::size_t> argmin_set(const std::vector<double>& num, const DiscreteDist& h) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < h.size(); ++i)
        if (h[i] > 0.0) best = std::min(best, num[i] / h[i]);
    if (!std::isfinite(best)) throw DomainError("argmin_set: h has no positive bin");
    std::vector<std::size_t> B;
    double cut = best + 1e-9 * std::abs(best);
    for (std::size_t i = 0; i < h.size(); ++i)
        if (h[i] > 0.0 && num[i] / h[i] <= cut) B.push_back(i);
    return B;
}

// kappa* h / f, with 0/0 := 0.
inline std::vector<double> posterior(const DiscreteDist& f, const DiscreteDist& h, double kappa_star) {
    require_same_support(f, h, "posterior");
    if (!(kappa_star >= 0.0 && kappa_star <= 1.0)) throw DomainError("posterior: kappa outside [0,1]");
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        double num = kappa_star * h[i];
        if (f[i] > 0.0) {
            out[i] = num / f[i];
        } else if (num > 0.0) {
            throw InconsistencyError("posterior: f is zero where kappa* h is not");
        }
        if (out[i] > 1.0 + 1e-9)
            throw InconsistencyError("posterior: value " + std::to_string(out[i]) + " exceeds 1 at bin " +
                                     std::to_string(i));
        out[i] = std::min(out[i], 1.0);
    }
    return out;
}

inline double lsp_recover(const DiscreteDist& f, const DiscreteDist& h, const std::vector<std::size_t>& A,
                          double s) {
    require_same_support(f, h, "lsp_recover");
    if (A.empty()) throw DomainError("lsp_recover: A is empty");
    if (!(s > 0.0 && s <= 1.0)) throw DomainError("lsp_recover: s must lie in (0,1]");
    double best = std::numeric_limits<double>::infinity();
    for (auto i : A) {
        if (i >= h.size() || h[i] <= 0.0) throw DomainError("lsp_recover: A contains a bin with h = 0");
        best = std::min(best, f[i] / h[i]);
    }
    return s * best;
}

inline SubsampleResult subsample_density(const DiscreteDist& f, const std::vector<double>& alpha) {
    if (alpha.size() != f.size()) throw DimensionError("subsample_density: alpha length mismatch");
    std::vector<double> w(f.size());
    double c = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(alpha[i] >= 0.0 && alpha[i] <= 1.0)) throw DomainError("subsample_density: alpha outside [0,1]");
        w[i] = alpha[i] * f[i];
        c += w[i];
    }
    if (!(c > 0.0)) throw DegenerateAcceptanceError("subsample_density: acceptance mass is zero");
    for (double& v : w) v /= c;
    return {DiscreteDist(std::move(w)), c};
}

inline double theorem2_recover(const DiscreteDist& f, const DiscreteDist& h, const std::vector<double>& alpha) {
    auto sub = subsample_density(f, alpha);
    return sub.c * kappa_max(sub.f_tilde, h).kappa;
}

// Regroup the lowest-ratio part of F into H: H' = (F_B + H) / (1 + F(B)), F_B unnormalized.
inline Regrouped rempe2_population(const DiscreteDist& f, const DiscreteDist& h) {
    require_same_support(f, h, "rempe2_population");
    auto B = argmin_set(f.mass(), h);
    std::vector<double> hp(h.mass());
    double fB = 0.0;
    for (auto b : B) {
        hp[b] += f[b];
        fB += f[b];
    }
    for (double& v : hp) v /= (1.0 + fB);
    DiscreteDist h_prime(std::move(hp));
    double k = kappa_max(f, h_prime).kappa;
    return {std::move(h_prime), k, std::move(B)};
}

// Move the part of G on B = argmin g/h into H: H' = [(1-k*) G(B) G_B + k* H] / k'.
inline Regrouped rempe1_population(const DiscreteDist& g, const DiscreteDist& h, double kappa_star) {
    require_same_support(g, h, "rempe1_population");
    if (!(kappa_star >= 0.0 && kappa_star < 1.0)) throw DomainError("rempe1_population: kappa must lie in [0,1)");
    auto B = argmin_set(g.mass(), h);
    double gamma = g.mass_of(B);
    double kp = kappa_star + (1.0 - kappa_star) * gamma;
    auto f = make_mixture(g, h, kappa_star);
    if (!(kp > 0.0)) {
        // kappa* = 0 and nothing to move: H' = H, kappa(F|H) = kappa(G|H) = 0.
        return {h, kappa_max(f, h).kappa, std::move(B)};
    }
    std::vector<double> hp(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) hp[i] = kappa_star * h[i];
    for (auto b : B) hp[b] += (1.0 - kappa_star) * g[b];
    for (double& v : hp) v /= kp;
    DiscreteDist h_prime(std::move(hp));
    double k = kappa_max(f, h_prime).kappa;
    return {std::move(h_prime), k, std::move(B)};
}

struct Partition {
    double gamma = 0.0;
    DiscreteDist g1;
    DiscreteDist g2;
};

inline bool bias_reduction_holds(const DiscreteDist& g, const DiscreteDist& h, const Partition& p) {
    require_same_support(g, h, "bias_reduction_holds");
    require_same_support(g, p.g1, "bias_reduction_holds");
    require_same_support(g, p.g2, "bias_reduction_holds");
    if (!(p.gamma >= 0.0 && p.gamma <= 1.0)) throw DomainError("bias_reduction_holds: gamma outside [0,1]");
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(p.gamma * p.g1[i] + (1.0 - p.gamma) * p.g2[i] - g[i]) > 1e-9)
            throw ConsistencyError("bias_reduction_holds: partition does not reconstruct g at bin " +
                                   std::to_string(i));
    return (1.0 - p.gamma) * kappa_max(p.g2, h).kappa < kappa_max(g, h).kappa;
}

}  // namespace mpe
