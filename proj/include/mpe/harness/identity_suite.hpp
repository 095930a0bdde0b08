#pragma once

// Exact population identities checked on random discrete triples.

#include <sstream>

#include "mpe/population.hpp"
#include "mpe/sampling.hpp"

namespace mpe::harness {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline DiscreteDist random_pmf(RngStream& rng, std::size_t n, double zero_prob) {
    std::vector<double> w(n);
    bool any = false;
    for (auto& v : w) {
        v = rng.uniform() < zero_prob ? 0.0 : -std::log(1.0 - rng.uniform());
        any = any || v > 0.0;
    }
    if (!any) w[rng.below(n)] = 1.0;
    return DiscreteDist::from_weights(std::move(w));
}

struct Triple {
    DiscreteDist g, h, f;
    double k;
};

inline Triple random_triple(RngStream& rng) {
    std::size_t n = 2 + rng.below(63);
    auto g = random_pmf(rng, n, 0.25);
    auto h = random_pmf(rng, n, 0.4);
    double k = rng.uniform();
    return {g, h, make_mixture(g, h, k), k};
}

inline std::vector<std::size_t> support_of(const DiscreteDist& h) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < h.size(); ++i)
        if (h[i] > 0.0) s.push_back(i);
    return s;
}

inline std::string worst(double err) {
    std::ostringstream s;
    s << "max error " << err;
    return s.str();
}

}  // namespace detail

inline std::vector<CheckResult> run_identity_suite(std::uint64_t seed = 1, std::size_t triples = 1000) {
    using detail::random_triple;
    std::vector<CheckResult> out;
    RngStream rng(seed, 0x1de7);
    std::vector<detail::Triple> ts;
    for (std::size_t t = 0; t < triples; ++t) ts.push_back(random_triple(rng));

    double e4 = 0.0, e_post = 0.0, e_lsp = 0.0, e_t2 = 0.0;
    bool sandwich = true, regroup = true;
    for (const auto& tr : ts) {
        double kf = kappa_max(tr.f, tr.h).kappa;
        e4 = std::max(e4, std::abs(kf - (tr.k + (1.0 - tr.k) * kappa_max(tr.g, tr.h).kappa)));
        auto p = posterior(tr.f, tr.h, tr.k);
        e_post = std::max(e_post, std::abs(*std::max_element(p.begin(), p.end()) * kf - tr.k));

        auto supp = detail::support_of(tr.h);
        if (tr.k > 0.0) {
            for (int a = 0; a < 10; ++a) {
                std::vector<std::size_t> A;
                for (auto i : supp)
                    if (rng.uniform() < 0.5) A.push_back(i);
                if (A.empty()) A.push_back(supp[rng.below(supp.size())]);
                double s = 0.0;
                for (auto i : A) s = std::max(s, p[i]);
                e_lsp = std::max(e_lsp, std::abs(lsp_recover(tr.f, tr.h, A, s) - tr.k));
            }
            std::vector<double> alpha(tr.f.size(), 1.0);
            for (auto i : supp)
                if (rng.uniform() < 0.5) alpha[i] = p[i];
            alpha[supp.front()] = p[supp.front()];
            e_t2 = std::max(e_t2, std::abs(theorem2_recover(tr.f, tr.h, alpha) - tr.k));
            for (int r = 0; r < 10; ++r) {
                std::vector<double> dom(p.size());
                for (std::size_t i = 0; i < p.size(); ++i) dom[i] = p[i] + rng.uniform() * (1.0 - p[i]);
                double v = theorem2_recover(tr.f, tr.h, dom);
                sandwich = sandwich && v >= tr.k - 1e-10 && v <= kf + 1e-10;
            }
        }
        auto r = rempe2_population(tr.f, tr.h);
        regroup = regroup && r.kappa <= kf + 1e-12;
        if (tr.h.mass_of(r.B) < 1.0 - 1e-12) regroup = regroup && r.kappa < kf;
    }
    out.push_back({"decomposition kappa(F|H) = k + (1-k) kappa(G|H)", e4 <= 1e-10, detail::worst(e4)});
    out.push_back({"max posterior * kappa(F|H) = k", e_post <= 1e-10, detail::worst(e_post)});
    out.push_back({"local supremal posterior recovery", e_lsp <= 1e-10, detail::worst(e_lsp)});
    out.push_back({"subsampling recovery and sandwich", e_t2 <= 1e-10 && sandwich,
                   detail::worst(e_t2) + (sandwich ? "" : "; sandwich violated")});

    const DiscreteDist f0({0.35, 0.4, 0.25}), h0({0.5, 0.5, 0.0}), g0({0.2, 0.3, 0.5});
    double worked = rempe2_population(f0, h0).kappa;
    {
        std::ostringstream s;
        s << "worked value " << worked;
        out.push_back({"regrouping never increases the estimate", regroup && worked < 0.7 &&
                                                                       std::abs(worked - 0.35 * 1.35 / 0.85) < 1e-12,
                       s.str()});
    }

    bool sand1 = true;
    double e_irr = 0.0;
    for (int t = 0; t < 1000; ++t) {
        std::size_t n = 2 + rng.below(63);
        auto g = detail::random_pmf(rng, n, 0.0);
        auto h = detail::random_pmf(rng, n, 0.4);
        if (detail::support_of(h).size() < 2) continue;
        double k = 0.02 + 0.96 * rng.uniform();
        auto r = rempe1_population(g, h, k);
        sand1 = sand1 && r.kappa > k && r.kappa < kappa_max(make_mixture(g, h, k), h).kappa;
    }
    for (int t = 0; t < 300; ++t) {
        std::size_t n = 3 + rng.below(62);
        auto h = detail::random_pmf(rng, n, 0.3);
        auto supp = detail::support_of(h);
        std::vector<double> w(n);
        for (auto& v : w) v = 0.05 + rng.uniform();
        w[supp[rng.below(supp.size())]] = 0.0;
        auto g = DiscreteDist::from_weights(std::move(w));
        double k = 0.99 * rng.uniform();
        e_irr = std::max(e_irr, std::abs(rempe1_population(g, h, k).kappa - k));
    }
    out.push_back({"G-regrouping sandwich and irreducible equality", sand1 && e_irr <= 1e-10,
                   detail::worst(e_irr) + (sand1 ? "" : "; sandwich violated")});

    bool holds = bias_reduction_holds(g0, h0, {0.2, DiscreteDist({1, 0, 0}), DiscreteDist({0, 0.375, 0.625})});
    bool zero = bias_reduction_holds(g0, h0, {0.0, DiscreteDist({1, 0, 0}), g0});
    out.push_back({"bias-reduction predicate", holds && !zero,
                   std::string("worked partition ") + (holds ? "true" : "false") + ", gamma = 0 " +
                       (zero ? "true" : "false")});
    return out;
}

}  // namespace mpe::harness
