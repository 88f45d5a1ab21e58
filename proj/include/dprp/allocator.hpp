#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "dprp/convergence.hpp"
#include "dprp/privacy.hpp"

namespace dprp::allocator {

// Static allocation instance: channel draw, alignment output, loss and
// privacy targets. eps_targets holds each client's T-fold budget eps_i^T.
struct AllocationProblem {
    std::vector<double> kappas;
    std::vector<double> gammas;
    int d = 0;
    int s = 1;  // projection sparsity (1 = Rademacher)
    double grad_bound = 1.0;
    double lambda = 1.0;
    int T = 1;
    std::vector<double> eps_targets;
    double delta_t = 5e-5;
    double eps_jl = 0.5;
    double a = 1.0;
    double c = 0.0;       // alignment constant
    double sigma2 = 1.0;  // channel-noise variance
    int r_cap = 0;        // 0 = cap at d

    int clients() const { return static_cast<int>(kappas.size()); }
    double kappa_min() const { return *std::min_element(kappas.begin(), kappas.end()); }

    void validate() const {
        if (kappas.empty()) throw std::invalid_argument("allocation: no clients");
        if (gammas.size() != kappas.size() || eps_targets.size() != kappas.size())
            throw std::invalid_argument("allocation: per-client vectors differ in length");
        for (double g : gammas)
            if (!(g > 0.0 && g <= 1.0)) throw std::invalid_argument("allocation: gamma out of (0,1]");
        for (double e : eps_targets)
            if (!(e > 0.0)) throw std::invalid_argument("allocation: eps target must be > 0");
        if (!(c > 0.0)) throw std::invalid_argument("allocation: c must be > 0");
        if (d < 1) throw std::invalid_argument("allocation: d must be >= 1");
    }
};

// Required aggregate per-dimension artificial-noise level sum_i zeta_i
// kappa_i / r implied by the strictest client budget. Clamped at zero when
// the targets are loose enough that channel noise alone suffices.
inline double water_level(const AllocationProblem& p) {
    p.validate();
    const double kmin = p.kappa_min();
    double omega = 0.0;
    for (double eps_T : p.eps_targets) {
        const double per_iter = eps_T / static_cast<double>(p.T);
        const double need = (1.0 + p.eps_jl) * 8.0 * kmin * std::log(1.25 / p.delta_t) /
                                (per_iter * per_iter) -
                            p.sigma2;
        omega = std::max(omega, need);
    }
    return std::max(0.0, omega);
}

struct FillResult {
    std::vector<double> omegas;  // per-dimension noise power, original client order
    double residual = 0.0;       // unmet part of the water level
    double assigned = 0.0;       // sum of omegas
};

// Greedy water filling at a fixed r: clients sorted by remaining power
// headroom kappa_i (1 - gamma_i) descending (ties by index), each assigned
// the smaller of its per-dimension headroom and what is still missing.
inline FillResult fill(const AllocationProblem& p, int r, double omega_level) {
    if (r < 1) throw std::invalid_argument("fill: r must be >= 1");
    const int n = p.clients();
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> headroom(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        headroom[static_cast<std::size_t>(i)] =
            p.kappas[static_cast<std::size_t>(i)] * (1.0 - p.gammas[static_cast<std::size_t>(i)]);
    std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
        return headroom[static_cast<std::size_t>(lhs)] > headroom[static_cast<std::size_t>(rhs)];
    });

    FillResult res;
    res.omegas.assign(static_cast<std::size_t>(n), 0.0);
    double assigned = 0.0;
    for (int idx : order) {
        const double remaining = std::max(0.0, omega_level - assigned);
        const double cap = headroom[static_cast<std::size_t>(idx)] / static_cast<double>(r);
        const double w = std::min(cap, remaining);
        res.omegas[static_cast<std::size_t>(idx)] = w;
        assigned += w;
    }
    res.assigned = assigned;
    res.residual = std::max(0.0, omega_level - assigned);
    return res;
}

struct AllocationResult {
    bool feasible = false;
    int r_star = 0;                  // stopping-rule answer
    int r_argmin = 0;                // objective argmin over visited candidates
    double objective = 0.0;          // at r_star
    double objective_argmin = 0.0;   // at r_argmin
    std::vector<double> zeta_star;   // at r_star
    std::vector<double> omegas;      // at r_star
    double omega_level = 0.0;        // required aggregate noise level
    int r_min = 0;                   // JL lower bound used for the search
    int r_max_searched = 0;
};

namespace detail {
inline double objective_at(const AllocationProblem& p, int r, double noise_sum) {
    const double lam2 = p.lambda * p.lambda;
    const double L = p.grad_bound;
    const double kind_overhead = static_cast<double>(p.d + p.s - 2) / static_cast<double>(r);
    const double nc = static_cast<double>(p.clients()) * p.c;
    const double second_moment = L * L * (1.0 + kind_overhead) +
                                 static_cast<double>(p.d) / (nc * nc) * (noise_sum + p.sigma2);
    return 2.0 * L / (lam2 * static_cast<double>(p.T)) * second_moment;
}
}  // namespace detail

// Search over the reduced dimension: start at the JL lower bound, water-fill
// each candidate, stop when the level can no longer be met (per-dimension
// headroom shrinks as r grows, so feasibility is monotone). The stopping
// rule answers the last feasible r; the argmin over visited candidates is
// reported alongside since the two need not agree when the noise
// requirement is degenerate.
inline AllocationResult solve(const AllocationProblem& p) {
    p.validate();
    const int n = p.clients();
    AllocationResult res;
    res.omega_level = water_level(p);
    res.r_min = privacy::jl_min_dim(std::max(2, n), p.eps_jl, p.a);
    const int cap = p.r_cap > 0 ? std::min(p.r_cap, p.d) : p.d;
    res.r_max_searched = cap;
    if (res.r_min > cap) return res;  // JL bound itself not representable

    // Loose targets: zero clients are needed at the very first candidate,
    // so the stopping rule answers the JL bound with an all-zero
    // allocation. The objective keeps falling in r, so the argmin over the
    // candidate range lands on the cap instead; both are reported.
    if (res.omega_level == 0.0) {
        res.feasible = true;
        res.r_star = res.r_min;
        res.zeta_star.assign(static_cast<std::size_t>(n), 0.0);
        res.omegas.assign(static_cast<std::size_t>(n), 0.0);
        res.objective = detail::objective_at(p, res.r_star, 0.0);
        res.r_argmin = res.r_min;
        res.objective_argmin = res.objective;
        for (int r = res.r_min; r <= cap; ++r) {
            const double obj = detail::objective_at(p, r, 0.0);
            if (obj < res.objective_argmin) {
                res.objective_argmin = obj;
                res.r_argmin = r;
            }
        }
        return res;
    }

    const double tol = 1e-12 * (1.0 + res.omega_level);
    int last_feasible = 0;
    FillResult last_fill;
    res.objective_argmin = 0.0;
    for (int r = res.r_min; r <= cap; ++r) {
        FillResult f = fill(p, r, res.omega_level);
        if (f.residual > tol) break;  // no client set can meet the level
        const double obj = detail::objective_at(p, r, f.assigned);
        if (last_feasible == 0 || obj < res.objective_argmin) {
            res.objective_argmin = obj;
            res.r_argmin = r;
        }
        last_feasible = r;
        last_fill = std::move(f);
    }
    if (last_feasible == 0) return res;  // infeasible even at the JL bound

    res.feasible = true;
    res.r_star = last_feasible;
    res.omegas = last_fill.omegas;
    res.zeta_star.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        res.zeta_star[static_cast<std::size_t>(i)] =
            static_cast<double>(res.r_star) * last_fill.omegas[static_cast<std::size_t>(i)] /
            p.kappas[static_cast<std::size_t>(i)];
    res.objective = detail::objective_at(p, res.r_star, last_fill.assigned);
    return res;
}

}  // namespace dprp::allocator
