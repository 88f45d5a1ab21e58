#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dprp/projection.hpp"

namespace dprp::convergence {

using projection::DistributionKind;

// Smoothness constant doubles as the gradient-norm bound; the trainer
// reports both its true smoothness and the clip bound so the slack between
// them is visible.
struct LossProfile {
    double smoothness = 1.0;        // L
    double strong_convexity = 1.0;  // lambda

    LossProfile(double L, double lambda) : smoothness(L), strong_convexity(lambda) {
        if (!(lambda > 0.0)) throw std::invalid_argument("LossProfile: lambda must be > 0");
        if (L < lambda) throw std::invalid_argument("LossProfile: L must be >= lambda");
    }
};

// Per-round channel-dependent inputs of the bound. noise_sum is
// sum_i zeta_i kappa_i / r for the reduction scheme, sum_i beta_i kappa_i / d
// for the baseline.
struct RoundParams {
    int d = 0;
    int r = 0;
    int n = 0;
    double c = 0.0;
    double noise_sum = 0.0;
    double sigma2 = 1.0;
};

namespace detail {
inline double dimension_overhead(DistributionKind kind, int d, int r) {
    switch (kind.family()) {
        case DistributionKind::Family::kRademacher:
            return static_cast<double>(d - 1) / r;
        case DistributionKind::Family::kAchlioptas:
            return static_cast<double>(d + kind.sparsity() - 2) / r;
        case DistributionKind::Family::kGaussian:
            return static_cast<double>(d + 1) / r;
    }
    return 0.0;
}

inline double noise_term(int d, int n, double c, double noise_sum, double sigma2) {
    const double nc = static_cast<double>(n) * c;
    return static_cast<double>(d) / (nc * nc) * (noise_sum + sigma2);
}
}  // namespace detail

// Upper bound on E||g_hat||^2 for one round of the reduction scheme.
inline double second_moment_bound(DistributionKind kind, int d, int r, int n, double c,
                                  double noise_sum, double sigma2, double grad_bound) {
    if (r < 1 || n < 1 || d < 1) throw std::invalid_argument("second_moment_bound: bad dims");
    if (!(c > 0.0)) throw std::invalid_argument("second_moment_bound: c must be > 0");
    const double L2 = grad_bound * grad_bound;
    return L2 * (1.0 + detail::dimension_overhead(kind, d, r)) +
           detail::noise_term(d, n, c, noise_sum, sigma2);
}

// No-reduction counterpart: the projection overhead disappears.
inline double baseline_second_moment(int d, int n, double c, double beta_noise_sum, double sigma2,
                                     double grad_bound) {
    if (n < 1 || d < 1) throw std::invalid_argument("baseline_second_moment: bad dims");
    if (!(c > 0.0)) throw std::invalid_argument("baseline_second_moment: c must be > 0");
    return grad_bound * grad_bound + detail::noise_term(d, n, c, beta_noise_sum, sigma2);
}

struct BoundReport {
    DistributionKind kind = DistributionKind::rademacher();
    int r = 0;
    int T = 0;
    double term_gradient = 0.0;  // (2L/lambda^2 T^2) sum_t L^2 (1 + overhead)
    double term_noise = 0.0;     // (2L/lambda^2 T^2) sum_t d sigma2_ne
    double xi_bound = 0.0;       // sum of the two
};

// Optimality-gap bound after T rounds with learning rate 1/(lambda t):
// (2L / lambda^2 T^2) sum_t M_t with per-term breakdown.
inline BoundReport convergence_bound(DistributionKind kind, const LossProfile& profile,
                                     std::span<const RoundParams> rounds) {
    if (rounds.empty()) throw std::invalid_argument("convergence_bound: no rounds");
    const double L = profile.smoothness;
    const double L2 = L * L;
    double grad_sum = 0.0, noise_sum = 0.0;
    for (const auto& p : rounds) {
        grad_sum += L2 * (1.0 + detail::dimension_overhead(kind, p.d, p.r));
        noise_sum += detail::noise_term(p.d, p.n, p.c, p.noise_sum, p.sigma2);
    }
    const double T = static_cast<double>(rounds.size());
    const double scale = 2.0 * L / (profile.strong_convexity * profile.strong_convexity * T * T);
    BoundReport rep;
    rep.kind = kind;
    rep.r = rounds.front().r;
    rep.T = static_cast<int>(rounds.size());
    rep.term_gradient = scale * grad_sum;
    rep.term_noise = scale * noise_sum;
    rep.xi_bound = rep.term_gradient + rep.term_noise;
    return rep;
}

inline double baseline_convergence_bound(const LossProfile& profile,
                                         std::span<const RoundParams> rounds) {
    if (rounds.empty()) throw std::invalid_argument("baseline_convergence_bound: no rounds");
    const double L = profile.smoothness;
    double acc = 0.0;
    for (const auto& p : rounds)
        acc += baseline_second_moment(p.d, p.n, p.c, p.noise_sum, p.sigma2, L);
    const double T = static_cast<double>(rounds.size());
    return 2.0 * L / (profile.strong_convexity * profile.strong_convexity * T * T) * acc;
}

struct TradeoffBound {
    double term_gradient = 0.0;  // O(1/T) optimization term
    double term_noise = 0.0;     // O(T) privacy-noise term
    double total = 0.0;
};

// Closed-form utility-privacy trade-off at a static channel: the bound is
// decreasing in the total privacy budget eps_total and convex in T.
inline TradeoffBound utility_privacy_bound(const LossProfile& profile, int d, int r, int s, int n,
                                           int T, double eps_total, double delta_t,
                                           double eps_jl) {
    if (!(eps_total > 0.0)) throw std::invalid_argument("utility_privacy_bound: eps_total <= 0");
    if (r < 1 || T < 1 || n < 1) throw std::invalid_argument("utility_privacy_bound: bad dims");
    const double L = profile.smoothness;
    const double lam2 = profile.strong_convexity * profile.strong_convexity;
    const double L3 = L * L * L;
    TradeoffBound b;
    b.term_gradient = 2.0 * L3 / (lam2 * static_cast<double>(T)) *
                      (1.0 + static_cast<double>(d + s - 2) / static_cast<double>(r));
    b.term_noise = 16.0 * static_cast<double>(d) * L3 * std::log(1.25 / delta_t) *
                   (1.0 + eps_jl) * static_cast<double>(T) /
                   (lam2 * static_cast<double>(n) * n * eps_total * eps_total);
    b.total = b.term_gradient + b.term_noise;
    return b;
}

inline TradeoffBound baseline_utility_privacy_bound(const LossProfile& profile, int d, int n,
                                                    int T, double eps_total, double delta_t) {
    if (!(eps_total > 0.0)) throw std::invalid_argument("utility_privacy_bound: eps_total <= 0");
    const double L = profile.smoothness;
    const double lam2 = profile.strong_convexity * profile.strong_convexity;
    const double L3 = L * L * L;
    TradeoffBound b;
    b.term_gradient = 2.0 * L3 / (lam2 * static_cast<double>(T));
    b.term_noise = 16.0 * static_cast<double>(d) * L3 * std::log(1.25 / delta_t) *
                   static_cast<double>(T) / (lam2 * static_cast<double>(n) * n * eps_total * eps_total);
    b.total = b.term_gradient + b.term_noise;
    return b;
}

inline constexpr std::int64_t kMaxHorizon = std::int64_t{1} << 40;

// Integer minimizer of the trade-off bound over T: closed form sqrt(A/B)
// refined against both neighbours. Returns kMaxHorizon when the noise term
// vanishes (infinite budget).
inline std::int64_t optimal_T(const LossProfile& profile, int d, int r, int s, int n,
                              double eps_total, double delta_t, double eps_jl,
                              std::int64_t max_T = kMaxHorizon) {
    const double L = profile.smoothness;
    const double lam2 = profile.strong_convexity * profile.strong_convexity;
    const double L3 = L * L * L;
    const double A = 2.0 * L3 / lam2 * (1.0 + static_cast<double>(d + s - 2) / r);
    const double B = std::isinf(eps_total)
                         ? 0.0
                         : 16.0 * static_cast<double>(d) * L3 * std::log(1.25 / delta_t) *
                               (1.0 + eps_jl) / (lam2 * static_cast<double>(n) * n * eps_total *
                                                 eps_total);
    if (B <= 0.0) return max_T;
    const double t_star = std::sqrt(A / B);
    if (t_star >= static_cast<double>(max_T)) return max_T;
    const auto value = [&](std::int64_t T) {
        return A / static_cast<double>(T) + B * static_cast<double>(T);
    };
    std::int64_t best = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(t_star)));
    for (std::int64_t cand : {best + 1, best + 2}) {
        if (cand <= max_T && value(cand) < value(best)) best = cand;
    }
    return best;
}

}  // namespace dprp::convergence
