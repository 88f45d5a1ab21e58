#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dprp/parallel.hpp"
#include "dprp/projection.hpp"
#include "dprp/rng.hpp"

namespace dprp::privacy {

using projection::DistributionKind;

struct PrivacyParams {
    double delta_t = 5e-5;      // per-iteration delta
    double delta_prime = 5e-5;  // sensitivity failure probability
    double eps_jl = 0.5;        // JL distortion, in (0,1)
    double a = 1.0;             // JL confidence exponent
    double grad_bound = 1.0;    // L; neighbouring gradients differ by at most 2L

    void validate() const {
        if (!(delta_t > 0.0 && delta_t < 1.0))
            throw std::invalid_argument("privacy: delta_t must be in (0,1)");
        if (!(delta_prime > 0.0 && delta_prime < 1.0))
            throw std::invalid_argument("privacy: delta_prime must be in (0,1)");
        if (!(eps_jl > 0.0 && eps_jl < 1.0))
            throw std::invalid_argument("privacy: eps_jl must be in (0,1)");
        if (!(a > 0.0)) throw std::invalid_argument("privacy: a must be > 0");
        if (!(grad_bound > 0.0)) throw std::invalid_argument("privacy: grad_bound must be > 0");
    }
};

// Equal split of a total delta budget over T iterations after reserving
// the sensitivity-failure tail.
inline double per_iteration_delta(double delta_total, int T, double tail_term) {
    if (T < 1) throw std::invalid_argument("per_iteration_delta: T must be >= 1");
    const double available = delta_total - tail_term;
    if (!(available > 0.0))
        throw std::invalid_argument("per_iteration_delta: budget consumed by the tail term");
    return available / static_cast<double>(T);
}

enum class Regime { kJl, kGeneralSqrt, kGeneralLinear, kBaseline };

inline std::string regime_name(Regime r) {
    switch (r) {
        case Regime::kJl: return "jl";
        case Regime::kGeneralSqrt: return "general_sqrt";
        case Regime::kGeneralLinear: return "general_linear";
        case Regime::kBaseline: return "baseline";
    }
    return "?";
}

struct PrivacyReport {
    double eps_per_iter = 0.0;
    double eps_total = 0.0;
    double delta_total = 0.0;
    Regime regime = Regime::kJl;
};

// Smallest r for which a projection of n points keeps squared norms within
// (1 +/- eps) except with probability n^-a.
inline int jl_min_dim(int n, double eps_jl, double a) {
    if (n < 2) throw std::invalid_argument("jl_min_dim: n must be >= 2");
    if (!(eps_jl > 0.0 && eps_jl < 1.0))
        throw std::invalid_argument("jl_min_dim: eps_jl must be in (0,1)");
    if (!(a > 0.0)) throw std::invalid_argument("jl_min_dim: a must be > 0");
    const double denom = eps_jl * eps_jl / 2.0 - eps_jl * eps_jl * eps_jl / 3.0;
    const double bound = (4.0 + 2.0 * a) / denom * std::log(static_cast<double>(n));
    return static_cast<int>(std::ceil(bound - 1e-12));
}

namespace detail {
inline double gaussian_mechanism_eps(double kappa_min, double noise_sum, double sigma2_channel,
                                     double delta_t) {
    if (!(kappa_min > 0.0)) throw std::invalid_argument("ldp: kappa_min must be > 0");
    if (noise_sum < 0.0) throw std::invalid_argument("ldp: noise_sum must be >= 0");
    if (!(delta_t > 0.0 && delta_t < 1.0)) throw std::invalid_argument("ldp: delta_t in (0,1)");
    return std::sqrt(2.0 * kappa_min * std::log(1.25 / delta_t) / (noise_sum + sigma2_channel));
}
}  // namespace detail

// Per-iteration LDP in the JL regime. noise_sum is sum_i zeta_i kappa_i / r.
// The caller is responsible for r meeting the JL condition.
inline double ldp_jl(double kappa_min, double noise_sum, double sigma2_channel, double delta_t,
                     double eps_jl) {
    return 2.0 * std::sqrt(1.0 + eps_jl) *
           detail::gaussian_mechanism_eps(kappa_min, noise_sum, sigma2_channel, delta_t);
}

// High-probability inflation of the projected sensitivity over the
// distribution-free 2L value: 1 + 8 s sqrt(ln(1/delta')/r) when
// r >= ln(1/delta'), the linear-in-1/r variant otherwise.
inline double sensitivity_inflation(int sub_gaussian_s, int r, double delta_prime) {
    if (r < 1) throw std::invalid_argument("sensitivity_inflation: r must be >= 1");
    if (!(delta_prime > 0.0 && delta_prime <= 1.0))
        throw std::invalid_argument("sensitivity_inflation: delta_prime in (0,1]");
    const double log_term = std::log(1.0 / delta_prime);
    const double ratio = log_term / static_cast<double>(r);
    const double s = static_cast<double>(sub_gaussian_s);
    return static_cast<double>(r) >= log_term ? 1.0 + 8.0 * s * std::sqrt(ratio)
                                              : 1.0 + 8.0 * s * ratio;
}

inline Regime general_regime(int r, double delta_prime) {
    return static_cast<double>(r) >= std::log(1.0 / delta_prime) ? Regime::kGeneralSqrt
                                                                 : Regime::kGeneralLinear;
}

// Per-iteration LDP for any r via the sub-exponential sensitivity tail.
inline double ldp_general(DistributionKind kind, int r, double delta_prime, double kappa_min,
                          double noise_sum, double sigma2_channel, double delta_t) {
    const double inflation = sensitivity_inflation(kind.sub_gaussian_scale(), r, delta_prime);
    return 2.0 * std::sqrt(inflation) *
           detail::gaussian_mechanism_eps(kappa_min, noise_sum, sigma2_channel, delta_t);
}

// No-reduction baseline; beta_noise_sum is sum_i beta_i kappa_i / d.
inline double ldp_baseline(double kappa_min, double beta_noise_sum, double sigma2_channel,
                           double delta_t) {
    return 2.0 * detail::gaussian_mechanism_eps(kappa_min, beta_noise_sum, sigma2_channel, delta_t);
}

struct CrossoverThresholds {
    // Sufficient bound from the sub-exponential sensitivity analysis; below
    // it the general-r curve beats the baseline (conservative).
    double r_general = 0.0;
    // Exact crossing of the JL-regime curve against the baseline: the JL
    // epsilon is below the baseline epsilon iff r is below this value.
    double r_jl = 0.0;
};

// Upper thresholds on r below which the projected scheme beats the
// no-reduction baseline at the same artificial-noise budget.
inline CrossoverThresholds crossover_r(std::span<const double> zeta_kappas,
                                       std::span<const double> beta_kappas, int d, double sigma2,
                                       double delta_prime, int s, double eps_jl) {
    if (zeta_kappas.size() != beta_kappas.size())
        throw std::invalid_argument("crossover_r: client vectors differ in length");
    if (d < 1) throw std::invalid_argument("crossover_r: d must be >= 1");
    double zk = 0.0, bk = 0.0;
    for (double v : zeta_kappas) zk += v;
    for (double v : beta_kappas) bk += v;
    const double beta_sum = bk / static_cast<double>(d);

    CrossoverThresholds out;
    if (zk <= 0.0) return out;  // no artificial noise, never beats

    const double log_term = std::log(1.0 / delta_prime);
    const double inner = 1.0 + (sigma2 + beta_sum) / (zk * zk);
    const double general_num = zk / (1.0 + std::sqrt(inner));
    const double general_den =
        zk / static_cast<double>(d) + 32.0 * static_cast<double>(s) * s * log_term;
    out.r_general = general_num / general_den;

    // From ldp_jl < ldp_baseline: (1+eps)(beta_sum + sigma2) < zk/r + sigma2.
    out.r_jl = zk / ((1.0 + eps_jl) * beta_sum + eps_jl * sigma2);
    return out;
}

// Basic composition over iterations plus the sensitivity-failure tail
// (T/n^a in the JL regime, T delta' otherwise).
inline std::pair<double, double> compose(std::span<const double> eps_per_iter,
                                         std::span<const double> delta_per_iter,
                                         double tail_term) {
    double eps = 0.0, delta = tail_term;
    for (double e : eps_per_iter) eps += e;
    for (double d : delta_per_iter) delta += d;
    return {eps, delta};
}

inline double jl_tail_term(int n, double a, int T) {
    return static_cast<double>(T) / std::pow(static_cast<double>(n), a);
}

inline double general_tail_term(double delta_prime, int T) {
    return static_cast<double>(T) * delta_prime;
}

// T identical iterations under a static channel.
inline PrivacyReport static_report(double eps_per_iter, double delta_t, int T, double tail_term,
                                   Regime regime) {
    PrivacyReport rep;
    rep.eps_per_iter = eps_per_iter;
    rep.eps_total = static_cast<double>(T) * eps_per_iter;
    rep.delta_total = static_cast<double>(T) * delta_t + tail_term;
    rep.regime = regime;
    return rep;
}

struct TailCheckResult {
    double violation_rate = 0.0;
    double threshold = 0.0;
    std::size_t trials = 0;
};

// Empirical soundness check of the projected-sensitivity tail: draw fresh
// matrices, project a fixed difference vector of norm 2L spread evenly over
// the coordinates, and count how often the squared norm exceeds the
// closed-form threshold. The rate must stay below delta' up to sampling
// noise.
inline TailCheckResult sensitivity_tail_check(DistributionKind kind, int r, int d,
                                              double delta_prime, std::size_t trials,
                                              std::uint64_t seed, double grad_bound = 1.0) {
    if (trials < 10000) throw std::invalid_argument("sensitivity_tail_check: trials must be >= 1e4");
    if (r < 1 || d < 1) throw std::invalid_argument("sensitivity_tail_check: bad dimensions");
    const double diff_norm2 = 4.0 * grad_bound * grad_bound;  // ||g - g'||^2 = (2L)^2
    const double inflation = sensitivity_inflation(kind.sub_gaussian_scale(), r, delta_prime);
    const double threshold = static_cast<double>(r) * diff_norm2 * inflation;
    const double coord = 2.0 * grad_bound / std::sqrt(static_cast<double>(d));

    const std::size_t num_chunks = 64;
    std::vector<std::size_t> violations(num_chunks, 0);
    parallel_chunks(trials, num_chunks, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        std::size_t count = 0;
        for (std::size_t trial = begin; trial < end; ++trial) {
            rng::SplitMix64 gen(rng::derive(seed, trial));
            double s_stat = 0.0;
            switch (kind.family()) {
                case DistributionKind::Family::kRademacher:
                    for (int k = 0; k < r; ++k) {
                        double acc = 0.0;
                        for (int j = 0; j < d; ++j) acc += gen.next_sign();
                        acc *= coord;
                        s_stat += acc * acc;
                    }
                    break;
                case DistributionKind::Family::kGaussian:
                    for (int k = 0; k < r; ++k) {
                        double acc = 0.0;
                        for (int j = 0; j < d; ++j) acc += gen.next_gaussian();
                        acc *= coord;
                        s_stat += acc * acc;
                    }
                    break;
                case DistributionKind::Family::kAchlioptas: {
                    const double s = kind.sparsity();
                    const double root_s = std::sqrt(s);
                    const double p_half = 1.0 / (2.0 * s);
                    for (int k = 0; k < r; ++k) {
                        double acc = 0.0;
                        for (int j = 0; j < d; ++j) {
                            const double u = gen.next_unit_half_open();
                            if (u < p_half)
                                acc += root_s;
                            else if (u >= 1.0 - p_half)
                                acc -= root_s;
                        }
                        acc *= coord;
                        s_stat += acc * acc;
                    }
                    break;
                }
            }
            if (s_stat >= threshold) ++count;
        }
        violations[chunk] = count;
    });

    std::size_t total = 0;
    for (std::size_t v : violations) total += v;
    TailCheckResult res;
    res.violation_rate = static_cast<double>(total) / static_cast<double>(trials);
    res.threshold = threshold;
    res.trials = trials;
    return res;
}

}  // namespace dprp::privacy
