#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dprp/aircomp.hpp"
#include "dprp/convergence.hpp"
#include "dprp/privacy.hpp"
#include "dprp/projection.hpp"
#include "dprp/rng.hpp"

namespace dprp::trainer {

namespace detail {

// Dense SPD solve via Cholesky; dimensions here stay small (d <= a few
// hundred).
inline std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, int d) {
    for (int j = 0; j < d; ++j) {
        double diag = a[static_cast<std::size_t>(j) * d + j];
        for (int k = 0; k < j; ++k) {
            const double v = a[static_cast<std::size_t>(j) * d + k];
            diag -= v * v;
        }
        if (diag <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
        const double root = std::sqrt(diag);
        a[static_cast<std::size_t>(j) * d + j] = root;
        for (int i = j + 1; i < d; ++i) {
            double v = a[static_cast<std::size_t>(i) * d + j];
            for (int k = 0; k < j; ++k)
                v -= a[static_cast<std::size_t>(i) * d + k] * a[static_cast<std::size_t>(j) * d + k];
            a[static_cast<std::size_t>(i) * d + j] = v / root;
        }
    }
    for (int i = 0; i < d; ++i) {
        double v = b[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) v -= a[static_cast<std::size_t>(i) * d + k] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = v / a[static_cast<std::size_t>(i) * d + i];
    }
    for (int i = d - 1; i >= 0; --i) {
        double v = b[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < d; ++k) v -= a[static_cast<std::size_t>(k) * d + i] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = v / a[static_cast<std::size_t>(i) * d + i];
    }
    return b;
}

inline double largest_eigenvalue(std::span<const double> a, int d) {
    std::vector<double> v(static_cast<std::size_t>(d), 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> av(static_cast<std::size_t>(d));
    double lambda = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
        for (int i = 0; i < d; ++i) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) acc += a[static_cast<std::size_t>(i) * d + j] * v[static_cast<std::size_t>(j)];
            av[static_cast<std::size_t>(i)] = acc;
        }
        double norm = 0.0;
        for (double x : av) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        const double next = norm;
        for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] = av[static_cast<std::size_t>(i)] / norm;
        if (iter > 10 && std::abs(next - lambda) <= 1e-13 * next) return next;
        lambda = next;
    }
    return lambda;
}

}  // namespace detail

// Per-client ridge-regression task. The global loss is the uniform average
// of the client losses (equal dataset sizes), lambda-strongly convex with a
// closed-form optimum.
class SyntheticTask {
  public:
    // a_scale shrinks the data matrices so that the true smoothness can be
    // kept below the gradient clip bound when tests need the bound to hold
    // with the same constant; b_scale = 0 gives a task whose optimum is the
    // origin.
    SyntheticTask(int n, int d, int m_per_client, double lambda, std::uint64_t seed,
                  double a_scale = 1.0, double b_scale = 1.0)
        : n_(n), d_(d), m_(m_per_client), lambda_(lambda) {
        if (n < 1 || d < 1 || m_per_client < 1)
            throw std::invalid_argument("SyntheticTask: bad shape");
        if (!(lambda > 0.0)) throw std::invalid_argument("SyntheticTask: lambda must be > 0");
        a_.resize(static_cast<std::size_t>(n));
        b_.resize(static_cast<std::size_t>(n));
        rng::SplitMix64 root(seed);
        for (int i = 0; i < n; ++i) {
            rng::SplitMix64 gen = root.split(static_cast<std::uint64_t>(i));
            auto& ai = a_[static_cast<std::size_t>(i)];
            auto& bi = b_[static_cast<std::size_t>(i)];
            ai.resize(static_cast<std::size_t>(m_) * d_);
            bi.resize(static_cast<std::size_t>(m_));
            for (auto& v : ai) v = a_scale * gen.next_gaussian();
            for (auto& v : bi) v = b_scale * gen.next_gaussian();
        }

        // Normal equations of the global loss: (Gram + lambda I) w* = rhs.
        std::vector<double> gram(static_cast<std::size_t>(d) * d, 0.0);
        std::vector<double> rhs(static_cast<std::size_t>(d), 0.0);
        const double scale = 1.0 / (static_cast<double>(n) * m_);
        for (int i = 0; i < n; ++i) {
            const auto& ai = a_[static_cast<std::size_t>(i)];
            const auto& bi = b_[static_cast<std::size_t>(i)];
            for (int row = 0; row < m_; ++row) {
                const double* ar = ai.data() + static_cast<std::size_t>(row) * d_;
                for (int j = 0; j < d; ++j) {
                    rhs[static_cast<std::size_t>(j)] += scale * ar[j] * bi[static_cast<std::size_t>(row)];
                    for (int k = j; k < d; ++k)
                        gram[static_cast<std::size_t>(j) * d + k] += scale * ar[j] * ar[k];
                }
            }
        }
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < j; ++k)
                gram[static_cast<std::size_t>(j) * d + k] = gram[static_cast<std::size_t>(k) * d + j];
        std::vector<double> hessian = gram;
        for (int j = 0; j < d; ++j) hessian[static_cast<std::size_t>(j) * d + j] += lambda;
        w_star_ = detail::cholesky_solve(hessian, rhs, d);
        smoothness_ = lambda + detail::largest_eigenvalue(gram, d);
        loss_at_optimum_ = loss(w_star_);
    }

    int clients() const { return n_; }
    int dim() const { return d_; }
    double lambda() const { return lambda_; }
    double smoothness() const { return smoothness_; }
    const std::vector<double>& w_star() const { return w_star_; }
    double loss_at_optimum() const { return loss_at_optimum_; }

    double client_loss(int i, std::span<const double> w) const {
        const auto& ai = a_[static_cast<std::size_t>(i)];
        const auto& bi = b_[static_cast<std::size_t>(i)];
        double acc = 0.0;
        for (int row = 0; row < m_; ++row) {
            const double* ar = ai.data() + static_cast<std::size_t>(row) * d_;
            double res = -bi[static_cast<std::size_t>(row)];
            for (int j = 0; j < d_; ++j) res += ar[j] * w[static_cast<std::size_t>(j)];
            acc += res * res;
        }
        double reg = 0.0;
        for (double x : w) reg += x * x;
        return acc / (2.0 * m_) + 0.5 * lambda_ * reg;
    }

    double loss(std::span<const double> w) const {
        double acc = 0.0;
        for (int i = 0; i < n_; ++i) acc += client_loss(i, w);
        return acc / static_cast<double>(n_);
    }

    double gap(std::span<const double> w) const { return loss(w) - loss_at_optimum_; }

    // Exact client gradient, rescaled to norm <= clip_bound when it
    // exceeds it.
    std::vector<double> local_gradient(int i, std::span<const double> w,
                                       double clip_bound) const {
        if (i < 0 || i >= n_) throw std::invalid_argument("local_gradient: bad client index");
        const auto& ai = a_[static_cast<std::size_t>(i)];
        const auto& bi = b_[static_cast<std::size_t>(i)];
        std::vector<double> g(static_cast<std::size_t>(d_));
        for (int j = 0; j < d_; ++j)
            g[static_cast<std::size_t>(j)] = lambda_ * w[static_cast<std::size_t>(j)];
        for (int row = 0; row < m_; ++row) {
            const double* ar = ai.data() + static_cast<std::size_t>(row) * d_;
            double res = -bi[static_cast<std::size_t>(row)];
            for (int j = 0; j < d_; ++j) res += ar[j] * w[static_cast<std::size_t>(j)];
            const double coeff = res / static_cast<double>(m_);
            for (int j = 0; j < d_; ++j) g[static_cast<std::size_t>(j)] += coeff * ar[j];
        }
        if (clip_bound > 0.0) {
            double norm2 = 0.0;
            for (double x : g) norm2 += x * x;
            const double norm = std::sqrt(norm2);
            if (norm > clip_bound) {
                const double shrink = clip_bound / norm;
                for (auto& x : g) x *= shrink;
            }
        }
        return g;
    }

  private:
    int n_, d_, m_;
    double lambda_;
    std::vector<std::vector<double>> a_;
    std::vector<std::vector<double>> b_;
    std::vector<double> w_star_;
    double smoothness_ = 0.0;
    double loss_at_optimum_ = 0.0;
};

enum class ChannelMode { kStatic, kIid };

// How the artificial-noise fractions are chosen each round.
enum class ZetaRule {
    kManual,         // use TrainConfig::zeta as given
    kLeftover,       // zeta_i = 1 - gamma_i (all remaining power)
    kUniformCapped,  // zeta_i = min(zeta_value, 1 - gamma_i)
};

struct TrainConfig {
    int r = 0;
    int T = 0;
    projection::DistributionKind kind = projection::DistributionKind::rademacher();
    std::uint64_t seed = 0;
    ChannelMode channel_mode = ChannelMode::kStatic;
    double power = 1.0;                 // P_i, uniform
    ZetaRule zeta_rule = ZetaRule::kManual;
    std::vector<double> zeta;           // per-client noise fractions (empty = all zero)
    double zeta_value = 0.0;            // for kUniformCapped
    double grad_clip = 1.0;             // L
    double sigma2_channel = 1.0;
    double kappa_floor = 1e-6;
    double delta_t = 5e-5;
    double delta_prime = 5e-5;
    double eps_jl = 0.5;
    // Debug bypass: r == d, no projection matrix; the decode reduces to
    // plain averaging when the channel is clean.
    bool identity_projection = false;
    // Fixed channel gains instead of a Rayleigh draw (testing hook).
    std::vector<double> fixed_kappas;
};

struct TrainTrace {
    std::vector<double> gap;          // per-iteration L(w_t) - L(w*)
    std::vector<double> bound;        // running optimality-gap bound at t
    std::vector<double> eps_spent;    // composed epsilon after t iterations
    double final_gap = 0.0;
    int redrawn_rounds = 0;           // iid mode: alignment-infeasible redraws
    double smoothness_true = 0.0;     // task smoothness, for slack reporting
};

namespace detail {

// Seed chain tags; the streams for matrices, transmit noise and the channel
// must stay distinct.
inline constexpr std::uint64_t kMatrixStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;
inline constexpr std::uint64_t kChannelStream = 3;

}  // namespace detail

// Full uplink training loop: project, transmit with artificial noise,
// superpose over the channel, decode, update with the 1/(lambda t) rate.
inline TrainTrace run(const SyntheticTask& task, const TrainConfig& config) {
    const int n = task.clients();
    const int d = task.dim();
    const int r = config.identity_projection ? d : config.r;
    if (config.identity_projection && config.r != d)
        throw std::invalid_argument("run: identity projection requires r == d");
    if (r < 1 || r > d) throw std::invalid_argument("run: r out of range");
    if (config.T < 1) throw std::invalid_argument("run: T must be >= 1");
    std::vector<double> zeta = config.zeta;
    if (config.zeta_rule == ZetaRule::kManual) {
        if (zeta.empty()) zeta.assign(static_cast<std::size_t>(n), 0.0);
        if (static_cast<int>(zeta.size()) != n) throw std::invalid_argument("run: zeta length != n");
    } else {
        zeta.assign(static_cast<std::size_t>(n), 0.0);
    }
    auto apply_zeta_rule = [&](const aircomp::AlignResult& al) {
        if (config.zeta_rule == ZetaRule::kLeftover) {
            for (int i = 0; i < n; ++i)
                zeta[static_cast<std::size_t>(i)] = 1.0 - al.gamma[static_cast<std::size_t>(i)];
        } else if (config.zeta_rule == ZetaRule::kUniformCapped) {
            for (int i = 0; i < n; ++i)
                zeta[static_cast<std::size_t>(i)] =
                    std::min(config.zeta_value, 1.0 - al.gamma[static_cast<std::size_t>(i)]);
        }
    };

    const double L = config.grad_clip;
    const double lambda = task.lambda();
    rng::SplitMix64 channel_gen(
        rng::derive(rng::derive(config.seed, detail::kChannelStream), 0));
    std::vector<double> powers(static_cast<std::size_t>(n), config.power);

    auto draw_kappas = [&]() {
        if (!config.fixed_kappas.empty()) return config.fixed_kappas;
        return aircomp::draw_rayleigh_kappas(powers, channel_gen);
    };

    aircomp::ChannelRound channel;
    channel.powers = powers;
    channel.sigma2_channel = config.sigma2_channel;
    channel.r = r;
    aircomp::AlignResult alignment;
    if (config.channel_mode == ChannelMode::kStatic) {
        channel.kappas = draw_kappas();
        alignment = aircomp::align(channel.kappas, L, config.kappa_floor);  // throws on abort
        apply_zeta_rule(alignment);
    }

    TrainTrace trace;
    trace.gap.reserve(static_cast<std::size_t>(config.T));
    trace.bound.reserve(static_cast<std::size_t>(config.T));
    trace.eps_spent.reserve(static_cast<std::size_t>(config.T));
    trace.smoothness_true = task.smoothness();

    std::vector<double> w(static_cast<std::size_t>(d), 0.0);
    std::vector<convergence::RoundParams> rounds;
    rounds.reserve(static_cast<std::size_t>(config.T));
    double eps_acc = 0.0;
    const convergence::LossProfile profile(std::max(L, lambda), lambda);

    for (int t = 1; t <= config.T; ++t) {
        if (config.channel_mode == ChannelMode::kIid) {
            for (;;) {
                channel.kappas = draw_kappas();
                try {
                    alignment = aircomp::align(channel.kappas, L, config.kappa_floor);
                    break;
                } catch (const std::domain_error&) {
                    ++trace.redrawn_rounds;
                    if (!config.fixed_kappas.empty())
                        throw;  // fixed infeasible channel cannot be redrawn
                }
            }
            apply_zeta_rule(alignment);
        }

        // Local gradients at the current model.
        std::vector<std::vector<double>> projected(static_cast<std::size_t>(n));
        const std::uint64_t matrix_seed =
            rng::derive(rng::derive(config.seed, detail::kMatrixStream), static_cast<std::uint64_t>(t));
        const std::uint64_t noise_seed =
            rng::derive(rng::derive(config.seed, detail::kNoiseStream), static_cast<std::uint64_t>(t));

        aircomp::PowerSplit split{alignment.gamma, zeta};
        aircomp::RoundResult round;
        if (config.identity_projection) {
            for (int i = 0; i < n; ++i)
                projected[static_cast<std::size_t>(i)] = task.local_gradient(i, w, L);
            // Identity transform: transmit/superpose/decode without the
            // matrix, same arithmetic otherwise.
            std::vector<std::vector<double>> signals(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                rng::SplitMix64 gen(rng::derive(noise_seed, static_cast<std::uint64_t>(i)));
                signals[static_cast<std::size_t>(i)] =
                    aircomp::transmit(projected[static_cast<std::size_t>(i)],
                                      split.gamma[static_cast<std::size_t>(i)],
                                      split.zeta[static_cast<std::size_t>(i)], config.power, L, gen);
            }
            rng::SplitMix64 gen(rng::derive(noise_seed, static_cast<std::uint64_t>(n)));
            round.y = aircomp::mac_superpose(signals, channel, gen);
            round.c = alignment.c;
            const double scale = 1.0 / (static_cast<double>(n) * alignment.c);
            round.g_hat = round.y;
            for (auto& v : round.g_hat) v *= scale;
            round.sigma2_effective = aircomp::effective_noise_variance(channel, split.zeta);
        } else {
            projection::ProjectionSpec spec{config.kind, d, r, matrix_seed};
            projection::ProjectionMatrix matrix(spec);
            for (int i = 0; i < n; ++i)
                projected[static_cast<std::size_t>(i)] =
                    projection::project(matrix, task.local_gradient(i, w, L));
            round = aircomp::run_round(projected, matrix, channel, split, L, alignment.c, noise_seed);
        }

        const double eta = 1.0 / (lambda * static_cast<double>(t));
        for (int j = 0; j < d; ++j) w[static_cast<std::size_t>(j)] -= eta * round.g_hat[static_cast<std::size_t>(j)];

        trace.gap.push_back(task.gap(w));

        double zk_sum = 0.0;
        for (int i = 0; i < n; ++i)
            zk_sum += zeta[static_cast<std::size_t>(i)] * channel.kappas[static_cast<std::size_t>(i)];
        rounds.push_back({d, r, n, alignment.c, zk_sum / static_cast<double>(r),
                          config.sigma2_channel});
        trace.bound.push_back(
            convergence::convergence_bound(config.kind, profile, rounds).xi_bound);

        eps_acc += config.identity_projection
                       ? privacy::ldp_baseline(alignment.kappa_min,
                                               zk_sum / static_cast<double>(d),
                                               config.sigma2_channel, config.delta_t)
                       : privacy::ldp_general(config.kind, r, config.delta_prime,
                                              alignment.kappa_min, zk_sum / static_cast<double>(r),
                                              config.sigma2_channel, config.delta_t);
        trace.eps_spent.push_back(eps_acc);
    }
    trace.final_gap = trace.gap.back();
    return trace;
}

// Reference loop without channel, projection, or noise: exact FedSGD on the
// clipped client gradients. Matches the degenerate configuration of run()
// (identity projection, zeta = 0, sigma2 = 0, unit gains) bit for bit.
inline std::vector<double> run_plain_fedsgd(const SyntheticTask& task, int T, double grad_clip) {
    const int n = task.clients();
    const int d = task.dim();
    std::vector<double> w(static_cast<std::size_t>(d), 0.0);
    std::vector<double> gaps;
    gaps.reserve(static_cast<std::size_t>(T));
    const double lambda = task.lambda();
    for (int t = 1; t <= T; ++t) {
        std::vector<double> sum(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < n; ++i) {
            std::vector<double> g = task.local_gradient(i, w, grad_clip);
            // mirror transmit (x1), gain (x1) and the channel sum
            for (int j = 0; j < d; ++j) sum[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(j)];
        }
        const double scale = 1.0 / (static_cast<double>(n) * 1.0);
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        for (int j = 0; j < d; ++j)
            w[static_cast<std::size_t>(j)] -= eta * (scale * sum[static_cast<std::size_t>(j)]);
        gaps.push_back(task.gap(w));
    }
    return gaps;
}

}  // namespace dprp::trainer
