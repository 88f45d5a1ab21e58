#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dprp/projection.hpp"
#include "dprp/rng.hpp"

namespace dprp::aircomp {

// One round of the multiple-access channel as seen by the server: per-client
// receive SNRs kappa_i = P_i |h_i|^2, transmit powers, channel-noise
// variance, and the number of channel uses r.
struct ChannelRound {
    std::vector<double> kappas;
    std::vector<double> powers;  // P_i; defaults to all-ones
    double sigma2_channel = 1.0;
    int r = 0;

    int clients() const { return static_cast<int>(kappas.size()); }
    double power(int i) const { return powers.empty() ? 1.0 : powers[static_cast<std::size_t>(i)]; }
    // Real channel gain after phase pre-compensation.
    double gain(int i) const { return std::sqrt(kappas[static_cast<std::size_t>(i)] / power(i)); }
    double kappa_min() const {
        double m = kappas.at(0);
        for (double k : kappas) m = k < m ? k : m;
        return m;
    }
};

// |h|^2 drawn as the squared magnitude of a standard complex Gaussian,
// i.e. Exponential(1).
inline std::vector<double> draw_rayleigh_kappas(std::span<const double> powers,
                                                rng::SplitMix64& gen) {
    std::vector<double> kappas(powers.size());
    for (std::size_t i = 0; i < powers.size(); ++i) kappas[i] = powers[i] * gen.next_exponential();
    return kappas;
}

struct PowerSplit {
    std::vector<double> gamma;  // signal fraction
    std::vector<double> zeta;   // artificial-noise fraction
};

struct AlignResult {
    std::vector<double> gamma;
    double c = 0.0;  // alignment constant sqrt(kappa_min)/L
    double kappa_min = 0.0;
};

// Power alignment: gamma_i = kappa_min / kappa_i so that every client's
// signal arrives with the same coefficient, and c = sqrt(kappa_min)/L.
// Rounds whose kappa_min falls below the floor are rejected rather than
// amplified into the power budget.
inline AlignResult align(std::span<const double> kappas, double grad_bound,
                         double kappa_floor = 1e-6) {
    if (kappas.empty()) throw std::invalid_argument("align: no clients");
    if (grad_bound <= 0.0) throw std::invalid_argument("align: grad bound must be > 0");
    double kmin = kappas[0];
    for (double k : kappas) {
        if (!(k > 0.0)) throw std::domain_error("align: infeasible, kappa_i = 0");
        kmin = k < kmin ? k : kmin;
    }
    if (kmin < kappa_floor) throw std::domain_error("align: infeasible, kappa_min below floor");
    AlignResult res;
    res.kappa_min = kmin;
    res.c = std::sqrt(kmin) / grad_bound;
    res.gamma.resize(kappas.size());
    for (std::size_t i = 0; i < kappas.size(); ++i) res.gamma[i] = kmin / kappas[i];
    return res;
}

// Client-side transmit signal: scaled projected gradient plus artificial
// Gaussian noise with per-dimension variance zeta_i P_i / r. Meets the
// average power constraint whenever E||z||^2 <= L^2.
inline std::vector<double> transmit(std::span<const double> z, double gamma_i, double zeta_i,
                                    double power_i, double grad_bound, rng::SplitMix64& gen) {
    if (gamma_i < 0.0 || zeta_i < 0.0 || gamma_i + zeta_i > 1.0 + 1e-12)
        throw std::domain_error("transmit: power split exceeds budget");
    const std::size_t r = z.size();
    const double signal_scale = std::sqrt(gamma_i * power_i) / grad_bound;
    std::vector<double> x(r);
    for (std::size_t q = 0; q < r; ++q) x[q] = signal_scale * z[q];
    if (zeta_i > 0.0) {
        const double noise_scale = std::sqrt(zeta_i * power_i / static_cast<double>(r));
        for (std::size_t q = 0; q < r; ++q) x[q] += noise_scale * gen.next_gaussian();
    }
    return x;
}

// Channel superposition y = sum_i |h_i| x_i + n, n ~ N(0, sigma2 I_r).
inline std::vector<double> mac_superpose(const std::vector<std::vector<double>>& signals,
                                         const ChannelRound& channel, rng::SplitMix64& gen) {
    if (static_cast<int>(signals.size()) != channel.clients())
        throw std::invalid_argument("mac_superpose: signal count != client count");
    const std::size_t r = static_cast<std::size_t>(channel.r);
    std::vector<double> y(r, 0.0);
    for (int i = 0; i < channel.clients(); ++i) {
        const auto& x = signals[static_cast<std::size_t>(i)];
        if (x.size() != r) throw std::invalid_argument("mac_superpose: signal length != r");
        const double g = channel.gain(i);
        for (std::size_t q = 0; q < r; ++q) y[q] += g * x[q];
    }
    if (channel.sigma2_channel > 0.0) {
        const double sd = std::sqrt(channel.sigma2_channel);
        for (std::size_t q = 0; q < r; ++q) y[q] += sd * gen.next_gaussian();
    }
    return y;
}

// Server post-processing: (1/(n c)) (1/sqrt(r)) U_r^T y. Unbiased for the
// average gradient when the transmit coefficients are aligned.
inline std::vector<double> ps_decode(std::span<const double> y,
                                     const projection::ProjectionMatrix& m, int n, double c) {
    if (c <= 0.0) throw std::domain_error("ps_decode: c must be > 0");
    if (n < 1) throw std::invalid_argument("ps_decode: n must be >= 1");
    std::vector<double> g_hat = projection::back_project(m, y);
    const double scale = 1.0 / (static_cast<double>(n) * c);
    for (auto& v : g_hat) v *= scale;
    return g_hat;
}

struct RoundResult {
    std::vector<double> g_hat;
    std::vector<double> y;
    double c = 0.0;
    double sigma2_effective = 0.0;  // sum_i zeta_i kappa_i / r + sigma2_channel
};

// Per-dimension variance of the effective channel-output noise.
inline double effective_noise_variance(const ChannelRound& channel,
                                       std::span<const double> zeta) {
    double acc = 0.0;
    for (int i = 0; i < channel.clients(); ++i)
        acc += zeta[static_cast<std::size_t>(i)] * channel.kappas[static_cast<std::size_t>(i)];
    return acc / static_cast<double>(channel.r) + channel.sigma2_channel;
}

// Per-coordinate variance of the equivalent noise folded back into model
// space, sigma2_ne = sigma2_effective / (n c)^2.
inline double equivalent_noise_variance(const ChannelRound& channel, std::span<const double> zeta,
                                        double c) {
    const double nc = static_cast<double>(channel.clients()) * c;
    return effective_noise_variance(channel, zeta) / (nc * nc);
}

// One full uplink round on already-projected gradients. Per-client noise
// streams and the channel stream are derived from noise_seed, so the result
// is a pure function of its inputs.
inline RoundResult run_round(const std::vector<std::vector<double>>& projected,
                             const projection::ProjectionMatrix& m, const ChannelRound& channel,
                             const PowerSplit& split, double grad_bound, double c,
                             std::uint64_t noise_seed) {
    const int n = channel.clients();
    if (static_cast<int>(projected.size()) != n)
        throw std::invalid_argument("run_round: gradient count != client count");
    std::vector<std::vector<double>> signals;
    signals.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rng::SplitMix64 client_gen(rng::derive(noise_seed, static_cast<std::uint64_t>(i)));
        signals.push_back(transmit(projected[static_cast<std::size_t>(i)],
                                   split.gamma[static_cast<std::size_t>(i)],
                                   split.zeta[static_cast<std::size_t>(i)], channel.power(i),
                                   grad_bound, client_gen));
    }
    rng::SplitMix64 channel_gen(rng::derive(noise_seed, static_cast<std::uint64_t>(n)));
    RoundResult res;
    res.y = mac_superpose(signals, channel, channel_gen);
    res.g_hat = ps_decode(res.y, m, n, c);
    res.c = c;
    res.sigma2_effective = effective_noise_variance(channel, split.zeta);
    return res;
}

}  // namespace dprp::aircomp
