#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dprp/aircomp.hpp"
#include "dprp/allocator.hpp"
#include "dprp/config.hpp"
#include "dprp/convergence.hpp"
#include "dprp/csv.hpp"
#include "dprp/privacy.hpp"
#include "dprp/trainer.hpp"

namespace dprp::experiment {

namespace detail {

// One static channel realization with alignment and the default
// all-leftover noise split (zeta_i = beta_i = 1 - gamma_i unless a uniform
// fraction is requested).
struct ChannelDraw {
    std::vector<double> kappas;
    std::vector<double> gamma;
    std::vector<double> zeta;
    double c = 0.0;
    double kappa_min = 0.0;
    double zeta_kappa_sum = 0.0;  // sum_i zeta_i kappa_i
};

inline ChannelDraw draw_channel(const ExperimentConfig& cfg, std::uint64_t draw_index) {
    ChannelDraw out;
    rng::SplitMix64 gen(rng::derive(rng::derive(cfg.seed, trainer::detail::kChannelStream),
                                    draw_index));
    std::vector<double> powers(static_cast<std::size_t>(cfg.n), cfg.power);
    out.kappas = aircomp::draw_rayleigh_kappas(powers, gen);
    const auto alignment = aircomp::align(out.kappas, cfg.grad_bound);
    out.gamma = alignment.gamma;
    out.c = alignment.c;
    out.kappa_min = alignment.kappa_min;
    out.zeta.resize(out.kappas.size());
    for (std::size_t i = 0; i < out.kappas.size(); ++i) {
        const double leftover = 1.0 - out.gamma[i];
        out.zeta[i] = cfg.zeta_uniform < 0.0 ? leftover : std::min(cfg.zeta_uniform, leftover);
        out.zeta_kappa_sum += out.zeta[i] * out.kappas[i];
    }
    return out;
}

struct LdpPoint {
    double eps_iter_jl = 0.0;
    double eps_iter_general = 0.0;
    double eps_iter_baseline = 0.0;
};

inline LdpPoint ldp_point(const ExperimentConfig& cfg, const ChannelDraw& ch, int r) {
    LdpPoint p;
    const double noise_sum = ch.zeta_kappa_sum / static_cast<double>(r);
    const double beta_sum = ch.zeta_kappa_sum / static_cast<double>(cfg.d);
    p.eps_iter_jl =
        privacy::ldp_jl(ch.kappa_min, noise_sum, cfg.sigma2_channel, cfg.delta_t, cfg.eps_jl);
    p.eps_iter_general = privacy::ldp_general(cfg.kind(), r, cfg.delta_prime, ch.kappa_min,
                                              noise_sum, cfg.sigma2_channel, cfg.delta_t);
    p.eps_iter_baseline =
        privacy::ldp_baseline(ch.kappa_min, beta_sum, cfg.sigma2_channel, cfg.delta_t);
    return p;
}

inline std::vector<int> r_grid(const ExperimentConfig& cfg) {
    std::vector<int> grid;
    for (int r = cfg.r_min; r <= cfg.r_max; r += cfg.r_step) grid.push_back(r);
    return grid;
}

}  // namespace detail

// T-fold LDP against the reduced dimension, with the no-reduction baseline
// at the same noise budget.
inline std::string sweep_ldp(const ExperimentConfig& cfg) {
    csv::Writer w;
    cfg.echo_into(w);
    const std::string hash = cfg.fingerprint();
    const int jl_floor = privacy::jl_min_dim(cfg.n, cfg.eps_jl, cfg.a);
    const double T = cfg.T;
    const double tail_jl = privacy::jl_tail_term(cfg.n, cfg.a, cfg.T);
    const double tail_general = privacy::general_tail_term(cfg.delta_prime, cfg.T);

    if (cfg.draws <= 1) {
        const auto ch = detail::draw_channel(cfg, 0);
        w.header({"config_hash", "r", "kind", "jl_valid", "eps_iter_jl", "eps_total_jl",
                  "delta_total_jl", "eps_iter_general", "eps_total_general",
                  "delta_total_general", "eps_iter_baseline", "eps_total_baseline",
                  "delta_total_baseline"});
        for (int r : detail::r_grid(cfg)) {
            const auto p = detail::ldp_point(cfg, ch, r);
            w.row()
                .add(hash)
                .add(r)
                .add(cfg.kind().name())
                .add(r >= jl_floor ? 1 : 0)
                .add(p.eps_iter_jl)
                .add(T * p.eps_iter_jl)
                .add(T * cfg.delta_t + tail_jl)
                .add(p.eps_iter_general)
                .add(T * p.eps_iter_general)
                .add(T * cfg.delta_t + tail_general)
                .add(p.eps_iter_baseline)
                .add(T * p.eps_iter_baseline)
                .add(T * cfg.delta_t);
        }
        return w.str();
    }

    // Multi-draw mode: mean and standard error over independent channel
    // realizations.
    std::vector<detail::ChannelDraw> draws;
    draws.reserve(static_cast<std::size_t>(cfg.draws));
    for (int k = 0; k < cfg.draws; ++k)
        draws.push_back(detail::draw_channel(cfg, static_cast<std::uint64_t>(k)));
    w.header({"config_hash", "r", "kind", "jl_valid", "eps_total_jl_mean", "eps_total_jl_stderr",
              "eps_total_general_mean", "eps_total_general_stderr", "eps_total_baseline_mean",
              "eps_total_baseline_stderr"});
    for (int r : detail::r_grid(cfg)) {
        double sums[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
        for (const auto& ch : draws) {
            const auto p = detail::ldp_point(cfg, ch, r);
            const double vals[3] = {T * p.eps_iter_jl, T * p.eps_iter_general,
                                    T * p.eps_iter_baseline};
            for (int k = 0; k < 3; ++k) {
                sums[k] += vals[k];
                sq[k] += vals[k] * vals[k];
            }
        }
        const double m = static_cast<double>(cfg.draws);
        auto stderr_of = [&](int k) {
            const double mean = sums[k] / m;
            const double var = std::max(0.0, sq[k] / m - mean * mean);
            return std::sqrt(var / m);
        };
        w.row()
            .add(hash)
            .add(r)
            .add(cfg.kind().name())
            .add(r >= jl_floor ? 1 : 0)
            .add(sums[0] / m)
            .add(stderr_of(0))
            .add(sums[1] / m)
            .add(stderr_of(1))
            .add(sums[2] / m)
            .add(stderr_of(2));
    }
    return w.str();
}

// Long-format privacy report: one row per (r, regime) in the module's
// report schema.
inline std::string ldp_report_csv(const ExperimentConfig& cfg) {
    csv::Writer w;
    cfg.echo_into(w);
    const std::string hash = cfg.fingerprint();
    const auto ch = detail::draw_channel(cfg, 0);
    const double tail_jl = privacy::jl_tail_term(cfg.n, cfg.a, cfg.T);
    const double tail_general = privacy::general_tail_term(cfg.delta_prime, cfg.T);
    w.header({"config_hash", "r", "kind", "eps_iter", "eps_total", "delta_total", "regime"});
    for (int r : detail::r_grid(cfg)) {
        const auto p = detail::ldp_point(cfg, ch, r);
        const auto jl = privacy::static_report(p.eps_iter_jl, cfg.delta_t, cfg.T, tail_jl,
                                               privacy::Regime::kJl);
        const auto general = privacy::static_report(p.eps_iter_general, cfg.delta_t, cfg.T,
                                                    tail_general,
                                                    privacy::general_regime(r, cfg.delta_prime));
        const auto baseline = privacy::static_report(p.eps_iter_baseline, cfg.delta_t, cfg.T, 0.0,
                                                     privacy::Regime::kBaseline);
        for (const auto& rep : {jl, general, baseline}) {
            w.row()
                .add(hash)
                .add(r)
                .add(cfg.kind().name())
                .add(rep.eps_per_iter)
                .add(rep.eps_total)
                .add(rep.delta_total)
                .add(privacy::regime_name(rep.regime));
        }
    }
    return w.str();
}

// Convergence bound against the reduced dimension for the three matrix
// laws, with the no-reduction baseline. Multi-draw mode reports mean and
// standard error over channel realizations.
inline std::string sweep_convergence(const ExperimentConfig& cfg) {
    csv::Writer w;
    cfg.echo_into(w);
    const std::string hash = cfg.fingerprint();
    const convergence::LossProfile profile(cfg.grad_bound, cfg.lambda);

    const std::vector<projection::DistributionKind> kinds = {
        projection::DistributionKind::rademacher(),
        projection::DistributionKind::achlioptas(std::max(2, cfg.s)),
        projection::DistributionKind::gaussian()};

    std::vector<detail::ChannelDraw> draws;
    const int num_draws = std::max(1, cfg.draws);
    draws.reserve(static_cast<std::size_t>(num_draws));
    for (int k = 0; k < num_draws; ++k)
        draws.push_back(detail::draw_channel(cfg, static_cast<std::uint64_t>(k)));

    auto bound_at = [&](const detail::ChannelDraw& ch, const projection::DistributionKind& kind,
                        int r) {
        const double noise_sum = ch.zeta_kappa_sum / static_cast<double>(r);
        std::vector<convergence::RoundParams> rounds(
            static_cast<std::size_t>(cfg.T),
            {cfg.d, r, cfg.n, ch.c, noise_sum, cfg.sigma2_channel});
        return convergence::convergence_bound(kind, profile, rounds);
    };
    auto baseline_at = [&](const detail::ChannelDraw& ch, int r) {
        const double beta_sum = ch.zeta_kappa_sum / static_cast<double>(cfg.d);
        std::vector<convergence::RoundParams> rounds(
            static_cast<std::size_t>(cfg.T),
            {cfg.d, r, cfg.n, ch.c, beta_sum, cfg.sigma2_channel});
        return convergence::baseline_convergence_bound(profile, rounds);
    };

    if (num_draws == 1) {
        w.header({"config_hash", "r", "kind", "T", "term_gradient", "term_noise", "xi_bound",
                  "baseline_bound"});
        for (int r : detail::r_grid(cfg)) {
            const double baseline = baseline_at(draws.front(), r);
            for (const auto& kind : kinds) {
                const auto rep = bound_at(draws.front(), kind, r);
                w.row()
                    .add(hash)
                    .add(r)
                    .add(kind.name())
                    .add(rep.T)
                    .add(rep.term_gradient)
                    .add(rep.term_noise)
                    .add(rep.xi_bound)
                    .add(baseline);
            }
        }
        return w.str();
    }

    w.header({"config_hash", "r", "kind", "T", "xi_bound_mean", "xi_bound_stderr",
              "baseline_bound_mean", "baseline_bound_stderr"});
    const double m = static_cast<double>(num_draws);
    for (int r : detail::r_grid(cfg)) {
        double base_sum = 0.0, base_sq = 0.0;
        for (const auto& ch : draws) {
            const double b = baseline_at(ch, r);
            base_sum += b;
            base_sq += b * b;
        }
        const double base_mean = base_sum / m;
        const double base_se = std::sqrt(std::max(0.0, base_sq / m - base_mean * base_mean) / m);
        for (const auto& kind : kinds) {
            double sum = 0.0, sq = 0.0;
            for (const auto& ch : draws) {
                const double v = bound_at(ch, kind, r).xi_bound;
                sum += v;
                sq += v * v;
            }
            const double mean = sum / m;
            const double se = std::sqrt(std::max(0.0, sq / m - mean * mean) / m);
            w.row()
                .add(hash)
                .add(r)
                .add(kind.name())
                .add(cfg.T)
                .add(mean)
                .add(se)
                .add(base_mean)
                .add(base_se);
        }
    }
    return w.str();
}

// Convergence bound against the T-fold LDP budget at a fixed reduced
// dimension (geometric epsilon grid).
inline std::string sweep_tradeoff(const ExperimentConfig& cfg) {
    csv::Writer w;
    cfg.echo_into(w);
    const std::string hash = cfg.fingerprint();
    const convergence::LossProfile profile(cfg.grad_bound, cfg.lambda);
    w.header({"config_hash", "eps_total", "r", "kind", "xi_bound", "term_gradient", "term_noise",
              "baseline_bound"});
    const double ratio = cfg.eps_max / cfg.eps_min;
    for (int i = 0; i < cfg.eps_points; ++i) {
        const double frac = cfg.eps_points == 1
                                ? 0.0
                                : static_cast<double>(i) / static_cast<double>(cfg.eps_points - 1);
        const double eps_total = cfg.eps_min * std::pow(ratio, frac);
        const auto dprp = convergence::utility_privacy_bound(
            profile, cfg.d, cfg.tradeoff_r, cfg.s, cfg.n, cfg.T, eps_total, cfg.delta_t,
            cfg.eps_jl);
        const auto base = convergence::baseline_utility_privacy_bound(profile, cfg.d, cfg.n, cfg.T,
                                                                      eps_total, cfg.delta_t);
        w.row()
            .add(hash)
            .add(eps_total)
            .add(cfg.tradeoff_r)
            .add(cfg.kind().name())
            .add(dprp.total)
            .add(dprp.term_gradient)
            .add(dprp.term_noise)
            .add(base.total);
    }
    return w.str();
}

// Water-filling allocation for a drawn channel at the configured targets.
inline allocator::AllocationResult solve_allocation(const ExperimentConfig& cfg,
                                                    allocator::AllocationProblem* problem_out = nullptr) {
    const auto ch = detail::draw_channel(cfg, 0);
    allocator::AllocationProblem p;
    p.kappas = ch.kappas;
    p.gammas = ch.gamma;
    p.d = cfg.d;
    p.s = cfg.s;
    p.grad_bound = cfg.grad_bound;
    p.lambda = cfg.lambda;
    p.T = cfg.T;
    p.eps_targets.assign(static_cast<std::size_t>(cfg.n), cfg.eps_target);
    p.delta_t = cfg.delta_t;
    p.eps_jl = cfg.eps_jl;
    p.a = cfg.a;
    p.c = ch.c;
    p.sigma2 = cfg.sigma2_channel;
    p.r_cap = cfg.r_cap;
    if (problem_out) *problem_out = p;
    return allocator::solve(p);
}

inline std::string allocation_csv(const ExperimentConfig& cfg) {
    allocator::AllocationProblem problem;
    const auto res = solve_allocation(cfg, &problem);
    csv::Writer w;
    cfg.echo_into(w);
    const std::string hash = cfg.fingerprint();
    w.header({"config_hash", "client", "kappa", "gamma", "zeta_star", "omega", "r_star",
              "r_argmin", "omega_level", "objective", "objective_argmin", "feasible", "r_min",
              "r_max_searched"});
    for (int i = 0; i < problem.clients(); ++i) {
        w.row()
            .add(hash)
            .add(i)
            .add(problem.kappas[static_cast<std::size_t>(i)])
            .add(problem.gammas[static_cast<std::size_t>(i)])
            .add(res.feasible ? res.zeta_star[static_cast<std::size_t>(i)] : 0.0)
            .add(res.feasible ? res.omegas[static_cast<std::size_t>(i)] : 0.0)
            .add(res.r_star)
            .add(res.r_argmin)
            .add(res.omega_level)
            .add(res.objective)
            .add(res.objective_argmin)
            .add(res.feasible ? 1 : 0)
            .add(res.r_min)
            .add(res.r_max_searched);
    }
    return w.str();
}

// Training run to a trace CSV.
inline std::string simulate_csv(const ExperimentConfig& cfg) {
    trainer::SyntheticTask task(cfg.n, cfg.d, cfg.m_per_client, cfg.lambda, cfg.seed,
                                cfg.task_scale);
    trainer::TrainConfig tc;
    tc.r = cfg.sim_r;
    tc.T = cfg.T;
    tc.kind = cfg.kind();
    tc.seed = cfg.seed;
    tc.channel_mode = cfg.channel_mode == "iid" ? trainer::ChannelMode::kIid
                                                : trainer::ChannelMode::kStatic;
    tc.power = cfg.power;
    tc.zeta_rule = cfg.zeta_uniform < 0.0 ? trainer::ZetaRule::kLeftover
                                          : trainer::ZetaRule::kUniformCapped;
    tc.zeta_value = cfg.zeta_uniform;
    tc.grad_clip = cfg.grad_bound;
    tc.sigma2_channel = cfg.sigma2_channel;
    tc.delta_t = cfg.delta_t;
    tc.delta_prime = cfg.delta_prime;
    tc.eps_jl = cfg.eps_jl;
    const auto trace = trainer::run(task, tc);

    csv::Writer w;
    cfg.echo_into(w);
    w.comment("smoothness_true=" + csv::format_double(trace.smoothness_true));
    w.comment("grad_clip_bound=" + csv::format_double(cfg.grad_bound));
    w.comment("clip_enforces_grad_norm_assumption=1");
    const std::string hash = cfg.fingerprint();
    w.header({"config_hash", "iteration", "gap", "bound", "epsilon_spent"});
    for (std::size_t t = 0; t < trace.gap.size(); ++t) {
        w.row()
            .add(hash)
            .add(static_cast<int>(t + 1))
            .add(trace.gap[t])
            .add(trace.bound[t])
            .add(trace.eps_spent[t]);
    }
    return w.str();
}

}  // namespace dprp::experiment
