#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "dprp/csv.hpp"
#include "dprp/projection.hpp"
#include "dprp/rng.hpp"
#include "dprp/trainer.hpp"

namespace dprp::experiment {

// Everything a sweep or a training run needs, with the defaults of the
// standard scenario. Values are echoed into output headers and hashed into
// every CSV row so a file pins down the exact run that produced it.
struct ExperimentConfig {
    std::string scenario = "default";
    int n = 1000;
    int d = 10000;
    int T = 1000;
    double lambda = 0.001;
    double grad_bound = 1.0;  // L
    double power = 1.0;       // P_i, uniform
    double delta_t = 5e-5;
    double delta_prime = 5e-5;
    int s = 1;                // Achlioptas sparsity; 1 = Rademacher
    double eps_jl = 0.5;
    double a = 1.0;
    double sigma2_channel = 1.0;
    std::string channel_mode = "static";  // static | iid
    std::uint64_t seed = 1;
    int draws = 1;  // channel draws per sweep point (mean/stderr when > 1)

    // r-grid for dimension sweeps.
    int r_min = 100;
    int r_max = 10000;
    int r_step = 100;

    // epsilon grid for the trade-off sweep.
    double eps_min = 0.1;
    double eps_max = 10.0;
    int eps_points = 50;
    int tradeoff_r = 1000;

    // trainer settings
    int m_per_client = 5;
    int sim_r = 25;
    double zeta_uniform = -1.0;  // < 0: use all leftover power 1 - gamma_i
    double task_scale = 0.4;     // data-matrix scale; keeps smoothness near the clip

    // allocator settings
    double eps_target = 1.0;  // per-client T-fold budget
    int r_cap = 0;

    projection::DistributionKind kind() const {
        return s <= 1 ? projection::DistributionKind::rademacher()
                      : projection::DistributionKind::achlioptas(s);
    }

    // Canonical key=value view, sorted by key; used for echoing into file
    // headers and for the fingerprint.
    std::map<std::string, std::string> items() const {
        std::map<std::string, std::string> kv;
        kv["scenario"] = scenario;
        kv["n"] = std::to_string(n);
        kv["d"] = std::to_string(d);
        kv["T"] = std::to_string(T);
        kv["lambda"] = csv::format_double(lambda);
        kv["grad_bound"] = csv::format_double(grad_bound);
        kv["power"] = csv::format_double(power);
        kv["delta_t"] = csv::format_double(delta_t);
        kv["delta_prime"] = csv::format_double(delta_prime);
        kv["s"] = std::to_string(s);
        kv["eps_jl"] = csv::format_double(eps_jl);
        kv["a"] = csv::format_double(a);
        kv["sigma2_channel"] = csv::format_double(sigma2_channel);
        kv["channel_mode"] = channel_mode;
        kv["seed"] = std::to_string(seed);
        kv["draws"] = std::to_string(draws);
        kv["r_min"] = std::to_string(r_min);
        kv["r_max"] = std::to_string(r_max);
        kv["r_step"] = std::to_string(r_step);
        kv["eps_min"] = csv::format_double(eps_min);
        kv["eps_max"] = csv::format_double(eps_max);
        kv["eps_points"] = std::to_string(eps_points);
        kv["tradeoff_r"] = std::to_string(tradeoff_r);
        kv["m_per_client"] = std::to_string(m_per_client);
        kv["sim_r"] = std::to_string(sim_r);
        kv["task_scale"] = csv::format_double(task_scale);
        kv["zeta_uniform"] = csv::format_double(zeta_uniform);
        kv["eps_target"] = csv::format_double(eps_target);
        kv["r_cap"] = std::to_string(r_cap);
        return kv;
    }

    // FNV-1a over the canonical serialization, folded through the mixer.
    std::string fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto eat = [&h](const std::string& sv) {
            for (unsigned char ch : sv) {
                h ^= ch;
                h *= 0x100000001b3ULL;
            }
        };
        for (const auto& [k, v] : items()) {
            eat(k);
            eat("=");
            eat(v);
            eat("\n");
        }
        return csv::format_u64_hex(rng::mix64(h));
    }

    void echo_into(csv::Writer& w) const {
        for (const auto& [k, v] : items()) w.comment(k + "=" + v);
    }
};

namespace detail {

template <typename T>
bool parse_number(const std::string& text, T& out) {
    try {
        std::size_t pos = 0;
        if constexpr (std::is_same_v<T, double>) {
            out = std::stod(text, &pos);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            out = std::stoull(text, &pos);
        } else {
            const long long v = std::stoll(text, &pos);
            out = static_cast<T>(v);
            if (static_cast<long long>(out) != v) return false;
        }
        return pos == text.size();
    } catch (...) {
        return false;
    }
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// Assigns one configuration key from its textual form; returns false for
// unconvertible values, throws for unknown keys.
inline bool assign_config_key(ExperimentConfig& cfg, const std::string& key,
                              const std::string& value) {
    if (key == "scenario") { cfg.scenario = value; return true; }
    if (key == "channel_mode") {
        if (value != "static" && value != "iid") return false;
        cfg.channel_mode = value;
        return true;
    }
    if (key == "n") return detail::parse_number(value, cfg.n);
    if (key == "d") return detail::parse_number(value, cfg.d);
    if (key == "T") return detail::parse_number(value, cfg.T);
    if (key == "lambda") return detail::parse_number(value, cfg.lambda);
    if (key == "grad_bound") return detail::parse_number(value, cfg.grad_bound);
    if (key == "power") return detail::parse_number(value, cfg.power);
    if (key == "delta_t") return detail::parse_number(value, cfg.delta_t);
    if (key == "delta_prime") return detail::parse_number(value, cfg.delta_prime);
    if (key == "s") return detail::parse_number(value, cfg.s);
    if (key == "eps_jl") return detail::parse_number(value, cfg.eps_jl);
    if (key == "a") return detail::parse_number(value, cfg.a);
    if (key == "sigma2_channel") return detail::parse_number(value, cfg.sigma2_channel);
    if (key == "seed") return detail::parse_number(value, cfg.seed);
    if (key == "draws") return detail::parse_number(value, cfg.draws);
    if (key == "r_min") return detail::parse_number(value, cfg.r_min);
    if (key == "r_max") return detail::parse_number(value, cfg.r_max);
    if (key == "r_step") return detail::parse_number(value, cfg.r_step);
    if (key == "eps_min") return detail::parse_number(value, cfg.eps_min);
    if (key == "eps_max") return detail::parse_number(value, cfg.eps_max);
    if (key == "eps_points") return detail::parse_number(value, cfg.eps_points);
    if (key == "tradeoff_r") return detail::parse_number(value, cfg.tradeoff_r);
    if (key == "m_per_client") return detail::parse_number(value, cfg.m_per_client);
    if (key == "sim_r") return detail::parse_number(value, cfg.sim_r);
    if (key == "task_scale") return detail::parse_number(value, cfg.task_scale);
    if (key == "zeta_uniform") return detail::parse_number(value, cfg.zeta_uniform);
    if (key == "eps_target") return detail::parse_number(value, cfg.eps_target);
    if (key == "r_cap") return detail::parse_number(value, cfg.r_cap);
    throw std::runtime_error("unknown key '" + key + "'");
}

// Key=value configuration file: '#' comments and blank lines allowed, keys
// as in ExperimentConfig::items() (an emitted CSV header is reusable as a
// config). Keys named in `locked` are skipped, so command-line flags win.
// Errors carry file/line/field diagnostics.
inline void apply_config_file(ExperimentConfig& cfg, const std::string& path,
                              const std::set<std::string>& locked = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = line;
        const auto hash = body.find('#');
        if (hash != std::string::npos) body = body.substr(0, hash);
        body = detail::trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        const std::string where = path + ":" + std::to_string(lineno);
        if (eq == std::string::npos)
            throw std::runtime_error("config " + where + ": expected key=value, got '" + body + "'");
        const std::string key = detail::trim(body.substr(0, eq));
        const std::string value = detail::trim(body.substr(eq + 1));
        if (key.empty()) throw std::runtime_error("config " + where + ": empty key");
        if (locked.count(key)) continue;
        try {
            if (!assign_config_key(cfg, key, value))
                throw std::runtime_error("invalid value '" + value + "' for key '" + key + "'");
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("config " + where + ": " + e.what());
        }
    }
}

// The numerical scenario of record: 1000 clients, model dimension 10^4,
// 1000 iterations, unit power, per-iteration delta = delta' = 5e-5,
// Rayleigh-faded static channel.
inline ExperimentConfig paper_preset() {
    ExperimentConfig cfg;
    cfg.scenario = "paper";
    cfg.n = 1000;
    cfg.d = 10000;
    cfg.T = 1000;
    cfg.lambda = 0.001;
    cfg.power = 1.0;
    cfg.delta_t = 5e-5;
    cfg.delta_prime = 5e-5;
    cfg.s = 1;
    return cfg;
}

}  // namespace dprp::experiment
