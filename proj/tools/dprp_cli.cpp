// dprp: private projected federated SGD over a noisy multiple-access
// channel. Subcommands emit deterministic CSV; `verify` runs the Monte
// Carlo check suite and exits nonzero on any failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dprp/dprp.hpp"

namespace {

using dprp::experiment::ExperimentConfig;

// config-file key of each option, used to give command-line flags
// precedence over file values and preset values
const std::vector<std::pair<std::string, std::string>> kKeyByOption = {
    {"--scenario", "scenario"},   {"--clients", "n"},
    {"--dimension", "d"},         {"--iterations", "T"},
    {"--lambda", "lambda"},       {"--grad-bound", "grad_bound"},
    {"--power", "power"},         {"--delta", "delta_t"},
    {"--delta-prime", "delta_prime"}, {"--sparsity", "s"},
    {"--eps-jl", "eps_jl"},       {"--jl-a", "a"},
    {"--sigma2", "sigma2_channel"}, {"--channel-mode", "channel_mode"},
    {"--seed", "seed"},           {"--draws", "draws"},
    {"--zeta", "zeta_uniform"},   {"--r-min", "r_min"},
    {"--r-max", "r_max"},         {"--r-step", "r_step"},
    {"--eps-min", "eps_min"},     {"--eps-max", "eps_max"},
    {"--eps-points", "eps_points"}, {"--samples", "m_per_client"},
    {"--eps-target", "eps_target"}, {"--r-cap", "r_cap"},
    {"--task-scale", "task_scale"},
};

void add_common_options(CLI::App* cmd, ExperimentConfig& cfg, std::string& out_path,
                        std::string& config_path, bool& use_paper_preset) {
    cmd->add_option("--config", config_path,
                    "Key=value file with ExperimentConfig keys; flags override it");
    cmd->add_flag("--preset-paper", use_paper_preset,
                  "Start from the standard scenario (n=1000, d=10000, T=1000, lambda=0.001, "
                  "P=1, delta=delta'=5e-5)");
    cmd->add_option("--scenario", cfg.scenario, "Scenario label echoed into outputs");
    cmd->add_option("-n,--clients", cfg.n, "Number of clients");
    cmd->add_option("-d,--dimension", cfg.d, "Model dimension");
    cmd->add_option("-T,--iterations", cfg.T, "Training iterations");
    cmd->add_option("--lambda", cfg.lambda, "Strong-convexity constant");
    cmd->add_option("-L,--grad-bound", cfg.grad_bound, "Gradient norm bound / clip");
    cmd->add_option("--power", cfg.power, "Per-client transmit power P_i");
    cmd->add_option("--delta", cfg.delta_t, "Per-iteration delta");
    cmd->add_option("--delta-prime", cfg.delta_prime, "Sensitivity failure probability");
    cmd->add_option("-s,--sparsity", cfg.s, "Projection sparsity (1 = Rademacher)");
    cmd->add_option("--eps-jl", cfg.eps_jl, "JL distortion parameter");
    cmd->add_option("--jl-a", cfg.a, "JL confidence exponent");
    cmd->add_option("--sigma2", cfg.sigma2_channel, "Channel-noise variance");
    cmd->add_option("--channel-mode", cfg.channel_mode, "static | iid")
        ->check(CLI::IsMember({"static", "iid"}));
    cmd->add_option("--seed", cfg.seed, "Root seed");
    cmd->add_option("--draws", cfg.draws, "Channel draws per sweep point");
    cmd->add_option("--zeta", cfg.zeta_uniform,
                    "Uniform noise fraction (negative: all leftover power)");
    cmd->add_option("-o,--out", out_path, "Output file (default stdout)");
}

void add_grid_options(CLI::App* cmd, ExperimentConfig& cfg) {
    cmd->add_option("--r-min", cfg.r_min, "Smallest reduced dimension");
    cmd->add_option("--r-max", cfg.r_max, "Largest reduced dimension");
    cmd->add_option("--r-step", cfg.r_step, "Grid step");
}

// keys the user pinned on the command line of the parsed subcommand
std::set<std::string> cli_locked_keys(const CLI::App& app, bool sim_parsed, bool trade_parsed) {
    std::set<std::string> locked;
    for (const auto* sub : app.get_subcommands()) {
        for (const auto& [opt_name, key] : kKeyByOption) {
            const auto* opt = sub->get_option_no_throw(opt_name);
            if (opt && opt->count() > 0) locked.insert(key);
        }
        const auto* rdim = sub->get_option_no_throw("--reduced-dim");
        if (rdim && rdim->count() > 0) {
            if (sim_parsed) locked.insert("sim_r");
            if (trade_parsed) locked.insert("tradeoff_r");
        }
    }
    return locked;
}

int write_output(const std::string& payload, const std::string& out_path) {
    if (out_path.empty()) {
        std::fwrite(payload.data(), 1, payload.size(), stdout);
        return 0;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) {
        std::cerr << "error: cannot open " << out_path << "\n";
        return 2;
    }
    f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    return f ? 0 : 2;
}

std::string allocation_json(const ExperimentConfig& cfg) {
    dprp::allocator::AllocationProblem problem;
    const auto res = dprp::experiment::solve_allocation(cfg, &problem);
    nlohmann::ordered_json j;
    j["config_hash"] = cfg.fingerprint();
    for (const auto& [k, v] : cfg.items()) j["config"][k] = v;
    j["feasible"] = res.feasible;
    j["r_star"] = res.r_star;
    j["r_argmin"] = res.r_argmin;
    j["omega_level"] = res.omega_level;
    j["objective"] = res.objective;
    j["objective_argmin"] = res.objective_argmin;
    j["r_min"] = res.r_min;
    j["r_max_searched"] = res.r_max_searched;
    j["kappa"] = problem.kappas;
    j["gamma"] = problem.gammas;
    j["zeta_star"] = res.zeta_star;
    j["omega"] = res.omegas;
    return j.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DPRP-FedSGD simulator and bound calculators"};
    app.require_subcommand(1);

    ExperimentConfig cli_cfg;
    std::string out_path;
    std::string config_path;
    bool use_paper_preset = false;

    auto* sim = app.add_subcommand("simulate", "Run the training loop on the synthetic task");
    add_common_options(sim, cli_cfg, out_path, config_path, use_paper_preset);
    sim->add_option("-r,--reduced-dim", cli_cfg.sim_r, "Reduced dimension for the run");
    sim->add_option("-m,--samples", cli_cfg.m_per_client, "Samples per client");
    sim->add_option("--task-scale", cli_cfg.task_scale, "Synthetic data matrix scale");

    auto* ldp = app.add_subcommand("ldp-curve", "T-fold LDP against the reduced dimension");
    add_common_options(ldp, cli_cfg, out_path, config_path, use_paper_preset);
    add_grid_options(ldp, cli_cfg);
    bool ldp_long = false;
    ldp->add_flag("--long-format", ldp_long,
                  "One row per (r, regime) instead of the wide figure format");

    auto* conv = app.add_subcommand("conv-curve", "Convergence bound against the reduced dimension");
    add_common_options(conv, cli_cfg, out_path, config_path, use_paper_preset);
    add_grid_options(conv, cli_cfg);

    auto* trade = app.add_subcommand("tradeoff", "Convergence bound against the privacy budget");
    add_common_options(trade, cli_cfg, out_path, config_path, use_paper_preset);
    trade->add_option("--eps-min", cli_cfg.eps_min, "Smallest total epsilon");
    trade->add_option("--eps-max", cli_cfg.eps_max, "Largest total epsilon");
    trade->add_option("--eps-points", cli_cfg.eps_points, "Grid points (geometric)");
    trade->add_option("-r,--reduced-dim", cli_cfg.tradeoff_r, "Reduced dimension of the scheme");

    auto* alloc = app.add_subcommand("allocate", "Water-filling noise/dimension allocation");
    add_common_options(alloc, cli_cfg, out_path, config_path, use_paper_preset);
    alloc->add_option("--eps-target", cli_cfg.eps_target, "Per-client T-fold budget");
    alloc->add_option("--r-cap", cli_cfg.r_cap, "Search cap on r (0 = d)");
    std::string alloc_format = "csv";
    alloc->add_option("--format", alloc_format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* verify = app.add_subcommand("verify", "Run the Monte Carlo verification suite");
    std::uint64_t verify_seed = 1;
    bool verify_quick = false;
    double corrupt_scale = 1.0;
    verify->add_option("--seed", verify_seed, "Root seed for the checks");
    verify->add_flag("--quick", verify_quick, "Reduced trial counts");
    verify
        ->add_option("--corrupt-tolerance", corrupt_scale,
                     "Debug: scale all tolerances (tiny values force failures)")
        ->default_val(1.0);

    CLI11_PARSE(app, argc, argv);

    // precedence: command line > config file > preset > defaults
    ExperimentConfig cfg = use_paper_preset ? dprp::experiment::paper_preset() : ExperimentConfig{};
    const auto locked = cli_locked_keys(app, sim->parsed(), trade->parsed());
    try {
        if (!config_path.empty()) dprp::experiment::apply_config_file(cfg, config_path, locked);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    {
        // copy the flag-pinned values over file/preset ones
        ExperimentConfig merged = cfg;
        auto take = [&](const std::string& key, auto member) {
            if (locked.count(key)) merged.*member = cli_cfg.*member;
        };
        take("scenario", &ExperimentConfig::scenario);
        take("n", &ExperimentConfig::n);
        take("d", &ExperimentConfig::d);
        take("T", &ExperimentConfig::T);
        take("lambda", &ExperimentConfig::lambda);
        take("grad_bound", &ExperimentConfig::grad_bound);
        take("power", &ExperimentConfig::power);
        take("delta_t", &ExperimentConfig::delta_t);
        take("delta_prime", &ExperimentConfig::delta_prime);
        take("s", &ExperimentConfig::s);
        take("eps_jl", &ExperimentConfig::eps_jl);
        take("a", &ExperimentConfig::a);
        take("sigma2_channel", &ExperimentConfig::sigma2_channel);
        take("channel_mode", &ExperimentConfig::channel_mode);
        take("seed", &ExperimentConfig::seed);
        take("draws", &ExperimentConfig::draws);
        take("zeta_uniform", &ExperimentConfig::zeta_uniform);
        take("r_min", &ExperimentConfig::r_min);
        take("r_max", &ExperimentConfig::r_max);
        take("r_step", &ExperimentConfig::r_step);
        take("eps_min", &ExperimentConfig::eps_min);
        take("eps_max", &ExperimentConfig::eps_max);
        take("eps_points", &ExperimentConfig::eps_points);
        take("m_per_client", &ExperimentConfig::m_per_client);
        take("sim_r", &ExperimentConfig::sim_r);
        take("task_scale", &ExperimentConfig::task_scale);
        take("tradeoff_r", &ExperimentConfig::tradeoff_r);
        take("eps_target", &ExperimentConfig::eps_target);
        take("r_cap", &ExperimentConfig::r_cap);
        cfg = merged;
    }

    try {
        if (sim->parsed()) return write_output(dprp::experiment::simulate_csv(cfg), out_path);
        if (ldp->parsed())
            return write_output(ldp_long ? dprp::experiment::ldp_report_csv(cfg)
                                         : dprp::experiment::sweep_ldp(cfg),
                                out_path);
        if (conv->parsed()) return write_output(dprp::experiment::sweep_convergence(cfg), out_path);
        if (trade->parsed()) return write_output(dprp::experiment::sweep_tradeoff(cfg), out_path);
        if (alloc->parsed()) {
            const std::string payload = alloc_format == "json"
                                            ? allocation_json(cfg)
                                            : dprp::experiment::allocation_csv(cfg);
            return write_output(payload, out_path);
        }
        if (verify->parsed()) {
            dprp::verification::VerifyOptions opt;
            opt.seed = verify_seed;
            opt.quick = verify_quick;
            opt.tolerance_scale = corrupt_scale;
            const auto results = dprp::verification::run_all_checks(opt);
            int failures = 0;
            for (const auto& r : results) {
                std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  " << r.detail << "\n";
                failures += r.pass ? 0 : 1;
            }
            std::cout << (failures == 0 ? "all checks passed" : "checks FAILED") << " ("
                      << results.size() - failures << "/" << results.size() << ")\n";
            return failures == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
