#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dprp/config.hpp"
#include "dprp/sweeps.hpp"

using namespace dprp;
using experiment::ExperimentConfig;

namespace {

// tiny CSV reader for the emitted tables
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw std::runtime_error("column not found: " + name);
    }
    double num(std::size_t row, const std::string& name) const {
        return std::stod(rows[row][static_cast<std::size_t>(col(name))]);
    }
};

Table parse_csv(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (t.header.empty())
            t.header = std::move(cells);
        else
            t.rows.push_back(std::move(cells));
    }
    return t;
}

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.scenario = "test";
    cfg.n = 50;
    cfg.d = 500;
    cfg.T = 100;
    cfg.lambda = 0.01;
    cfg.r_min = 5;
    cfg.r_max = 500;
    cfg.r_step = 5;
    cfg.seed = 42;
    return cfg;
}

}  // namespace

TEST_CASE("fingerprint is stable and sensitive") {
    const ExperimentConfig a = small_config();
    ExperimentConfig b = small_config();
    REQUIRE(a.fingerprint() == b.fingerprint());
    b.seed = 43;
    REQUIRE(a.fingerprint() != b.fingerprint());
}

TEST_CASE("sweeps are byte-identical across runs") {
    const auto cfg = small_config();
    REQUIRE(experiment::sweep_ldp(cfg) == experiment::sweep_ldp(cfg));
    REQUIRE(experiment::sweep_convergence(cfg) == experiment::sweep_convergence(cfg));
    REQUIRE(experiment::sweep_tradeoff(cfg) == experiment::sweep_tradeoff(cfg));
    REQUIRE(experiment::allocation_csv(cfg) == experiment::allocation_csv(cfg));
}

TEST_CASE("every row carries the config fingerprint") {
    const auto cfg = small_config();
    const auto t = parse_csv(experiment::sweep_ldp(cfg));
    REQUIRE(!t.rows.empty());
    for (const auto& row : t.rows) REQUIRE(row[0] == cfg.fingerprint());
}

TEST_CASE("ldp sweep shows the crossover and matches the threshold") {
    const auto cfg = small_config();
    const auto t = parse_csv(experiment::sweep_ldp(cfg));

    // reconstruct the channel exactly as the sweep does
    const auto ch = experiment::detail::draw_channel(cfg, 0);
    std::vector<double> beta_kappas(ch.kappas.size());
    for (std::size_t i = 0; i < ch.kappas.size(); ++i)
        beta_kappas[i] = ch.zeta[i] * ch.kappas[i];
    const auto th = privacy::crossover_r(beta_kappas, beta_kappas, cfg.d, cfg.sigma2_channel,
                                         cfg.delta_prime, cfg.s, cfg.eps_jl);

    int last_win_r = -1;
    bool any_win = false;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double dprp = t.num(i, "eps_total_jl");
        const double base = t.num(i, "eps_total_baseline");
        const int r = static_cast<int>(t.num(i, "r"));
        if (dprp < base) {
            any_win = true;
            last_win_r = r;
        }
    }
    REQUIRE(any_win);
    REQUIRE(std::abs(last_win_r - th.r_jl) <= cfg.r_step);
}

TEST_CASE("ldp sweep epsilon grows with r") {
    const auto cfg = small_config();
    const auto t = parse_csv(experiment::sweep_ldp(cfg));
    double prev = 0.0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double cur = t.num(i, "eps_total_jl");
        REQUIRE(cur > prev);
        prev = cur;
    }
}

TEST_CASE("long-format privacy report carries regimes and tails") {
    auto cfg = small_config();
    cfg.r_max = 30;
    const auto t = parse_csv(experiment::ldp_report_csv(cfg));
    REQUIRE(t.rows.size() % 3 == 0);  // jl, general, baseline per grid point
    const int regime_col = t.col("regime");
    const double tail_jl = privacy::jl_tail_term(cfg.n, cfg.a, cfg.T);
    const double tail_general = privacy::general_tail_term(cfg.delta_prime, cfg.T);
    for (std::size_t i = 0; i < t.rows.size(); i += 3) {
        REQUIRE(t.rows[i][static_cast<std::size_t>(regime_col)] == "jl");
        const auto& general_regime = t.rows[i + 1][static_cast<std::size_t>(regime_col)];
        REQUIRE((general_regime == "general_sqrt" || general_regime == "general_linear"));
        REQUIRE(t.rows[i + 2][static_cast<std::size_t>(regime_col)] == "baseline");
        REQUIRE(t.num(i, "eps_total") ==
                Catch::Approx(cfg.T * t.num(i, "eps_iter")).epsilon(1e-12));
        REQUIRE(t.num(i, "delta_total") ==
                Catch::Approx(cfg.T * cfg.delta_t + tail_jl).epsilon(1e-12));
        REQUIRE(t.num(i + 1, "delta_total") ==
                Catch::Approx(cfg.T * cfg.delta_t + tail_general).epsilon(1e-12));
        REQUIRE(t.num(i + 2, "delta_total") == Catch::Approx(cfg.T * cfg.delta_t).epsilon(1e-12));
    }
}

TEST_CASE("multi-draw ldp sweep emits finite bands") {
    auto cfg = small_config();
    cfg.draws = 4;
    cfg.r_max = 50;
    const auto t = parse_csv(experiment::sweep_ldp(cfg));
    REQUIRE(t.col("eps_total_jl_stderr") >= 0);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        REQUIRE(t.num(i, "eps_total_jl_mean") > 0.0);
        REQUIRE(t.num(i, "eps_total_jl_stderr") >= 0.0);
    }
}

TEST_CASE("convergence sweep dominates the baseline and decreases in r") {
    const auto cfg = small_config();
    const auto t = parse_csv(experiment::sweep_convergence(cfg));
    double prev_rademacher = 1e300;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        REQUIRE(t.num(i, "xi_bound") >= t.num(i, "baseline_bound"));
        if (t.rows[i][static_cast<std::size_t>(t.col("kind"))] == "rademacher") {
            const double cur = t.num(i, "xi_bound");
            REQUIRE(cur < prev_rademacher);
            prev_rademacher = cur;
        }
    }
}

TEST_CASE("tradeoff sweep matches direct substitution and its limit") {
    ExperimentConfig cfg = small_config();
    cfg.n = 100;
    cfg.T = 200;
    cfg.s = 2;
    cfg.tradeoff_r = 50;
    cfg.eps_min = 2.0;
    cfg.eps_max = 2.0;
    cfg.eps_points = 1;
    auto t = parse_csv(experiment::sweep_tradeoff(cfg));
    REQUIRE(t.rows.size() == 1);
    REQUIRE(t.num(0, "term_gradient") == Catch::Approx(1100.0).epsilon(1e-12));
    REQUIRE(t.num(0, "term_noise") == Catch::Approx(6075978.6623102027).epsilon(1e-12));
    REQUIRE(t.num(0, "baseline_bound") == Catch::Approx(4050752.4415401351).epsilon(1e-12));

    // huge budgets: ratio tends to the first-term ratio 1 + (d+s-2)/r
    cfg.eps_min = 1e9;
    cfg.eps_max = 1e9;
    t = parse_csv(experiment::sweep_tradeoff(cfg));
    const double ratio = t.num(0, "xi_bound") / t.num(0, "baseline_bound");
    REQUIRE(ratio == Catch::Approx(1.0 + 500.0 / 50.0).epsilon(1e-9));
}

TEST_CASE("allocation csv is consistent with the solver") {
    auto cfg = small_config();
    cfg.eps_target = 30.0;
    cfg.r_cap = 300;
    const auto res = experiment::solve_allocation(cfg);
    const auto t = parse_csv(experiment::allocation_csv(cfg));
    REQUIRE(static_cast<int>(t.rows.size()) == cfg.n);
    REQUIRE(static_cast<int>(t.num(0, "r_star")) == res.r_star);
    REQUIRE(static_cast<int>(t.num(0, "feasible")) == (res.feasible ? 1 : 0));
}

TEST_CASE("simulate trace has the advertised shape") {
    ExperimentConfig cfg;
    cfg.scenario = "sim-test";
    cfg.n = 4;
    cfg.d = 16;
    cfg.T = 20;
    cfg.lambda = 0.2;
    cfg.m_per_client = 3;
    cfg.sim_r = 8;
    cfg.seed = 11;
    cfg.zeta_uniform = 0.2;
    const auto text = experiment::simulate_csv(cfg);
    REQUIRE(text == experiment::simulate_csv(cfg));
    const auto t = parse_csv(text);
    REQUIRE(t.rows.size() == 20);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        REQUIRE(t.num(i, "iteration") == static_cast<double>(i + 1));
        REQUIRE(t.num(i, "gap") >= 0.0);
        REQUIRE(t.num(i, "bound") > 0.0);
        REQUIRE(t.num(i, "epsilon_spent") > 0.0);
    }
}

TEST_CASE("paper preset pins the scenario constants") {
    const auto cfg = experiment::paper_preset();
    REQUIRE(cfg.n == 1000);
    REQUIRE(cfg.d == 10000);
    REQUIRE(cfg.T == 1000);
    REQUIRE(cfg.lambda == 0.001);
    REQUIRE(cfg.power == 1.0);
    REQUIRE(cfg.delta_t == 5e-5);
    REQUIRE(cfg.delta_prime == 5e-5);
}
