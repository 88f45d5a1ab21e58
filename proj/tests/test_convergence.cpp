#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "dprp/convergence.hpp"

using namespace dprp;
using convergence::LossProfile;
using convergence::RoundParams;
using projection::DistributionKind;

TEST_CASE("rademacher equals achlioptas at sparsity one") {
    for (int r : {1, 3, 10, 100}) {
        const double a = convergence::second_moment_bound(DistributionKind::rademacher(), 50, r, 4,
                                                          0.7, 2.0, 1.0, 1.5);
        const double b = convergence::second_moment_bound(DistributionKind::achlioptas(1), 50, r, 4,
                                                          0.7, 2.0, 1.0, 1.5);
        REQUIRE(a == b);
    }
}

TEST_CASE("second moment direct substitution") {
    REQUIRE(convergence::second_moment_bound(DistributionKind::rademacher(), 6, 3, 3, 1.0, 0.0,
                                             0.0, 1.0) == Catch::Approx(8.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("gaussian exceeds rademacher by exactly 2 L^2 / r") {
    const double L = 1.3;
    for (int r : {2, 5, 20}) {
        const double g = convergence::second_moment_bound(DistributionKind::gaussian(), 40, r, 3,
                                                          1.0, 1.0, 1.0, L);
        const double rad = convergence::second_moment_bound(DistributionKind::rademacher(), 40, r,
                                                            3, 1.0, 1.0, 1.0, L);
        REQUIRE(g - rad == Catch::Approx(2.0 * L * L / r).epsilon(1e-12));
    }
}

TEST_CASE("bound over a single round") {
    const LossProfile profile(1.0, 0.5);
    const RoundParams p{6, 3, 3, 1.0, 0.0, 0.0};
    const auto rep = convergence::convergence_bound(DistributionKind::rademacher(), profile,
                                                    std::vector<RoundParams>{p});
    // 2 L M / lambda^2 with M = 8/3
    REQUIRE(rep.xi_bound == Catch::Approx(2.0 * (8.0 / 3.0) / 0.25).epsilon(1e-13));
    REQUIRE(rep.xi_bound == Catch::Approx(rep.term_gradient + rep.term_noise).epsilon(1e-15));
}

TEST_CASE("static rounds collapse to the averaged form") {
    const LossProfile profile(1.0, 0.1);
    const RoundParams p{20, 5, 4, 0.8, 0.5, 1.0};
    const int T = 37;
    const auto rep = convergence::convergence_bound(
        DistributionKind::achlioptas(2), profile, std::vector<RoundParams>(T, p));
    const double m = convergence::second_moment_bound(DistributionKind::achlioptas(2), 20, 5, 4,
                                                      0.8, 0.5, 1.0, 1.0);
    REQUIRE(rep.xi_bound == Catch::Approx(2.0 * m / (0.01 * T)).epsilon(1e-12));
    REQUIRE_THROWS_AS(
        convergence::convergence_bound(DistributionKind::rademacher(), profile, {}),
        std::invalid_argument);
}

TEST_CASE("bound monotonicity in r, d and the noise level") {
    const LossProfile profile(1.0, 0.01);
    double prev = 1e300;
    for (int r = 10; r <= 200; r += 10) {
        const RoundParams p{500, r, 10, 1.0, 10.0 / r, 1.0};
        const double cur = convergence::convergence_bound(DistributionKind::rademacher(), profile,
                                                          std::vector<RoundParams>(3, p))
                               .xi_bound;
        REQUIRE(cur < prev);
        prev = cur;
    }
    prev = 0.0;
    for (int d = 100; d <= 1000; d += 100) {
        const RoundParams p{d, 50, 10, 1.0, 0.2, 1.0};
        const double cur = convergence::convergence_bound(DistributionKind::rademacher(), profile,
                                                          std::vector<RoundParams>(3, p))
                               .xi_bound;
        REQUIRE(cur > prev);
        prev = cur;
    }
    prev = 0.0;
    for (double noise = 0.0; noise < 5.0; noise += 0.25) {
        const RoundParams p{100, 50, 10, 1.0, noise, 1.0};
        const double cur = convergence::convergence_bound(DistributionKind::rademacher(), profile,
                                                          std::vector<RoundParams>(3, p))
                               .xi_bound;
        REQUIRE(cur > prev);
        prev = cur;
    }
}

TEST_CASE("kind ordering dominates the baseline") {
    const LossProfile profile(1.2, 0.05);
    const RoundParams p{300, 40, 8, 0.9, 0.7, 1.0};
    const std::vector<RoundParams> rounds(5, p);
    const double gauss =
        convergence::convergence_bound(DistributionKind::gaussian(), profile, rounds).xi_bound;
    const double rad =
        convergence::convergence_bound(DistributionKind::rademacher(), profile, rounds).xi_bound;
    const double base = convergence::baseline_convergence_bound(profile, rounds);
    REQUIRE(gauss >= rad);
    REQUIRE(rad >= base);
}

TEST_CASE("trade-off bound direct substitution") {
    const LossProfile profile(1.0, 0.001);
    const auto b = convergence::utility_privacy_bound(profile, 10000, 500, 1, 1000, 1000, 10.0,
                                                      5e-5, 0.5);
    REQUIRE(b.term_gradient == Catch::Approx(41996.0).epsilon(1e-12));
    REQUIRE(b.term_noise == Catch::Approx(24303914.649240811).epsilon(1e-12));
    REQUIRE(b.total == Catch::Approx(41996.0 + 24303914.649240811).epsilon(1e-12));
}

TEST_CASE("trade-off first term doubles at r = d with s = 2") {
    const LossProfile profile(1.0, 0.01);
    const auto dprp = convergence::utility_privacy_bound(profile, 200, 200, 2, 50, 100, 1.0, 5e-5,
                                                         0.5);
    const auto base = convergence::baseline_utility_privacy_bound(profile, 200, 50, 100, 1.0, 5e-5);
    REQUIRE(dprp.term_gradient == Catch::Approx(2.0 * base.term_gradient).epsilon(1e-13));
}

TEST_CASE("trade-off collapses to the gradient term for huge budgets") {
    const LossProfile profile(1.0, 0.01);
    const auto b = convergence::utility_privacy_bound(profile, 200, 50, 1, 50, 100, 1e9, 5e-5, 0.5);
    REQUIRE(b.term_noise < 1e-12 * b.term_gradient);
    REQUIRE_THROWS_AS(
        convergence::utility_privacy_bound(profile, 200, 50, 1, 50, 100, 0.0, 5e-5, 0.5),
        std::invalid_argument);
}

TEST_CASE("trade-off bound is convex in T") {
    const LossProfile profile(1.0, 0.01);
    auto value = [&](int T) {
        return convergence::utility_privacy_bound(profile, 400, 60, 1, 50, T, 2.0, 5e-5, 0.5).total;
    };
    for (int T = 2; T < 400; ++T) {
        const double second_diff = value(T + 1) - 2.0 * value(T) + value(T - 1);
        REQUIRE(second_diff >= -1e-9);
    }
}

TEST_CASE("optimal horizon matches a grid scan") {
    const LossProfile profile(1.0, 0.05);
    const int d = 400, r = 60, s = 1, n = 50;
    const double eps_total = 2.0, delta_t = 5e-5, eps_jl = 0.5;
    const auto got = convergence::optimal_T(profile, d, r, s, n, eps_total, delta_t, eps_jl);
    double best_val = 1e300;
    std::int64_t best_T = 0;
    for (std::int64_t T = 1; T <= 1000000; ++T) {
        const double v =
            convergence::utility_privacy_bound(profile, d, r, s, n, static_cast<int>(T), eps_total,
                                               delta_t, eps_jl)
                .total;
        if (v < best_val) {
            best_val = v;
            best_T = T;
        }
    }
    REQUIRE(got == best_T);
}

TEST_CASE("optimal horizon saturates for infinite budgets") {
    const LossProfile profile(1.0, 0.05);
    REQUIRE(convergence::optimal_T(profile, 400, 60, 1, 50,
                                   std::numeric_limits<double>::infinity(), 5e-5, 0.5) ==
            convergence::kMaxHorizon);
}

TEST_CASE("profile validation") {
    REQUIRE_THROWS_AS(LossProfile(1.0, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(LossProfile(0.5, 1.0), std::invalid_argument);
}
