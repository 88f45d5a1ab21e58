// The verification suite must pass across root seeds, and the corrupted
// tolerance hook must exercise the failure path.

#include <cstdio>

#include "dprp/verification.hpp"

int main() {
    using dprp::verification::run_all_checks;
    using dprp::verification::VerifyOptions;

    int bad = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        VerifyOptions opt;
        opt.seed = seed;
        opt.quick = true;
        int failures = 0;
        for (const auto& r : run_all_checks(opt)) {
            if (!r.pass) {
                ++failures;
                std::printf("seed %llu FAIL %s  %s\n",
                            static_cast<unsigned long long>(seed), r.name.c_str(),
                            r.detail.c_str());
            }
        }
        std::printf("seed %llu: %s\n", static_cast<unsigned long long>(seed),
                    failures == 0 ? "all checks passed" : "FAILED");
        bad += failures;
    }

    VerifyOptions corrupt;
    corrupt.seed = 1;
    corrupt.quick = true;
    corrupt.tolerance_scale = 1e-3;
    int corrupt_failures = 0;
    for (const auto& r : run_all_checks(corrupt))
        if (!r.pass) ++corrupt_failures;
    std::printf("corrupted tolerances: %d checks failed (expected > 0)\n", corrupt_failures);
    if (corrupt_failures == 0) ++bad;

    return bad == 0 ? 0 : 1;
}
