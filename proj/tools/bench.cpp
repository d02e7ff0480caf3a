// Benchmark: serial vs. OpenMP-parallel application of the grid Bellman
// operator, at several resolutions.  Also cross-checks that both variants
// produce identical tables, cell for cell.
//
// Usage: bench [problem.json] [sweeps]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "persuade/oracle.hpp"
#include "persuade/policy.hpp"
#include "persuade/problem.hpp"

using namespace persuade;
using Clock = std::chrono::steady_clock;

namespace {

double time_sweeps(const Analysis& an, Grid g, int sweeps, bool parallel, Grid* out) {
    const auto t0 = Clock::now();
    for (int s = 0; s < sweeps; ++s) g = bellman_apply(an, g, nullptr, parallel);
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    if (out) *out = std::move(g);
    return dt;
}

double max_cell_diff(const Grid& a, const Grid& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.V.size(); ++i)
        for (std::size_t j = 0; j < a.V[i].size(); ++j)
            worst = std::max(worst, std::abs(a.V[i][j] - b.V[i][j]));
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string path = argc > 1 ? argv[1] : std::string(PROBLEMS_DIR "/three_action.json");
    const int sweeps = argc > 2 ? std::atoi(argv[2]) : 20;
    if (sweeps <= 0) {
        std::fprintf(stderr, "sweeps must be positive\n");
        return 1;
    }

    Analysis an;
    try {
        an = analyze(load_problem(path));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
#ifdef _OPENMP
    std::printf("problem: %s, sweeps per run: %d, OpenMP threads: %d\n", path.c_str(), sweeps,
                omp_get_max_threads());
#else
    std::printf("problem: %s, sweeps per run: %d, OpenMP: off\n", path.c_str(), sweeps);
#endif
    std::printf("%8s %8s %12s %12s %9s %11s\n", "np", "nw", "serial (s)", "openmp (s)",
                "speedup", "max |diff|");

    const std::size_t shapes[][2] = {{64, 24}, {128, 40}, {256, 64}};
    for (const auto& sh : shapes) {
        const Grid base = make_grid(an, sh[0], sh[1]);
        Grid gs, gp;
        const double ts = time_sweeps(an, base, sweeps, /*parallel=*/false, &gs);
        const double tp = time_sweeps(an, base, sweeps, /*parallel=*/true, &gp);
        const double diff = max_cell_diff(gs, gp);
        std::printf("%8zu %8zu %12.3f %12.3f %8.2fx %11.3g\n", sh[0], sh[1], ts, tp, ts / tp,
                    diff);
        if (diff != 0.0) {
            std::fprintf(stderr, "serial and parallel sweeps disagree\n");
            return 1;
        }
    }
    return 0;
}
