// Temporary solver exploration (deleted once real tests land).
#include "nehari/solver.hpp"
#include "nehari/reduction.hpp"

#include <chrono>
#include <cstdio>

using namespace nehari;

int main(int argc, char** argv) {
    const int kbase = argc > 1 ? std::atoi(argv[1]) : 1;
    auto t0 = std::chrono::steady_clock::now();
    SystemParams params = SystemParams::uniform(2, 2, 1.0, 1.0, -1.0);
    const int nt = (kbase == 3) ? 180 : (kbase == 2 ? 120 : 60);
    auto g = build_grid({0.0, 1.0, 40, nt, nt});
    SymmetryClass cls = SymmetryClass::positive(kbase, 2);
    SolverConfig cfg;
    cfg.multistart_count = 24;
    cfg.grad_tol = 1e-9;
    cfg.max_iterations = 4000;
    cfg.rng_seed = 2024;

    SolutionSet set = multistart(g, params, cls, cfg);
    auto t1 = std::chrono::steady_clock::now();
    std::printf("k=%d: attempted %d, converged runs %d, distinct %zu  [%.1f s]\n", kbase,
                set.attempted, set.converged_runs, set.solutions.size(),
                std::chrono::duration<double>(t1 - t0).count());
    for (size_t i = 0; i < set.solutions.size(); ++i) {
        const auto& s = set.solutions[i];
        double minu = 1e300;
        for (int j = 0; j < s.state.n(); ++j) minu = std::min(minu, s.state.c[j].v.minCoeff());
        std::printf(
            "  E=%.8f pde=%.2e nehari=%.2e grad=%.2e iters=%d runk=%d defK=%.2e defPK=%.3f "
            "min_u=%.2e\n",
            s.energy, s.pde_residual, s.nehari_residual_max, s.grad_norm, s.iterations,
            s.run_class_k, s.defect_class, s.defect_refined, minu);
    }
    if (set.solutions.size() > 1) {
        std::printf("  min pairwise aligned distance: %.4f\n",
                    [&] {
                        double d = 1e300;
                        for (int i = 0; i < set.distances.rows(); ++i)
                            for (int j = i + 1; j < set.distances.cols(); ++j)
                                d = std::min(d, set.distances(i, j));
                        return d;
                    }());
    }
    return 0;
}
