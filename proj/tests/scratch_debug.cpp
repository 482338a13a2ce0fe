// Temporary debug harness (deleted once real tests land).
#include "nehari/solver.hpp"

#include <cstdio>

using namespace nehari;

int main() {
    SystemParams params = SystemParams::uniform(2, 2, 1.0, 1.0, -1.0);
    auto g = build_grid({0.0, 1.0, 40, 60, 60});
    SymmetryClass cls = SymmetryClass::positive(1, 2);

    SeedSpec spec;
    spec.m = 1;
    spec.z = {std::complex<double>(1.0, 0.0)};
    spec.radial_windows = default_radial_windows(*g, 1, 1);
    State u = seed_positive(g, cls, spec, params);
    u = project_class(u, cls);
    auto sc = nehari_scale(params, u, Branch::Positive);
    std::printf("seed retraction feasible=%d t=(%.4f, %.4f)\n", int(sc.feasible), sc.t[0], sc.t[1]);
    u = scale_components(u, sc.t);

    ShiftedInverse pc(g, 1, 1.0);
    double e = energy_positive(params, u);
    for (int it = 0; it < 40; ++it) {
        State grad = gradient(params, u, Branch::Positive);
        double gn = l2_norm(grad);
        State dir(g, 2);
        for (int j = 0; j < 2; ++j) dir.c[j] = pc.apply(grad.c[j]);
        dir = project_class(dir, cls);
        double dec = inner(grad, dir);
        double alpha = 1.0;
        int bt = 0;
        double enew = 0;
        State trial;
        for (; bt < 50; ++bt) {
            trial = project_class(axpy(u, -alpha, dir), cls);
            auto rs = nehari_scale(params, trial, Branch::Positive);
            if (!rs.feasible) { alpha *= 0.5; continue; }
            for (int b = 0; b < 1; ++b) rs.t[1] = rs.t[0];
            trial = scale_components(trial, rs.t);
            enew = energy_positive(params, trial);
            if (enew <= e - 1e-4 * alpha * dec) break;
            alpha *= 0.5;
        }
        std::printf("it %2d E=%.10f gnorm=%.3e dec=%.3e alpha=%.3e bt=%d\n", it, e, gn, dec, alpha,
                    bt);
        if (bt >= 50) { std::printf("line search failed\n"); break; }
        u = trial;
        e = enew;
    }
    return 0;
}
