// Temporary smoke check of the numerical core (deleted once real tests land).
#include "nehari/energy.hpp"
#include "nehari/reduction.hpp"
#include "nehari/seeds.hpp"
#include "nehari/solver.hpp"

#include <cstdio>
#include <random>

using namespace nehari;

static Field random_smooth(GridPtr g, std::mt19937_64& rng, int max_harm = 5) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Field f(g);
    const double ri = g->spec.r_inner, ro = g->spec.r_outer;
    for (int q = 0; q < 4; ++q) {
        for (int h = -max_harm; h <= max_harm; ++h) {
            const double cr = 0.3 * gauss(rng);
            const double ph = gauss(rng);
            for (int i = 0; i < g->n_r(); ++i) {
                const double x = (g->r[i] - ri) / (ro - ri);
                const double rad = std::pow(x, q) * x * (1.0 - x);
                for (int m = 0; m < g->n_theta(); ++m)
                    f.v(i, m) += cr * rad * std::cos(h * m * g->dtheta + ph);
            }
        }
    }
    return f;
}

int main() {
    std::mt19937_64 rng(7);
    auto g = build_grid({0.0, 1.0, 32, 48, 12});

    // area
    Field one(g);
    one.v.setConstant(1.0);
    std::printf("area: %.12f vs %.12f\n", integrate(one), g->area());

    // laplacian of 1 - r^2
    Field f(g);
    for (int i = 0; i < g->n_r(); ++i)
        for (int m = 0; m < g->n_theta(); ++m) f.v(i, m) = 1.0 - g->r[i] * g->r[i];
    Field lap = laplacian_k(*g, f, 1);
    double maxerr = 0;
    for (int i = 0; i < g->n_r() - 1; ++i)
        for (int m = 0; m < g->n_theta(); ++m) maxerr = std::max(maxerr, std::abs(lap.v(i, m) + 4.0));
    std::printf("lap(1-r^2)+4 interior max err: %.3e\n", maxerr);

    // Green identity
    Field u = random_smooth(g, rng), w = random_smooth(g, rng);
    double lhs = h1_norm_sq(*g, u, 1.7);
    Field lu = laplacian_k(*g, u, 1);
    double rhs = -inner(lu, u) + 1.7 * inner(u, u);
    std::printf("green: %.15e vs %.15e rel %.3e\n", lhs, rhs, std::abs(lhs - rhs) / std::abs(lhs));

    // laplacian_k symmetry
    Field lw3 = laplacian_k(*g, w, 3), lu3 = laplacian_k(*g, u, 3);
    double s1 = inner(lu3, w), s2 = inner(u, lw3);
    std::printf("lap_k symmetry: %.3e\n", std::abs(s1 - s2) / (l2_norm(u) * l2_norm(w)));

    // gradient FD consistency
    SystemParams params = SystemParams::uniform(2, 2, 1.0, 1.0, -1.0);
    State U(g, 2), V(g, 2);
    U.c[0] = random_smooth(g, rng);
    U.c[1] = random_smooth(g, rng);
    V.c[0] = random_smooth(g, rng);
    V.c[1] = random_smooth(g, rng);
    for (Branch br : {Branch::Positive, Branch::Nodal}) {
        const double h = 1e-5;
        double ep = energy(params, axpy(U, h, V), br);
        double em = energy(params, axpy(U, -h, V), br);
        double fd = (ep - em) / (2 * h);
        double gd = inner(gradient(params, U, br), V);
        std::printf("grad fd (%s): %.6e vs %.6e rel %.3e\n",
                    br == Branch::Positive ? "pos" : "nod", fd, gd,
                    std::abs(fd - gd) / std::abs(gd));
    }

    // pullback exactness
    auto gr = build_grid({0.0, 1.0, 24, 40, 40});
    ReducedProblem prob{3, -1.0, gr};
    Field uh = random_smooth(gr, rng);
    PullbackReport pr = pullback_consistency(prob, uh);
    std::printf("pullback ratios: quad %.15f quart %.15f coup %.15f gradmis %.3e\n",
                pr.ratio(pr.full_quadratic, pr.reduced_quadratic),
                pr.ratio(pr.full_quartic, pr.reduced_quartic),
                pr.ratio(pr.full_coupling, pr.reduced_coupling), pr.gradient_mismatch);

    // reduced scaling identity
    auto lam = nehari_scale_reduced(prob, uh);
    if (lam) {
        Field su = uh;
        su.v *= *lam;
        std::printf("reduced nehari residual after scaling: %.3e (lambda %.6f)\n",
                    reduced_nehari_residual(prob, su), *lam);
    } else {
        std::printf("reduced scaling infeasible for this sample\n");
    }

    // seed equivariance (bit-exact check)
    auto gs = build_grid({0.0, 1.0, 32, 60, 60});
    SymmetryClass cls = SymmetryClass::positive(1, 2);
    SeedSpec spec;
    spec.m = 2;
    spec.z = {std::complex<double>(0.6, 0.3), std::complex<double>(-0.2, 0.7)};
    double zn = 0;
    for (auto& zi : spec.z) zn += std::norm(zi);
    for (auto& zi : spec.z) zi /= std::sqrt(zn);
    spec.radial_windows = default_radial_windows(*gs, 2, 1);
    State s1s = seed_positive(gs, cls, spec, params);
    SeedSpec spec2 = spec;
    const std::complex<double> rot = std::polar(1.0, 2.0 * kPi / 2);
    for (auto& zi : spec2.z) zi *= rot;
    State s2s = seed_positive(gs, cls, spec2, params);
    State s1p = sigma_permute(s1s, params);
    bool exact = true;
    for (int j = 0; j < 2; ++j) exact = exact && (s2s.c[j].v == s1p.c[j].v).all();
    NehariReport nr = nehari_residuals(params, s1s, Branch::Positive);
    std::printf("seed equivariance bit-exact: %d, residuals %.3e %.3e\n", int(exact),
                nr.residuals[0], nr.residuals[1]);

    // disjoint supports
    double overlap = (s1s.c[0].v * s1s.c[1].v).abs().maxCoeff();
    std::printf("seed support overlap: %.3e\n", overlap);
    return 0;
}
