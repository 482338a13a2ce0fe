#pragma once

#include "nehari/energy.hpp"
#include "nehari/seeds.hpp"
#include "nehari/symmetry.hpp"

#include <future>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace nehari {

struct SolverConfig {
    int max_iterations = 4000;
    double grad_tol = 1e-9;      // absolute L2 norm of the free gradient
    double nehari_tol = 1e-8;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    int max_backtracks = 45;
    double step0 = 1.0;
    double step_max = 8.0;
    double step_grow = 1.6;
    double newton_switch = 1e-2;  // free-gradient level where the Newton tail starts
    int max_newton = 80;
    double dedup_distance = 0.1;
    int multistart_count = 24;
    int m_max = 3;
    int refinement_levels = 3;   // class refinements a = 1, 1+p, 1+2p, ...
    double breaking_threshold = 0.01;
    double seed_width_frac = 0.75;
    unsigned long long rng_seed = 12345;
    int jobs = 1;
};

struct SolveReport {
    State state;
    bool converged = false;
    std::string reason;
    double energy = 0.0;
    double nehari_residual_max = 0.0;
    double grad_norm = 0.0;      // projected free-gradient norm at exit
    double pde_residual = 0.0;   // eq. (1.1) residual, max over components
    int iterations = 0;
    double defect_class = 0.0;   // invariance defect at 2pi/k
    double defect_refined = 0.0; // at 2pi/(pk) (positive) / 2pi/(2k) (nodal)
    int run_class_k = 0;         // class the run was performed in
};

namespace detail {

/// Retraction that preserves exact class membership: nehari_scale, then the
/// scaling is made block-constant (positive branch), which keeps the tiled
/// blockwise relations bit-exact. For states in the class the scalings are
/// block-constant up to rounding anyway.
inline ScaleResult class_retraction(const SystemParams& params, const State& u,
                                    const SymmetryClass& cls, Branch branch) {
    ScaleResult r = nehari_scale(params, u, branch);
    if (r.feasible && cls.branch == Branch::Positive) {
        for (int b = 0; b < params.blocks(); ++b)
            for (int l = 1; l < params.p; ++l) r.t[b * params.p + l] = r.t[b * params.p];
    }
    return r;
}

inline bool components_nonzero(const State& u) {
    for (int j = 0; j < u.n(); ++j)
        if (!component_nonzero(u.c[j])) return false;
    return true;
}

/// Levenberg-Marquardt tail on the free critical-point equation, restricted
/// to the symmetry class. Near a constrained minimizer the free gradient
/// vanishes (natural constraints), so this converges to the exact discrete
/// solution; the mass-matrix damping controls the soft rotational mode of the
/// critical orbit (pinned to the grid only through aliasing).
inline bool newton_polish(const SystemParams& params, const SymmetryClass& cls, Branch branch,
                          State& u, State& g, double& gnorm, int max_newton, double grad_tol,
                          int& steps_taken) {
    const GridPtr grid = u.grid();
    const int nr = grid->n_r();
    const int nt = grid->n_theta();
    const int nn = nr * nt;
    const int N = u.n();

    Eigen::VectorXd mass(static_cast<Eigen::Index>(N) * nn);
    for (int j = 0; j < N; ++j)
        for (int m = 0; m < nt; ++m)
            for (int i = 0; i < nr; ++i) mass[j * nn + i + m * nr] = grid->ring_w[i];

    double tau = 1.0;
    for (int it = 0; it < max_newton; ++it) {
        if (gnorm <= grad_tol) return true;
        Eigen::SparseMatrix<double> H = hessian_matrix(params, u, branch);
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(N) * nn);
        for (int j = 0; j < N; ++j)
            for (int m = 0; m < nt; ++m)
                for (int i = 0; i < nr; ++i)
                    rhs[j * nn + i + m * nr] = grid->ring_w[i] * g.c[j].v(i, m);

        bool accepted = false;
        for (int attempt = 0; attempt < 18 && !accepted; ++attempt) {
            Eigen::SparseMatrix<double> Hreg = H;
            if (tau > 0.0) {
                Eigen::SparseMatrix<double> D(N * nn, N * nn);
                D.setIdentity();
                for (int q = 0; q < N * nn; ++q) D.coeffRef(q, q) = tau * mass[q];
                Hreg = H + D;
            }
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Hreg);
            if (lu.info() != Eigen::Success) {
                tau = std::max(4.0 * tau, 1e-6);
                continue;
            }
            Eigen::VectorXd delta = lu.solve(rhs);
            State dir(grid, N);
            for (int j = 0; j < N; ++j)
                for (int m = 0; m < nt; ++m)
                    for (int i = 0; i < nr; ++i) dir.c[j].v(i, m) = delta[j * nn + i + m * nr];
            dir = project_class(dir, cls);
            State trial = project_class(axpy(u, -1.0, dir), cls);
            State gt = gradient(params, trial, branch);
            const double gn = l2_norm(gt);
            if (gn < gnorm) {
                u = std::move(trial);
                g = std::move(gt);
                gnorm = gn;
                tau *= 0.25;
                accepted = true;
            } else {
                tau = std::max(4.0 * tau, 1e-6);
                if (tau > 1e8) break;
            }
        }
        ++steps_taken;
        if (!accepted) return gnorm <= grad_tol;
    }
    return gnorm <= grad_tol;
}

}  // namespace detail

/// Projected-gradient minimization on the Nehari set within a symmetry class:
/// Sobolev-preconditioned descent with Armijo backtracking, class projection
/// and Nehari retraction after every trial step. The free gradient norm is the
/// convergence measure (the class and the Nehari set are natural constraints,
/// so it vanishes at constrained minimizers).
inline SolveReport minimize(const SystemParams& params, const SymmetryClass& cls,
                            const State& start, const SolverConfig& config) {
    require_valid(params);
    const Branch branch = cls.branch;
    const GridPtr grid = start.grid();
    SolveReport rep;
    rep.run_class_k = cls.k;

    State u = project_class(start, cls);
    if (!detail::components_nonzero(u)) {
        rep.reason = "start has a vanishing component after projection";
        rep.state = u;
        return rep;
    }

    ScaleResult sc = detail::class_retraction(params, u, cls, branch);
    if (!sc.feasible) {
        // one deterministic relative perturbation, then give up (Lemma 2.3
        // cone is genuinely infeasible)
        std::mt19937_64 rng(config.rng_seed ^ 0x9e3779b97f4a7c15ull);
        std::normal_distribution<double> gauss(0.0, 1.0);
        State pert = u;
        for (int j = 0; j < u.n(); ++j) {
            const double amp = 0.01 * std::sqrt(l2_norm_sq(u.c[j]) / grid->area());
            for (int m = 0; m < grid->n_theta(); ++m)
                for (int i = 0; i < grid->n_r(); ++i) pert.c[j].v(i, m) += amp * gauss(rng);
        }
        u = project_class(pert, cls);
        sc = detail::components_nonzero(u) ? detail::class_retraction(params, u, cls, branch)
                                           : ScaleResult{};
        if (!sc.feasible) {
            rep.reason = "retraction infeasible at the start";
            rep.state = u;
            return rep;
        }
    }
    u = scale_components(u, sc.t);

    // preconditioner per distinct lambda (block-constant by assumption (A))
    std::map<double, std::shared_ptr<ShiftedInverse>> precond;
    for (int j = 0; j < params.N; ++j)
        if (!precond.count(params.lambda[j]))
            precond[params.lambda[j]] =
                std::make_shared<ShiftedInverse>(grid, 1, params.lambda[j]);
    auto precondition = [&](const State& g) {
        State out = g;
        for (int j = 0; j < g.n(); ++j)
            out.c[j] = precond.at(params.lambda[j])->apply(g.c[j]);
        return project_class(out, cls);
    };

    double e = energy(params, u, branch);
    State g = gradient(params, u, branch);
    double gnorm = l2_norm(g);
    double step = config.step0;
    rep.converged = gnorm <= config.grad_tol;

    int it = 0;
    std::string stop_reason = rep.converged ? "converged at start" : "";
    while (!rep.converged && it < config.max_iterations) {
        State dir = precondition(g);
        double dec = inner(g, dir);
        if (!(dec > 0.0)) {
            dir = project_class(g, cls);
            dec = gnorm * gnorm;
        }
        // below this scale energy differences drown in rounding; acceptance
        // then switches to the residual norm
        const double energy_noise = 64.0 * 1e-16 * (std::abs(e) + 1.0);
        double alpha = std::min(step * config.step_grow, config.step_max);
        bool accepted = false;
        bool have_trial_grad = false;
        State trial, trial_grad;
        double e_trial = 0.0, g_trial = 0.0;
        for (int bt = 0; bt < config.max_backtracks; ++bt) {
            trial = project_class(axpy(u, -alpha, dir), cls);
            if (!detail::components_nonzero(trial)) {
                alpha *= config.backtrack_factor;
                continue;
            }
            ScaleResult rs = detail::class_retraction(params, trial, cls, branch);
            if (!rs.feasible) {
                alpha *= config.backtrack_factor;
                continue;
            }
            trial = scale_components(trial, rs.t);
            e_trial = energy(params, trial, branch);
            const double predicted = config.armijo_c * alpha * dec;
            if (e_trial <= e - predicted) {
                accepted = true;
                break;
            }
            if (predicted < energy_noise && e_trial <= e + energy_noise) {
                trial_grad = gradient(params, trial, branch);
                g_trial = l2_norm(trial_grad);
                if (g_trial <= gnorm * (1.0 - 1e-6)) {
                    accepted = true;
                    have_trial_grad = true;
                    break;
                }
            }
            alpha *= config.backtrack_factor;
        }
        if (!accepted) {
            stop_reason = "line search failed";
            break;
        }
        u = std::move(trial);
        e = e_trial;
        if (have_trial_grad) {
            g = std::move(trial_grad);
            gnorm = g_trial;
        } else {
            g = gradient(params, u, branch);
            gnorm = l2_norm(g);
        }
        step = alpha;
        ++it;
        if (gnorm <= config.grad_tol) {
            rep.converged = true;
            stop_reason = "gradient tolerance reached";
        } else if (gnorm <= config.newton_switch) {
            stop_reason = "switched to newton tail";
            break;
        }
    }
    if (!rep.converged && gnorm <= config.newton_switch) {
        int newton_steps = 0;
        if (detail::newton_polish(params, cls, branch, u, g, gnorm, config.max_newton,
                                  config.grad_tol, newton_steps)) {
            rep.converged = true;
            stop_reason = "newton tail converged";
        } else {
            stop_reason = "newton tail stalled at gradient " + std::to_string(gnorm);
        }
        it += newton_steps;
    }
    if (!rep.converged && stop_reason.empty()) stop_reason = "iteration budget exhausted";

    // canonical exact-class representative for the reported state
    u = project_class(u, cls);
    rep.state = u;
    rep.reason = stop_reason;
    rep.iterations = it;
    rep.energy = energy(params, u, branch);
    NehariReport nr = nehari_residuals(params, u, branch, config.nehari_tol);
    rep.nehari_residual_max = nr.residuals.cwiseAbs().maxCoeff();
    rep.grad_norm = l2_norm(gradient(params, u, branch));
    rep.pde_residual = pde_residual(params, u);
    const int nt = grid->n_theta();
    rep.defect_class = invariance_defect(u, nt / cls.k);
    rep.defect_refined = invariance_defect(u, nt / cls.group_order());
    return rep;
}

/// Normalized L2 distance between states modulo the symmetry group: min over
/// all grid rotations, sigma powers, one reflection, and (nodal) global sign.
inline double aligned_distance(const State& a, const State& b, const SystemParams& params,
                               Branch branch) {
    const GridPtr grid = a.grid();
    const int nt = grid->n_theta();
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    const double den = std::max(std::max(na, nb), 1e-300);
    double best = std::numeric_limits<double>::infinity();
    for (int refl = 0; refl < 2; ++refl) {
        for (int t = 0; t < params.p; ++t) {
            State v = sigma_power(b, params, t);
            if (refl) {
                for (int j = 0; j < v.n(); ++j) v.c[j] = reflect_field(v.c[j], 0);
            }
            const int nsign = (branch == Branch::Nodal) ? 2 : 1;
            for (int sg = 0; sg < nsign; ++sg) {
                const double sign = sg == 0 ? 1.0 : -1.0;
                for (int s = 0; s < nt; ++s) {
                    double acc = 0.0;
                    for (int j = 0; j < a.n(); ++j) {
                        const auto& av = a.c[j].v;
                        const auto& bv = v.c[j].v;
                        for (int m = 0; m < nt; ++m) {
                            const int mb = wrap_index(m - s, nt);
                            for (int i = 0; i < grid->n_r(); ++i) {
                                const double d = av(i, m) - sign * bv(i, mb);
                                acc += grid->ring_w[i] * d * d;
                            }
                        }
                    }
                    best = std::min(best, std::sqrt(acc) / den);
                }
            }
        }
    }
    return best;
}

/// Energy-sorted set of distinct converged solutions.
struct SolutionSet {
    std::vector<SolveReport> solutions;       // sorted by energy
    Eigen::MatrixXd distances;                // aligned pairwise distances
    int attempted = 0;
    int converged_runs = 0;
};

namespace detail {

inline std::vector<std::complex<double>> random_sphere_point(std::mt19937_64& rng, int m) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::complex<double>> z(m);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (int i = 0; i < m; ++i) {
            z[i] = {gauss(rng), gauss(rng)};
            norm += std::norm(z[i]);
        }
    } while (norm < 1e-12);
    const double inv = 1.0 / std::sqrt(norm);
    for (auto& zi : z) zi *= inv;
    return z;
}

}  // namespace detail

/// Multistart search in the class: seeds drawn from the equivariant maps for
/// the class itself and for its compatible refinements (k' = a k, a = 1 mod p;
/// M_{k'} is then an exact subspace of M_k), minimized within the refinement,
/// deduplicated modulo the group, and sorted by energy.
inline SolutionSet multistart(GridPtr grid, const SystemParams& params, const SymmetryClass& cls,
                              const SolverConfig& config) {
    require_valid(params);
    const Branch branch = cls.branch;
    const int nt = grid->n_theta();

    // admissible refinement multipliers
    std::vector<int> refits;
    for (int lvl = 0; lvl < config.refinement_levels; ++lvl) {
        const int a = 1 + lvl * (branch == Branch::Positive ? cls.p : 2);
        const int kk = a * cls.k;
        const int order = (branch == Branch::Positive ? cls.p : 2) * kk;
        if (nt % order != 0) continue;
        if (grid->spec.alignment_order % order != 0) continue;
        const double sector = 2.0 * kPi / order;
        if (config.seed_width_frac * sector < 3.0 * grid->dtheta) continue;
        refits.push_back(a);
    }
    if (refits.empty()) refits.push_back(1);

    struct RunSpec {
        SymmetryClass run_cls;
        SeedSpec seed;
    };
    std::vector<RunSpec> runs;
    std::mt19937_64 rng(config.rng_seed);
    for (int rix = 0; rix < config.multistart_count; ++rix) {
        const int a = refits[rix % refits.size()];
        const int m = 1 + static_cast<int>((rix / refits.size()) % config.m_max);
        RunSpec rs;
        rs.run_cls = (branch == Branch::Positive) ? SymmetryClass::positive(a * cls.k, cls.p)
                                                  : SymmetryClass::nodal(a * cls.k);
        rs.seed.m = m;
        rs.seed.z = detail::random_sphere_point(rng, m);
        rs.seed.radial_windows = default_radial_windows(*grid, m, params.blocks());
        rs.seed.angular_width_frac = config.seed_width_frac;
        runs.push_back(std::move(rs));
    }

    auto execute = [&](const RunSpec& rs) -> SolveReport {
        State seed = (branch == Branch::Positive)
                         ? seed_positive(grid, rs.run_cls, rs.seed, params)
                         : seed_nodal(grid, rs.run_cls, rs.seed, params);
        SolveReport rep = minimize(params, rs.run_cls, seed, config);
        // diagnostics relative to the base class
        rep.defect_class = invariance_defect(rep.state, nt / cls.k);
        rep.defect_refined = invariance_defect(rep.state, nt / cls.group_order());
        return rep;
    };

    std::vector<SolveReport> reports(runs.size());
    if (config.jobs <= 1) {
        for (size_t i = 0; i < runs.size(); ++i) reports[i] = execute(runs[i]);
    } else {
        std::vector<std::future<SolveReport>> futs;
        futs.reserve(runs.size());
        for (size_t i = 0; i < runs.size(); ++i)
            futs.push_back(std::async(std::launch::async, [&, i] { return execute(runs[i]); }));
        for (size_t i = 0; i < runs.size(); ++i) reports[i] = futs[i].get();
    }

    SolutionSet set;
    set.attempted = static_cast<int>(runs.size());
    for (auto& rep : reports) {
        if (!rep.converged) continue;
        ++set.converged_runs;
        bool dup = false;
        for (auto& kept : set.solutions) {
            if (aligned_distance(kept.state, rep.state, params, branch) < config.dedup_distance) {
                if (rep.grad_norm < kept.grad_norm) kept = rep;  // keep the cleaner copy
                dup = true;
                break;
            }
        }
        if (!dup) set.solutions.push_back(std::move(rep));
    }
    std::sort(set.solutions.begin(), set.solutions.end(),
              [](const SolveReport& x, const SolveReport& y) { return x.energy < y.energy; });
    const int n = static_cast<int>(set.solutions.size());
    set.distances = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double d = aligned_distance(set.solutions[i].state, set.solutions[j].state,
                                              params, branch);
            set.distances(i, j) = set.distances(j, i) = d;
        }
    return set;
}

}  // namespace nehari
