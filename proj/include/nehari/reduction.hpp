#pragma once

#include "nehari/energy.hpp"
#include "nehari/solver.hpp"
#include "nehari/symmetry.hpp"

#include <optional>
#include <vector>

namespace nehari {

/// The 2-coupled reduced problem on the pullback grid: operator Delta_k,
/// nonlocal antipodal coupling, lambda normalized to 1.
struct ReducedProblem {
    int k = 1;
    double beta = -1.0;  // < 0
    GridPtr grid;        // reduced (pullback) grid; n_theta even

    void validate() const {
        if (k < 1) throw std::invalid_argument("reduced: k must be positive");
        if (!(beta < 0.0)) throw std::invalid_argument("reduced: beta must be negative");
        if (!grid) throw std::invalid_argument("reduced: missing grid");
        if (grid->n_theta() % 2 != 0)
            throw std::invalid_argument("reduced: n_theta must be even");
    }

    SystemParams full_system() const { return SystemParams::uniform(2, 2, 1.0, 1.0, beta); }
};

/// Angular refinement of a grid by a factor k (same radial layout).
inline GridPtr refine_angular(const PolarGrid& g, int k) {
    GridSpec spec = g.spec;
    spec.n_theta *= k;
    spec.alignment_order = spec.n_theta;
    return build_grid(spec);
}

/// The isomorphism Psi_k: a field on the reduced grid (n_r, n_theta) maps to
/// the pair (u(r, k theta), u(r, k theta - pi)) on the k-fold angularly
/// refined grid, realized as exact tiling of columns. The image lies in
/// M_k^+ (N = 2, p = 2) and the map is exactly invertible.
inline State psi_k(const Field& u_hat, int k, GridPtr full_grid = nullptr) {
    const GridPtr red = u_hat.grid;
    const int nh = red->n_theta();
    if (nh % 2 != 0) throw std::invalid_argument("psi_k: reduced n_theta must be even");
    if (!full_grid) full_grid = refine_angular(*red, k);
    if (full_grid->n_theta() != k * nh || full_grid->n_r() != red->n_r() ||
        full_grid->spec.r_inner != red->spec.r_inner ||
        full_grid->spec.r_outer != red->spec.r_outer)
        throw std::invalid_argument("psi_k: incompatible grid pair");
    State out(full_grid, 2);
    const int half = nh / 2;
    for (int m = 0; m < full_grid->n_theta(); ++m) {
        out.c[0].v.col(m) = u_hat.v.col(m % nh);
        out.c[1].v.col(m) = u_hat.v.col(wrap_index(m - half, nh));
    }
    return out;
}

/// Inverse of psi_k: reads the fundamental angular window of component 1.
inline Field psi_k_inverse(const State& u, int k, GridPtr reduced_grid) {
    if (u.n() != 2) throw std::invalid_argument("psi_k_inverse: need a 2-component state");
    const GridPtr full = u.grid();
    const int nh = reduced_grid->n_theta();
    if (full->n_theta() != k * nh)
        throw std::invalid_argument("psi_k_inverse: incompatible grid pair");
    Field out(reduced_grid);
    for (int m = 0; m < nh; ++m) out.v.col(m) = u.c[0].v.col(m);
    return out;
}

namespace detail {

inline double antipodal_coupling(const Field& u) {
    // int u^2(x) u^2(-x)
    const PolarGrid& g = *u.grid;
    const int nt = g.n_theta();
    const int half = nt / 2;
    double acc = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        const double w = g.ring_w[i];
        for (int m = 0; m < nt; ++m) {
            const double a = u.v(i, m);
            const double b = u.v(i, wrap_index(m - half, nt));
            acc += w * a * a * b * b;
        }
    }
    return acc;
}

}  // namespace detail

/// Quadratic part of the reduced energy: int (u_r^2 + k^2/r^2 u_theta^2) + int u^2.
inline double reduced_quadratic(const ReducedProblem& prob, const Field& u) {
    return h1_seminorm_sq_k(*prob.grid, u, prob.k) + inner(u, u);
}

/// Interaction part D(u) = int |u^+|^4 + beta int u^2(x) u^2(-x); the
/// hypothesis of the scaling lemma is D(u) > 0.
inline double reduced_interaction(const ReducedProblem& prob, const Field& u) {
    return detail::positive_part_quartic(u) + prob.beta * detail::antipodal_coupling(u);
}

/// Reduced energy, exactly as displayed:
///   int (u_r^2 + k^2/r^2 u_theta^2) + int u^2 - 1/2 int (|u^+|^4 + beta u^2(x) u^2(-x)).
inline double energy_reduced(const ReducedProblem& prob, const Field& u) {
    if (!same_grid(Field{prob.grid, u.v}, u))
        throw std::invalid_argument("energy_reduced: field not on the problem grid");
    return reduced_quadratic(prob, u) - 0.5 * reduced_interaction(prob, u);
}

/// L2 representation of the reduced energy differential:
///   dE(u) = 2(-Delta_k u + u - (u^+)^3 - beta u u^2(-x)).
inline Field gradient_reduced(const ReducedProblem& prob, const Field& u) {
    Field lap = laplacian_k(*prob.grid, u, prob.k);
    Field ut = antipodal(u);
    Field out(u.grid);
    out.v = 2.0 * (-lap.v + u.v - u.v.max(0.0).pow(3) - prob.beta * u.v * ut.v.square());
    return out;
}

/// Residual of the reduced Euler-Lagrange equation
///   -Delta_k u + u = (u^+)^3 + beta u u^2(-x)   (discrete L2 norm).
inline double reduced_pde_residual(const ReducedProblem& prob, const Field& u) {
    Field g = gradient_reduced(prob, u);
    g.v *= 0.5;
    return l2_norm(g);
}

/// W-weighted Hessian of the reduced energy: 2 W (-Delta_k + 1) plus the
/// pointwise terms -6 (u^+)^2 - 2 beta u^2(-x) on the diagonal and the
/// nonlocal antipodal entries -4 beta u(x) u(-x).
inline Eigen::SparseMatrix<double> reduced_hessian_matrix(const ReducedProblem& prob,
                                                          const Field& u) {
    const PolarGrid& g = *prob.grid;
    const int nr = g.n_r();
    const int nt = g.n_theta();
    const int half = nt / 2;
    Eigen::SparseMatrix<double> H = shifted_operator_matrix(g, prob.k, 1.0);
    H *= 2.0;
    using T = Eigen::Triplet<double>;
    std::vector<T> trips;
    trips.reserve(static_cast<size_t>(nr) * nt * 2);
    auto idx = [nr](int i, int m) { return i + m * nr; };
    for (int m = 0; m < nt; ++m) {
        const int ma = wrap_index(m - half, nt);
        for (int i = 0; i < nr; ++i) {
            const double w = g.ring_w[i];
            const double x = u.v(i, m);
            const double xa = u.v(i, ma);
            const double up = std::max(x, 0.0);
            trips.emplace_back(idx(i, m), idx(i, m),
                               w * 2.0 * (-3.0 * up * up - prob.beta * xa * xa));
            trips.emplace_back(idx(i, m), idx(i, ma), w * 2.0 * (-2.0 * prob.beta * x * xa));
        }
    }
    Eigen::SparseMatrix<double> extra(nr * nt, nr * nt);
    extra.setFromTriplets(trips.begin(), trips.end());
    return H + extra;
}

/// Reduced Nehari functional dE(u)[u] = 2 (quadratic(u) - D(u)).
inline double reduced_nehari_residual(const ReducedProblem& prob, const Field& u) {
    return 2.0 * (reduced_quadratic(prob, u) - reduced_interaction(prob, u));
}

/// Closed-form unique scaling lambda > 0 with lambda*u on the reduced Nehari
/// set, defined when D(u) > 0; infeasible otherwise.
inline std::optional<double> nehari_scale_reduced(const ReducedProblem& prob, const Field& u) {
    if (!(l2_norm(u) > 0.0)) throw std::invalid_argument("nehari_scale_reduced: u must be nonzero");
    const double d = reduced_interaction(prob, u);
    if (!(d > 0.0)) return std::nullopt;
    return std::sqrt(reduced_quadratic(prob, u) / d);
}

/// Per-term comparison of the full-system energy at Psi_k u against the
/// reduced energy; with the exact tiling pullback every ratio is 1 up to
/// rounding, and the discrete gradients correspond exactly.
struct PullbackReport {
    double full_quadratic = 0.0, reduced_quadratic = 0.0;
    double full_quartic = 0.0, reduced_quartic = 0.0;
    double full_coupling = 0.0, reduced_coupling = 0.0;
    double full_energy = 0.0, reduced_energy = 0.0;
    double gradient_mismatch = 0.0;  // ||grad E(Psi u) - Psi(grad E_k(u)/2)|| / scale
    double ratio(double a, double b) const { return b != 0.0 ? a / b : 0.0; }
};

inline PullbackReport pullback_consistency(const ReducedProblem& prob, const Field& u) {
    prob.validate();
    PullbackReport rep;
    const SystemParams sys = prob.full_system();
    State mapped = psi_k(u, prob.k);
    const PolarGrid& fg = *mapped.grid();

    rep.full_quadratic = 0.5 * (h1_norm_sq(fg, mapped.c[0], 1.0) + h1_norm_sq(fg, mapped.c[1], 1.0));
    rep.reduced_quadratic = reduced_quadratic(prob, u);
    rep.full_quartic = 0.25 * (detail::positive_part_quartic(mapped.c[0]) +
                               detail::positive_part_quartic(mapped.c[1]));
    rep.reduced_quartic = 0.5 * detail::positive_part_quartic(u);
    rep.full_coupling = 0.5 * prob.beta * detail::cross_quartic(mapped.c[0], mapped.c[1]);
    rep.reduced_coupling = 0.5 * prob.beta * detail::antipodal_coupling(u);
    rep.full_energy = energy_positive(sys, mapped);
    rep.reduced_energy = energy_reduced(prob, u);

    // critical-point correspondence: grad E^+(Psi_k u) is the tiling of half
    // the reduced gradient
    State gfull = gradient(sys, mapped, Branch::Positive);
    Field gred = gradient_reduced(prob, u);
    gred.v *= 0.5;
    State mappedg = psi_k(gred, prob.k, mapped.grid());
    double num = 0.0;
    for (int j = 0; j < 2; ++j) {
        Field diff(mapped.grid());
        diff.v = gfull.c[j].v - mappedg.c[j].v;
        num += l2_norm_sq(diff);
    }
    const double den = std::max(std::sqrt(l2_norm_sq(gfull)), 1e-300);
    rep.gradient_mismatch = std::sqrt(num) / den;
    return rep;
}

struct ReducedSolveReport {
    Field state;
    bool converged = false;
    double energy = 0.0;
    double residual = 0.0;  // reduced Euler-Lagrange residual
    int iterations = 0;
    int starts = 0;
    std::string reason;
};

namespace detail {

inline Field reduced_bump_seed(GridPtr grid, double rlo_frac, double rhi_frac, double ang_center,
                               double ang_width) {
    Field f(grid);
    const double ri = grid->spec.r_inner;
    const double ro = grid->spec.r_outer;
    const double lo = ri + rlo_frac * (ro - ri);
    const double hi = ri + rhi_frac * (ro - ri);
    for (int i = 0; i < grid->n_r(); ++i) {
        const double rad = bump01((grid->r[i] - lo) / (hi - lo));
        if (rad == 0.0) continue;
        for (int m = 0; m < grid->n_theta(); ++m) {
            double d = m * grid->dtheta - ang_center;
            while (d > kPi) d -= 2.0 * kPi;
            while (d < -kPi) d += 2.0 * kPi;
            f.v(i, m) = rad * bump01(d / ang_width + 0.5);
        }
    }
    return f;
}

inline ReducedSolveReport reduced_descent(const ReducedProblem& prob, Field u,
                                          const SolverConfig& config,
                                          const ShiftedInverse& precond) {
    ReducedSolveReport rep;
    auto lam = nehari_scale_reduced(prob, u);
    if (!lam) {
        rep.reason = "retraction infeasible at the start";
        rep.state = std::move(u);
        return rep;
    }
    u.v *= *lam;
    double e = energy_reduced(prob, u);
    Field g = gradient_reduced(prob, u);
    double res = 0.5 * l2_norm(g);
    double step = config.step0;
    rep.converged = res <= config.grad_tol;
    int it = 0;
    while (!rep.converged && it < config.max_iterations) {
        Field dir = precond.apply(g);
        double dec = inner(g, dir);
        if (!(dec > 0.0)) {
            dir = g;
            dec = inner(g, g);
        }
        double alpha = std::min(step * config.step_grow, config.step_max);
        bool accepted = false;
        Field trial;
        double e_trial = 0.0;
        for (int bt = 0; bt < config.max_backtracks; ++bt) {
            trial = Field(u.grid, u.v - alpha * dir.v);
            auto l = (l2_norm(trial) > 0.0) ? nehari_scale_reduced(prob, trial) : std::nullopt;
            if (!l) {
                alpha *= config.backtrack_factor;
                continue;
            }
            trial.v *= *l;
            e_trial = energy_reduced(prob, trial);
            if (e_trial <= e - config.armijo_c * alpha * dec) {
                accepted = true;
                break;
            }
            alpha *= config.backtrack_factor;
        }
        if (!accepted) {
            rep.reason = "line search failed";
            break;
        }
        u = std::move(trial);
        e = e_trial;
        g = gradient_reduced(prob, u);
        res = 0.5 * l2_norm(g);
        step = alpha;
        ++it;
        if (res <= config.grad_tol) {
            rep.converged = true;
            rep.reason = "gradient tolerance reached";
        } else if (res <= config.newton_switch) {
            rep.reason = "switched to newton tail";
            break;
        }
    }
    // Levenberg-Marquardt tail on the free reduced equation (mass-matrix
    // damping controls the soft rotational mode of the critical orbit)
    if (!rep.converged && res <= config.newton_switch) {
        const int nr = prob.grid->n_r();
        const int nt = prob.grid->n_theta();
        double tau = 1.0;
        for (int nit = 0; nit < config.max_newton && res > config.grad_tol; ++nit) {
            Eigen::SparseMatrix<double> H = reduced_hessian_matrix(prob, u);
            Eigen::VectorXd rhs(nr * nt);
            for (int m = 0; m < nt; ++m)
                for (int i = 0; i < nr; ++i)
                    rhs[i + m * nr] = prob.grid->ring_w[i] * g.v(i, m);
            bool accepted = false;
            for (int attempt = 0; attempt < 18 && !accepted; ++attempt) {
                Eigen::SparseMatrix<double> Hreg = H;
                if (tau > 0.0) {
                    Eigen::SparseMatrix<double> D(nr * nt, nr * nt);
                    D.setIdentity();
                    for (int m = 0; m < nt; ++m)
                        for (int i = 0; i < nr; ++i)
                            D.coeffRef(i + m * nr, i + m * nr) = tau * prob.grid->ring_w[i];
                    Hreg = H + D;
                }
                Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Hreg);
                if (lu.info() != Eigen::Success) {
                    tau = std::max(4.0 * tau, 1e-6);
                    continue;
                }
                Eigen::VectorXd delta = lu.solve(rhs);
                Field trial(u.grid);
                for (int m = 0; m < nt; ++m)
                    for (int i = 0; i < nr; ++i) trial.v(i, m) = u.v(i, m) - delta[i + m * nr];
                Field gt = gradient_reduced(prob, trial);
                const double rn = 0.5 * l2_norm(gt);
                if (rn < res) {
                    u = std::move(trial);
                    g = std::move(gt);
                    res = rn;
                    tau *= 0.25;
                    accepted = true;
                } else {
                    tau = std::max(4.0 * tau, 1e-6);
                    if (tau > 1e8) break;
                }
            }
            ++it;
            if (!accepted) break;
        }
        if (res <= config.grad_tol) {
            rep.converged = true;
            rep.reason = "newton tail converged";
        } else {
            rep.reason = "newton tail stalled";
        }
        e = energy_reduced(prob, u);
    }
    if (!rep.converged && rep.reason.empty()) rep.reason = "iteration budget exhausted";
    rep.state = std::move(u);
    rep.energy = e;
    rep.residual = res;
    rep.iterations = it;
    return rep;
}

}  // namespace detail

/// Multistart minimization of the reduced energy over its Nehari set; returns
/// the lowest-energy converged state.
inline ReducedSolveReport ground_state_reduced(const ReducedProblem& prob,
                                               const SolverConfig& config) {
    prob.validate();
    ShiftedInverse precond(prob.grid, prob.k, 1.0);
    // deterministic localized starts: single bumps at several radial windows
    // and widths, plus one two-bump combination
    struct Win {
        double lo, hi, width;
    };
    const std::vector<Win> wins = {{0.05, 0.95, 0.9 * kPi}, {0.05, 0.60, 0.7 * kPi},
                                   {0.40, 0.95, 0.7 * kPi}, {0.10, 0.80, 0.45 * kPi},
                                   {0.20, 0.90, 1.2 * kPi}, {0.05, 0.45, 0.5 * kPi}};
    ReducedSolveReport best;
    int starts = 0;
    for (const auto& w : wins) {
        Field seed = detail::reduced_bump_seed(prob.grid, w.lo, w.hi, 0.0, w.width);
        if (!(l2_norm(seed) > 0.0)) continue;
        ++starts;
        ReducedSolveReport rep = detail::reduced_descent(prob, std::move(seed), config, precond);
        if (rep.converged && (!best.converged || rep.energy < best.energy)) best = std::move(rep);
    }
    {
        Field two = detail::reduced_bump_seed(prob.grid, 0.05, 0.5, 0.0, 0.6 * kPi);
        Field outer = detail::reduced_bump_seed(prob.grid, 0.55, 0.95, 0.4 * kPi, 0.6 * kPi);
        two.v += outer.v;
        ++starts;
        ReducedSolveReport rep = detail::reduced_descent(prob, std::move(two), config, precond);
        if (rep.converged && (!best.converged || rep.energy < best.energy)) best = std::move(rep);
    }
    best.starts = starts;
    if (!best.converged && best.reason.empty()) best.reason = "no start converged";
    return best;
}

/// Half-space through the origin with grid-aligned boundary: the reflection is
/// m -> (2 axis_index - m) mod n_theta and the H side is the arc
/// [axis_index, axis_index + n/2].
struct HalfSpace {
    int axis_index = 0;
};

/// Two-point polarization u_H: pointwise max on the H side, min on the
/// complement; node pairs {x, sigma_H x} keep their value multisets.
inline Field polarize(const Field& u, const HalfSpace& H) {
    const PolarGrid& g = *u.grid;
    const int nt = g.n_theta();
    Field out(u.grid);
    for (int m = 0; m < nt; ++m) {
        const int sm = wrap_index(2 * H.axis_index - m, nt);
        const int side = wrap_index(m - H.axis_index, nt);
        const bool in_h = side <= nt / 2;
        for (int i = 0; i < g.n_r(); ++i) {
            const double x = u.v(i, m);
            const double y = u.v(i, sm);
            out.v(i, m) = in_h ? std::max(x, y) : std::min(x, y);
        }
    }
    return out;
}

/// G, P, Q bookkeeping of the polarization inequality (Lemma 4.5 shape):
/// G(u) = 2 int (u_r^2 + k^2/r^2 u_theta^2), P(u) = int (2u^2 - 1/2 |u^+|^4),
/// Q(u) = -beta int u^2(x) u^2(-x). Discretely G may only drop (strictly on
/// edges crossing the switching interface), P is exactly preserved, Q obeys
/// the two-point rearrangement inequality.
struct PolarizationReport {
    double g_u = 0.0, g_uh = 0.0;
    double p_u = 0.0, p_uh = 0.0;
    double q_u = 0.0, q_uh = 0.0;
    double e_u = 0.0, e_uh = 0.0;
    double scale = 0.0;
    bool g_no_increase = false;
    bool p_equal = false;
    bool q_no_increase = false;
    bool energy_no_increase = false;
    bool ok() const { return g_no_increase && p_equal && q_no_increase && energy_no_increase; }
};

inline PolarizationReport polarization_inequality_check(const ReducedProblem& prob, const Field& u,
                                                        const HalfSpace& H) {
    prob.validate();
    Field uh = polarize(u, H);
    PolarizationReport rep;
    rep.g_u = 2.0 * h1_seminorm_sq_k(*prob.grid, u, prob.k);
    rep.g_uh = 2.0 * h1_seminorm_sq_k(*prob.grid, uh, prob.k);
    rep.p_u = 2.0 * inner(u, u) - 0.5 * detail::positive_part_quartic(u);
    rep.p_uh = 2.0 * inner(uh, uh) - 0.5 * detail::positive_part_quartic(uh);
    rep.q_u = -prob.beta * detail::antipodal_coupling(u);
    rep.q_uh = -prob.beta * detail::antipodal_coupling(uh);
    rep.e_u = energy_reduced(prob, u);
    rep.e_uh = energy_reduced(prob, uh);
    rep.scale = std::abs(rep.g_u) + std::abs(rep.p_u) + std::abs(rep.q_u) + 1.0;
    rep.g_no_increase = rep.g_uh <= rep.g_u + 5e-12 * rep.scale;
    rep.p_equal = std::abs(rep.p_uh - rep.p_u) <= 1e-12 * rep.scale;
    rep.q_no_increase = rep.q_uh <= rep.q_u + 1e-12 * rep.scale;
    rep.energy_no_increase = rep.e_uh <= rep.e_u + 1e-10 * rep.scale;
    return rep;
}

/// Foliated-Schwarz defect: minimum over candidate axis directions (all grid
/// angles) of the quadrature-weighted positive angular increments of u along
/// both geodesic chains away from the axis. Zero iff u is discretely foliated
/// Schwarz symmetric about some grid direction.
inline double foliated_schwarz_defect(const Field& u) {
    const PolarGrid& g = *u.grid;
    const int nt = g.n_theta();
    const int nr = g.n_r();
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < nt; ++a) {
        double viol = 0.0;
        for (int i = 0; i < nr; ++i) {
            const double w = g.ring_w[i];
            double acc = 0.0;
            for (int dir = -1; dir <= 1; dir += 2) {
                for (int s = 0; s < nt / 2; ++s) {
                    const double cur = u.v(i, wrap_index(a + dir * s, nt));
                    const double nxt = u.v(i, wrap_index(a + dir * (s + 1), nt));
                    if (nxt > cur) acc += nxt - cur;
                }
            }
            viol += w * acc;
        }
        best = std::min(best, viol);
    }
    return best;
}

/// Theorem 1.5 verification: the reduced ground state has minimal period
/// 2*pi (pullback variable) and its mapped components have minimal period
/// exactly 2*pi/k, with all proper refinements broken above threshold.
struct MinimalPeriodReport {
    ReducedSolveReport ground;
    PeriodResult reduced_period;
    std::vector<PeriodResult> component_periods;
    double defect_at_claimed = 0.0;     // mapped components at 2*pi/k (max over comps)
    double min_refinement_defect = 0.0; // min over proper refinements and comps
    bool pass = false;
};

inline MinimalPeriodReport minimal_period_theorem_check(const ReducedProblem& prob,
                                                        const SolverConfig& config,
                                                        double period_tol = 1e-6) {
    prob.validate();
    MinimalPeriodReport rep;
    rep.ground = ground_state_reduced(prob, config);
    if (!rep.ground.converged) return rep;

    rep.reduced_period = minimal_period(rep.ground.state, period_tol);
    State mapped = psi_k(rep.ground.state, prob.k);
    const int nt_full = mapped.grid()->n_theta();

    rep.defect_at_claimed = 0.0;
    rep.min_refinement_defect = std::numeric_limits<double>::infinity();
    bool components_ok = true;
    for (int j = 0; j < 2; ++j) {
        PeriodResult pr = minimal_period(mapped.c[j], period_tol);
        rep.component_periods.push_back(pr);
        if (pr.radial || pr.m != prob.k) components_ok = false;
        rep.defect_at_claimed =
            std::max(rep.defect_at_claimed, invariance_defect(mapped.c[j], nt_full / prob.k));
        for (int mult = 2; mult * prob.k <= nt_full; ++mult) {
            if (nt_full % (mult * prob.k) != 0) continue;
            rep.min_refinement_defect =
                std::min(rep.min_refinement_defect,
                         invariance_defect(mapped.c[j], nt_full / (mult * prob.k)));
        }
    }
    const bool reduced_ok = !rep.reduced_period.radial && rep.reduced_period.m == 1;
    rep.pass = components_ok && reduced_ok && rep.defect_at_claimed < period_tol &&
               rep.min_refinement_defect > 0.01;
    return rep;
}

}  // namespace nehari
