#pragma once

#include "nehari/params.hpp"
#include "nehari/state.hpp"

#include <optional>
#include <string>

namespace nehari {

namespace detail {

inline double positive_part_quartic(const Field& f) {
    // int (f^+)^4
    const PolarGrid& g = *f.grid;
    double acc = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        const double w = g.ring_w[i];
        for (int m = 0; m < g.n_theta(); ++m) {
            const double x = f.v(i, m);
            if (x > 0.0) acc += w * x * x * x * x;
        }
    }
    return acc;
}

inline double quartic(const Field& f) {
    const PolarGrid& g = *f.grid;
    double acc = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        const double w = g.ring_w[i];
        for (int m = 0; m < g.n_theta(); ++m) {
            const double x = f.v(i, m);
            acc += w * x * x * x * x;
        }
    }
    return acc;
}

inline double cross_quartic(const Field& a, const Field& b) {
    // int a^2 b^2
    const PolarGrid& g = *a.grid;
    double acc = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        const double w = g.ring_w[i];
        for (int m = 0; m < g.n_theta(); ++m) {
            const double x = a.v(i, m);
            const double y = b.v(i, m);
            acc += w * x * x * y * y;
        }
    }
    return acc;
}

inline double component_quartic(const Field& f, Branch branch) {
    return branch == Branch::Positive ? positive_part_quartic(f) : quartic(f);
}

}  // namespace detail

/// E^+ (positive branch): sum_i (1/2 ||u_i||_i^2 - mu_i/4 int (u_i^+)^4)
/// minus 1/2 sum_{i<j} beta_ij int u_i^2 u_j^2.
inline double energy_positive(const SystemParams& params, const State& u) {
    const PolarGrid& g = *u.grid();
    double e = 0.0;
    for (int j = 0; j < u.n(); ++j) {
        e += 0.5 * h1_norm_sq(g, u.c[j], params.lambda[j]);
        e -= 0.25 * params.mu[j] * detail::positive_part_quartic(u.c[j]);
    }
    for (int i = 0; i < u.n(); ++i)
        for (int j = i + 1; j < u.n(); ++j)
            e -= 0.5 * params.beta(i, j) * detail::cross_quartic(u.c[i], u.c[j]);
    return e;
}

/// E (nodal branch): as energy_positive with the full quartic int u^4.
inline double energy_nodal(const SystemParams& params, const State& u) {
    const PolarGrid& g = *u.grid();
    double e = 0.0;
    for (int j = 0; j < u.n(); ++j) {
        e += 0.5 * h1_norm_sq(g, u.c[j], params.lambda[j]);
        e -= 0.25 * params.mu[j] * detail::quartic(u.c[j]);
    }
    for (int i = 0; i < u.n(); ++i)
        for (int j = i + 1; j < u.n(); ++j)
            e -= 0.5 * params.beta(i, j) * detail::cross_quartic(u.c[i], u.c[j]);
    return e;
}

inline double energy(const SystemParams& params, const State& u, Branch branch) {
    return branch == Branch::Positive ? energy_positive(params, u) : energy_nodal(params, u);
}

/// L2 representation of dE at U. Component j:
///   -Delta u_j + lambda_j u_j - mu_j (u_j^+)^3 - u_j sum_{k != j} beta_jk u_k^2
/// (nodal branch uses u_j^3). Consistent with the energy under the quadrature
/// pairing: <gradient, V>_w equals the directional derivative.
inline State gradient(const SystemParams& params, const State& u, Branch branch) {
    const GridPtr g = u.grid();
    State out(g, u.n());
    // coupling accumulators S_j = sum_{k != j} beta_jk u_k^2
    std::vector<Eigen::ArrayXXd> sq(u.n());
    for (int j = 0; j < u.n(); ++j) sq[j] = u.c[j].v.square();
    for (int j = 0; j < u.n(); ++j) {
        Eigen::ArrayXXd coupling = Eigen::ArrayXXd::Zero(g->n_r(), g->n_theta());
        for (int k = 0; k < u.n(); ++k)
            if (k != j) coupling += params.beta(j, k) * sq[k];
        Field lap = laplacian_k(*g, u.c[j], 1);
        Eigen::ArrayXXd cubic;
        if (branch == Branch::Positive)
            cubic = u.c[j].v.max(0.0).pow(3);
        else
            cubic = u.c[j].v.cube();
        out.c[j].v = -lap.v + params.lambda[j] * u.c[j].v - params.mu[j] * cubic -
                     u.c[j].v * coupling;
    }
    return out;
}

/// The N Nehari scalars d_j E(U) u_j together with component norms and the
/// feasibility verdict (all residuals within tol and all components nonzero).
struct NehariReport {
    Eigen::VectorXd residuals;  // d_j E(U) u_j
    Eigen::VectorXd norms;      // ||u_j||_j^2
    bool feasible = false;
};

/// Component-nonzero threshold from the spec: ||u_j||_L2 > 1e-8 sqrt(area).
inline bool component_nonzero(const Field& f) {
    return l2_norm(f) > 1e-8 * std::sqrt(f.grid->area());
}

inline NehariReport nehari_residuals(const SystemParams& params, const State& u, Branch branch,
                                     double tol = 1e-8) {
    const PolarGrid& g = *u.grid();
    NehariReport rep;
    rep.residuals.resize(u.n());
    rep.norms.resize(u.n());
    bool ok = true;
    for (int j = 0; j < u.n(); ++j) {
        const double nj = h1_norm_sq(g, u.c[j], params.lambda[j]);
        double r = nj - params.mu[j] * detail::component_quartic(u.c[j], branch);
        for (int k = 0; k < u.n(); ++k)
            if (k != j) r -= params.beta(j, k) * detail::cross_quartic(u.c[j], u.c[k]);
        rep.residuals[j] = r;
        rep.norms[j] = nj;
        if (!component_nonzero(u.c[j]) || std::abs(r) > tol) ok = false;
    }
    rep.feasible = ok;
    return rep;
}

/// Outcome of the Nehari retraction scaling.
struct ScaleResult {
    bool feasible = false;
    Eigen::VectorXd t;  // componentwise positive scalings when feasible
    std::string reason;
};

namespace detail {

/// Assembles the s-linear system M s = d with s_j = t_j^2:
/// M_jj = mu_j int (u_j^(+))^4, M_jk = beta_jk int u_j^2 u_k^2, d_j = ||u_j||_j^2.
inline void nehari_system(const SystemParams& params, const State& u, Branch branch,
                          Eigen::MatrixXd& M, Eigen::VectorXd& d) {
    const int n = u.n();
    const PolarGrid& g = *u.grid();
    M.resize(n, n);
    d.resize(n);
    for (int j = 0; j < n; ++j) {
        d[j] = h1_norm_sq(g, u.c[j], params.lambda[j]);
        M(j, j) = params.mu[j] * component_quartic(u.c[j], branch);
        for (int k = j + 1; k < n; ++k) {
            const double c = cross_quartic(u.c[j], u.c[k]);
            M(j, k) = params.beta(j, k) * c;
            M(k, j) = params.beta(k, j) * c;
        }
    }
}

/// Damped Newton on the residual map t -> (d_j E(t o U) t_j u_j)_j, used when
/// the direct solve is unreliable. Returns positive t on success.
inline std::optional<Eigen::VectorXd> newton_retraction(const Eigen::MatrixXd& M,
                                                        const Eigen::VectorXd& d) {
    const int n = static_cast<int>(d.size());
    Eigen::VectorXd t = Eigen::VectorXd::Ones(n);
    for (int it = 0; it < 60; ++it) {
        // residual in t variables: F_j = t_j^2 d_j - t_j^2 sum_k M_jk t_k^2
        Eigen::VectorXd s = t.array().square().matrix();
        Eigen::VectorXd Ms = M * s;
        Eigen::VectorXd F(n);
        for (int j = 0; j < n; ++j) F[j] = t[j] * t[j] * (d[j] - Ms[j]);
        if (F.lpNorm<Eigen::Infinity>() <=
            1e-12 * (d.lpNorm<Eigen::Infinity>() + 1.0) * (1.0 + s.lpNorm<Eigen::Infinity>()))
            return t;
        Eigen::MatrixXd J(n, n);
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                double v = -t[j] * t[j] * 2.0 * t[k] * M(j, k);
                if (k == j) v += 2.0 * t[j] * (d[j] - Ms[j]) - 2.0 * t[j] * t[j] * t[j] * M(j, j);
                J(j, k) = v;
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible()) return std::nullopt;
        Eigen::VectorXd step = lu.solve(-F);
        double alpha = 1.0;
        // damping keeps t positive
        for (int j = 0; j < n; ++j)
            if (t[j] + step[j] <= 0.0) alpha = std::min(alpha, -0.5 * t[j] / step[j]);
        t += alpha * step;
    }
    return std::nullopt;
}

}  // namespace detail

/// Finds componentwise scalings t_j > 0 with d_j E(t o U)(t_j u_j) = 0, i.e.
/// retracts U onto the Nehari set. Returns infeasible when no positive
/// solution exists (Lemma 2.3 behavior for diagonal states under (D) tight).
inline ScaleResult nehari_scale(const SystemParams& params, const State& u, Branch branch) {
    for (int j = 0; j < u.n(); ++j)
        if (!component_nonzero(u.c[j]))
            throw std::invalid_argument("nehari_scale: zero component " + std::to_string(j + 1));

    Eigen::MatrixXd M;
    Eigen::VectorXd d;
    detail::nehari_system(params, u, branch, M, d);

    ScaleResult out;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    const double scale = M.cwiseAbs().maxCoeff() + d.cwiseAbs().maxCoeff();
    bool solved = false;
    Eigen::VectorXd s;
    if (lu.isInvertible()) {
        s = lu.solve(d);
        // one round of iterative refinement
        s += lu.solve(d - M * s);
        solved = (M * s - d).lpNorm<Eigen::Infinity>() <=
                 1e-10 * scale * std::max(1.0, s.lpNorm<Eigen::Infinity>());
    }
    if (solved) {
        if ((s.array() > 0.0).all()) {
            out.feasible = true;
            out.t = s.array().sqrt().matrix();
            return out;
        }
        out.reason = "no positive solution of the scaling system";
        return out;
    }
    // ill-conditioned or singular system: damped Newton on the residual map
    if (auto t = detail::newton_retraction(M, d)) {
        if ((t->array() > 0.0).all()) {
            out.feasible = true;
            out.t = *t;
            return out;
        }
    }
    out.reason = "scaling system singular (no retraction onto the Nehari set)";
    return out;
}

/// W-weighted Hessian of the energy at U (symmetric sparse matrix over the
/// stacked component unknowns, component-major, column-major fields inside):
/// diagonal blocks -Delta + lambda_j - 3 mu_j (u_j^+)^2 - sum beta_jk u_k^2,
/// off-diagonal blocks -2 beta_jk u_j u_k (nodal branch: 3 u_j^2).
inline Eigen::SparseMatrix<double> hessian_matrix(const SystemParams& params, const State& u,
                                                  Branch branch) {
    const PolarGrid& g = *u.grid();
    const int nr = g.n_r();
    const int nt = g.n_theta();
    const int nn = nr * nt;
    const int N = u.n();
    using T = Eigen::Triplet<double>;
    std::vector<T> trips;
    trips.reserve(static_cast<size_t>(nn) * N * (5 + N));
    auto idx = [nr, nn](int j, int i, int m) { return j * nn + i + m * nr; };

    std::vector<Eigen::ArrayXXd> sq(N);
    for (int j = 0; j < N; ++j) sq[j] = u.c[j].v.square();

    for (int j = 0; j < N; ++j) {
        // linear part: reuse the shifted-operator stencil entries
        Eigen::SparseMatrix<double> A = shifted_operator_matrix(g, 1, params.lambda[j]);
        for (int outer = 0; outer < A.outerSize(); ++outer)
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, outer); it; ++it)
                trips.emplace_back(j * nn + static_cast<int>(it.row()),
                                   j * nn + static_cast<int>(it.col()), it.value());
        for (int m = 0; m < nt; ++m) {
            for (int i = 0; i < nr; ++i) {
                const double w = g.ring_w[i];
                const double uj = u.c[j].v(i, m);
                double diag;
                if (branch == Branch::Positive) {
                    const double up = std::max(uj, 0.0);
                    diag = -3.0 * params.mu[j] * up * up;
                } else {
                    diag = -3.0 * params.mu[j] * uj * uj;
                }
                for (int k = 0; k < N; ++k)
                    if (k != j) diag -= params.beta(j, k) * sq[k](i, m);
                trips.emplace_back(idx(j, i, m), idx(j, i, m), w * diag);
                for (int k = 0; k < N; ++k) {
                    if (k == j) continue;
                    const double v = -2.0 * params.beta(j, k) * uj * u.c[k].v(i, m);
                    trips.emplace_back(idx(j, i, m), idx(k, i, m), w * v);
                }
            }
        }
    }
    Eigen::SparseMatrix<double> H(N * nn, N * nn);
    H.setFromTriplets(trips.begin(), trips.end());
    return H;
}

/// PDE residual fields of eq. (1.1):
///   -Delta u_j + lambda_j u_j - mu_j u_j^3 - u_j sum beta_jk u_k^2
/// evaluated with the verbatim cubic (coincides with the positive-branch
/// gradient at nonnegative states). Returns the max over components of the
/// discrete L2 norms.
inline double pde_residual(const SystemParams& params, const State& u) {
    const GridPtr g = u.grid();
    std::vector<Eigen::ArrayXXd> sq(u.n());
    for (int j = 0; j < u.n(); ++j) sq[j] = u.c[j].v.square();
    double worst = 0.0;
    for (int j = 0; j < u.n(); ++j) {
        Eigen::ArrayXXd coupling = Eigen::ArrayXXd::Zero(g->n_r(), g->n_theta());
        for (int k = 0; k < u.n(); ++k)
            if (k != j) coupling += params.beta(j, k) * sq[k];
        Field lap = laplacian_k(*g, u.c[j], 1);
        Field res(g);
        res.v = -lap.v + params.lambda[j] * u.c[j].v - params.mu[j] * u.c[j].v.cube() -
                u.c[j].v * coupling;
        worst = std::max(worst, l2_norm(res));
    }
    return worst;
}

}  // namespace nehari
