#pragma once

#include "nehari/params.hpp"
#include "nehari/state.hpp"

#include <algorithm>
#include <stdexcept>
#include <variant>

namespace nehari {

/// Blockwise cyclic left shift: within each block of p components,
/// (u_1, ..., u_p) -> (u_2, ..., u_p, u_1).
inline State sigma_permute(const State& u, const SystemParams& params) {
    if (u.n() != params.N)
        throw std::invalid_argument("sigma_permute: component count mismatch");
    State out = u;
    const int p = params.p;
    for (int b = 0; b < params.blocks(); ++b)
        for (int l = 0; l < p; ++l) out.c[b * p + l] = u.c[b * p + (l + 1) % p];
    return out;
}

inline State sigma_power(const State& u, const SystemParams& params, int t) {
    State out = u;
    const int p = params.p;
    const int s = ((t % p) + p) % p;
    for (int b = 0; b < params.blocks(); ++b)
        for (int l = 0; l < p; ++l) out.c[b * p + l] = u.c[b * p + (l + s) % p];
    return out;
}

/// Orthogonal projection onto the symmetry class, constructed from a
/// fundamental-window representative so that membership is exact at index
/// level: positive branch output satisfies u_{j+1} = rotate(u_j, n/(pk))
/// bit-exactly and each component is exactly (n/k)-periodic; nodal branch
/// output satisfies u = -rotate(u, n/(2k)) bit-exactly.
inline State project_class(const State& u, const SymmetryClass& cls) {
    const GridPtr g = u.grid();
    if (!g) throw std::invalid_argument("project_class: empty state");
    const int nt = g->n_theta();
    const int nr = g->n_r();

    if (cls.branch == Branch::Positive) {
        const int p = cls.p;
        const int k = cls.k;
        if (g->spec.alignment_order % (p * k) != 0)
            throw std::invalid_argument("project_class: alignment_order not divisible by p*k");
        if (u.n() % p != 0)
            throw std::invalid_argument("project_class: component count not divisible by p");
        const int delta = nt / (p * k);   // shift of 2*pi/(pk)
        const int period = nt / k;        // component period
        State out = u;
        const int B = u.n() / p;
        for (int b = 0; b < B; ++b) {
            // block average pulled back to the first slot, then folded over
            // the k rotation copies on the fundamental window [0, period)
            Eigen::ArrayXXd win = Eigen::ArrayXXd::Zero(nr, period);
            for (int m = 0; m < period; ++m) {
                for (int s = 0; s < k; ++s) {
                    const int col = (m + s * period) % nt;
                    for (int l = 0; l < p; ++l) {
                        const int src = wrap_index(col + l * delta, nt);
                        win.col(m) += u.c[b * p + l].v.col(src);
                    }
                }
            }
            win /= double(p * k);
            Field rep(g);
            for (int m = 0; m < nt; ++m) rep.v.col(m) = win.col(m % period);
            out.c[b * p] = rep;
            for (int l = 1; l < p; ++l) out.c[b * p + l] = rotate_field(rep, l * delta);
        }
        return out;
    }

    // nodal branch: componentwise average over <-R_{2pi/(2k)}> with exact
    // alternating-sign tiling
    const int k = cls.k;
    if (g->spec.alignment_order % (2 * k) != 0)
        throw std::invalid_argument("project_class: alignment_order not divisible by 2*k");
    const int h = nt / (2 * k);
    State out = u;
    for (int j = 0; j < u.n(); ++j) {
        Eigen::ArrayXXd win = Eigen::ArrayXXd::Zero(nr, h);
        for (int m = 0; m < h; ++m) {
            for (int t = 0; t < 2 * k; ++t) {
                const int src = (m + t * h) % nt;
                if (t % 2 == 0)
                    win.col(m) += u.c[j].v.col(src);
                else
                    win.col(m) -= u.c[j].v.col(src);
            }
        }
        win /= double(2 * k);
        Field rep(g);
        for (int m = 0; m < nt; ++m) {
            if ((m / h) % 2 == 0)
                rep.v.col(m) = win.col(m % h);
            else
                rep.v.col(m) = -win.col(m % h);
        }
        out.c[j] = rep;
    }
    return out;
}

/// Normalized rotation defect ||f - rotate(f, steps)|| / max(||f||, eps);
/// zero iff f is invariant under the shift.
inline double invariance_defect(const Field& f, int steps) {
    const int nt = f.grid->n_theta();
    const int s = wrap_index(steps, nt);
    const PolarGrid& g = *f.grid;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        const double w = g.ring_w[i];
        for (int m = 0; m < nt; ++m) {
            const double a = f.v(i, m);
            const double d = a - f.v(i, wrap_index(m - s, nt));
            num += w * d * d;
            den += w * a * a;
        }
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

inline double invariance_defect(const State& u, int steps) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < u.n(); ++j) {
        const Field& f = u.c[j];
        const PolarGrid& g = *f.grid;
        const int nt = g.n_theta();
        const int s = wrap_index(steps, nt);
        for (int i = 0; i < g.n_r(); ++i) {
            const double w = g.ring_w[i];
            for (int m = 0; m < nt; ++m) {
                const double a = f.v(i, m);
                const double d = a - f.v(i, wrap_index(m - s, nt));
                num += w * d * d;
                den += w * a * a;
            }
        }
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

/// Result of the minimal-period scan: either "radial" or the largest divisor
/// m of n_theta such that the field is 2*pi/m periodic within tol.
struct PeriodResult {
    bool radial = false;
    int m = 1;  // minimal period is 2*pi/m
};

inline PeriodResult minimal_period(const Field& f, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("minimal_period: tol must be positive");
    const int nt = f.grid->n_theta();
    // divisors of n_theta in descending order; the invariant shifts form a
    // cyclic group, so the first hit is the generator
    for (int m = nt; m >= 1; --m) {
        if (nt % m != 0) continue;
        if (invariance_defect(f, nt / m) < tol) {
            if (m == nt) return {true, nt};
            return {false, m};
        }
    }
    return {false, 1};  // unreachable: m = 1 always passes (full turn)
}

}  // namespace nehari
