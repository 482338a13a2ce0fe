#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace nehari {

inline constexpr double kPi = 3.14159265358979323846;

/// Parameters of a cell-centered polar discretization of a ball or annulus.
///
/// r_inner == 0 encodes a ball, r_inner > 0 an annulus. n_theta must be a
/// multiple of 2 and of alignment_order, so rotations by 2*pi/alignment_order
/// and by pi are exact column shifts.
struct GridSpec {
    double r_inner = 0.0;
    double r_outer = 1.0;
    int n_r = 32;
    int n_theta = 48;
    int alignment_order = 2;
};

/// Cell-centered polar grid with midpoint quadrature weights.
///
/// Radial nodes sit at r_i = r_inner + (i + 1/2) dr (no node at r = 0),
/// angular nodes at theta_m = m * dtheta. The quadrature weight of node
/// (i, m) is r_i * dr * dtheta. Dirichlet boundaries are handled by ghost
/// reflection (u_ghost = -u_interior) at r_outer and, for an annulus, at
/// r_inner; for a ball the inner face has radius 0 and carries no flux.
struct PolarGrid {
    GridSpec spec;
    double dr = 0.0;
    double dtheta = 0.0;
    Eigen::ArrayXd r;       // cell-center radii, size n_r
    Eigen::ArrayXd ring_w;  // r_i * dr * dtheta

    int n_r() const { return spec.n_r; }
    int n_theta() const { return spec.n_theta; }
    bool is_ball() const { return spec.r_inner == 0.0; }
    double area() const {
        return kPi * (spec.r_outer * spec.r_outer - spec.r_inner * spec.r_inner);
    }
    // exact face radii of cell i
    double face_lo(int i) const { return spec.r_inner + i * dr; }
    double face_hi(int i) const { return spec.r_inner + (i + 1) * dr; }
};

using GridPtr = std::shared_ptr<const PolarGrid>;

inline GridPtr build_grid(const GridSpec& spec) {
    if (spec.r_inner < 0.0)
        throw std::invalid_argument("grid: r_inner must be >= 0");
    if (spec.r_outer <= spec.r_inner)
        throw std::invalid_argument("grid: r_outer must exceed r_inner");
    if (spec.n_r < 2 || spec.n_theta < 4)
        throw std::invalid_argument("grid: n_r >= 2 and n_theta >= 4 required");
    if (spec.alignment_order < 1)
        throw std::invalid_argument("grid: alignment_order must be positive");
    if (spec.n_theta % spec.alignment_order != 0)
        throw std::invalid_argument("grid: n_theta must be divisible by alignment_order");
    if (spec.n_theta % 2 != 0)
        throw std::invalid_argument("grid: n_theta must be even");

    auto g = std::make_shared<PolarGrid>();
    g->spec = spec;
    g->dr = (spec.r_outer - spec.r_inner) / spec.n_r;
    g->dtheta = 2.0 * kPi / spec.n_theta;
    g->r.resize(spec.n_r);
    g->ring_w.resize(spec.n_r);
    for (int i = 0; i < spec.n_r; ++i) {
        g->r[i] = spec.r_inner + (i + 0.5) * g->dr;
        g->ring_w[i] = g->r[i] * g->dr * g->dtheta;
    }
    return g;
}

/// One scalar grid function; values(i, m) with i radial, m angular.
struct Field {
    GridPtr grid;
    Eigen::ArrayXXd v;  // n_r x n_theta

    Field() = default;
    explicit Field(GridPtr g) : grid(std::move(g)) {
        v = Eigen::ArrayXXd::Zero(grid->n_r(), grid->n_theta());
    }
    Field(GridPtr g, Eigen::ArrayXXd values) : grid(std::move(g)), v(std::move(values)) {}

    bool all_finite() const { return v.isFinite().all(); }
};

inline bool same_grid(const Field& a, const Field& b) {
    if (a.grid == b.grid) return true;
    if (!a.grid || !b.grid) return false;
    const GridSpec& x = a.grid->spec;
    const GridSpec& y = b.grid->spec;
    return x.r_inner == y.r_inner && x.r_outer == y.r_outer && x.n_r == y.n_r &&
           x.n_theta == y.n_theta;
}

inline void require_same_grid(const Field& a, const Field& b, const char* op) {
    if (!same_grid(a, b))
        throw std::invalid_argument(std::string(op) + ": fields live on different grids");
}

inline int wrap_index(int m, int n) {
    int w = m % n;
    return w < 0 ? w + n : w;
}

/// Midpoint-rule quadrature of f over the domain. Plain row-major
/// accumulation; the arithmetic order is part of the contract (tests compare
/// against a dense-summation oracle for exact equality).
inline double integrate(const PolarGrid& grid, const Field& f) {
    if (!f.grid || f.grid->spec.n_r != grid.spec.n_r || f.grid->spec.n_theta != grid.spec.n_theta ||
        f.grid->spec.r_inner != grid.spec.r_inner || f.grid->spec.r_outer != grid.spec.r_outer)
        throw std::invalid_argument("integrate: field does not match grid");
    double acc = 0.0;
    for (int i = 0; i < grid.n_r(); ++i) {
        const double w = grid.ring_w[i];
        for (int m = 0; m < grid.n_theta(); ++m) acc += w * f.v(i, m);
    }
    return acc;
}

inline double integrate(const Field& f) { return integrate(*f.grid, f); }

/// Quadrature inner product  sum_{i,m} w_im a_im b_im.
inline double inner(const Field& a, const Field& b) {
    require_same_grid(a, b, "inner");
    const PolarGrid& g = *a.grid;
    double acc = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        const double w = g.ring_w[i];
        for (int m = 0; m < g.n_theta(); ++m) acc += w * a.v(i, m) * b.v(i, m);
    }
    return acc;
}

inline double l2_norm_sq(const Field& f) { return inner(f, f); }
inline double l2_norm(const Field& f) { return std::sqrt(l2_norm_sq(f)); }

/// Anisotropic Laplacian (1/r) d_r(r d_r u) + (k^2/r^2) d_theta^2 u with the
/// second-order conservative stencil; Dirichlet at r_outer (ghost -u), and at
/// r_inner for an annulus. k = 1 is the standard Laplacian.
inline Field laplacian_k(const PolarGrid& grid, const Field& f, int k) {
    if (k < 1) throw std::invalid_argument("laplacian_k: k must be positive");
    if (!f.grid || f.grid->spec.n_r != grid.spec.n_r || f.grid->spec.n_theta != grid.spec.n_theta ||
        f.grid->spec.r_inner != grid.spec.r_inner || f.grid->spec.r_outer != grid.spec.r_outer)
        throw std::invalid_argument("laplacian_k: field does not match grid");
    const int nr = grid.n_r();
    const int nt = grid.n_theta();
    const double dr = grid.dr;
    const double dth = grid.dtheta;
    const double k2 = double(k) * double(k);
    Field out(f.grid);
    for (int m = 0; m < nt; ++m) {
        const int mp = wrap_index(m + 1, nt);
        const int mm = wrap_index(m - 1, nt);
        for (int i = 0; i < nr; ++i) {
            const double ri = grid.r[i];
            // radial fluxes at the cell faces
            double flux_hi, flux_lo;
            if (i + 1 < nr) {
                flux_hi = grid.face_hi(i) * (f.v(i + 1, m) - f.v(i, m)) / dr;
            } else {
                flux_hi = grid.face_hi(i) * (-2.0 * f.v(i, m)) / dr;  // ghost = -u
            }
            if (i > 0) {
                flux_lo = grid.face_lo(i) * (f.v(i, m) - f.v(i - 1, m)) / dr;
            } else if (grid.is_ball()) {
                flux_lo = 0.0;  // face radius is exactly 0
            } else {
                flux_lo = grid.face_lo(i) * (2.0 * f.v(i, m)) / dr;  // ghost = -u
            }
            const double rad = (flux_hi - flux_lo) / (ri * dr);
            const double ang = k2 / (ri * ri) * (f.v(i, mp) - 2.0 * f.v(i, m) + f.v(i, mm)) / (dth * dth);
            out.v(i, m) = rad + ang;
        }
    }
    return out;
}

/// Exact rotation by steps * dtheta (column shift, no interpolation).
inline Field rotate_field(const Field& f, int steps) {
    const int nt = f.grid->n_theta();
    const int s = wrap_index(steps, nt);
    if (s == 0) return f;
    Field out(f.grid);
    for (int m = 0; m < nt; ++m) out.v.col(m) = f.v.col(wrap_index(m - s, nt));
    return out;
}

/// f(-x): rotation by pi, exact for even n_theta.
inline Field antipodal(const Field& f) {
    const int nt = f.grid->n_theta();
    if (nt % 2 != 0) throw std::invalid_argument("antipodal: n_theta must be even");
    return rotate_field(f, nt / 2);
}

/// Reflection about the axis through the origin at angle axis_index * dtheta:
/// m -> (2*axis_index - m) mod n_theta. Exact index permutation.
inline Field reflect_field(const Field& f, int axis_index) {
    const int nt = f.grid->n_theta();
    Field out(f.grid);
    for (int m = 0; m < nt; ++m) out.v.col(m) = f.v.col(wrap_index(2 * axis_index - m, nt));
    return out;
}

/// Gradient quadratic form with the k^2/r^2 angular metric. This is exactly
/// the quadratic form <-Delta_k f, f>_w of the laplacian_k stencil: forward
/// differences in r on the half-node metric (boundary faces carry the ghost
/// terms 2 r_face f^2 / dr) and forward periodic differences in theta.
inline double h1_seminorm_sq_k(const PolarGrid& grid, const Field& f, int k) {
    const int nr = grid.n_r();
    const int nt = grid.n_theta();
    const double dr = grid.dr;
    const double dth = grid.dtheta;
    const double k2 = double(k) * double(k);
    double acc = 0.0;
    // radial faces
    for (int m = 0; m < nt; ++m) {
        for (int i = 0; i + 1 < nr; ++i) {
            const double d = f.v(i + 1, m) - f.v(i, m);
            acc += dth * grid.face_hi(i) * d * d / dr;
        }
        const double fb = f.v(nr - 1, m);
        acc += dth * 2.0 * grid.spec.r_outer * fb * fb / dr;
        if (!grid.is_ball()) {
            const double f0 = f.v(0, m);
            acc += dth * 2.0 * grid.spec.r_inner * f0 * f0 / dr;
        }
    }
    // angular faces
    for (int i = 0; i < nr; ++i) {
        const double c = k2 * dr / (dth * grid.r[i]);
        for (int m = 0; m < nt; ++m) {
            const double diff = f.v(i, wrap_index(m + 1, nt)) - f.v(i, m);
            acc += c * diff * diff;
        }
    }
    return acc;
}

/// ||f||^2 = int |grad f|^2 + lambda int f^2, the quadratic form of the
/// (-Delta_1 + lambda) stencil.
inline double h1_norm_sq(const PolarGrid& grid, const Field& f, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("h1_norm_sq: lambda must be positive");
    return h1_seminorm_sq_k(grid, f, 1) + lambda * inner(f, f);
}

/// Sparse matrix of W * (-Delta_k + lambda), symmetric positive definite in
/// the unknowns ordered column-major (index i + m * n_r). Used for the
/// preconditioner solves and as assembly reference.
inline Eigen::SparseMatrix<double> shifted_operator_matrix(const PolarGrid& grid, int k,
                                                           double lambda) {
    const int nr = grid.n_r();
    const int nt = grid.n_theta();
    const double dr = grid.dr;
    const double dth = grid.dtheta;
    const double k2 = double(k) * double(k);
    using T = Eigen::Triplet<double>;
    std::vector<T> trips;
    trips.reserve(static_cast<size_t>(nr) * nt * 5);
    auto idx = [nr](int i, int m) { return i + m * nr; };
    for (int m = 0; m < nt; ++m) {
        const int mp = wrap_index(m + 1, nt);
        const int mm = wrap_index(m - 1, nt);
        for (int i = 0; i < nr; ++i) {
            const double ri = grid.r[i];
            const double w = grid.ring_w[i];
            double diag = lambda * w;
            // radial couplings (scaled by dtheta/dr)
            const double cr = dth / dr;
            if (i + 1 < nr) {
                const double a = grid.face_hi(i) * cr;
                trips.emplace_back(idx(i, m), idx(i + 1, m), -a);
                diag += a;
            } else {
                diag += 2.0 * grid.spec.r_outer * cr;
            }
            if (i > 0) {
                const double a = grid.face_lo(i) * cr;
                trips.emplace_back(idx(i, m), idx(i - 1, m), -a);
                diag += a;
            } else if (!grid.is_ball()) {
                diag += 2.0 * grid.spec.r_inner * cr;
            }
            // angular couplings (scaled by k^2 dr / (dtheta r))
            const double ca = k2 * dr / (dth * ri);
            trips.emplace_back(idx(i, m), idx(i, mp), -ca);
            trips.emplace_back(idx(i, m), idx(i, mm), -ca);
            diag += 2.0 * ca;
            trips.emplace_back(idx(i, m), idx(i, m), diag);
        }
    }
    Eigen::SparseMatrix<double> A(nr * nt, nr * nt);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

/// Cached factorization of W * (-Delta_k + lambda); solves
/// (-Delta_k + lambda) x = rhs in field space.
class ShiftedInverse {
  public:
    ShiftedInverse(GridPtr grid, int k, double lambda) : grid_(std::move(grid)) {
        Eigen::SparseMatrix<double> A = shifted_operator_matrix(*grid_, k, lambda);
        solver_.compute(A);
        if (solver_.info() != Eigen::Success)
            throw std::runtime_error("ShiftedInverse: factorization failed");
    }

    Field apply(const Field& rhs) const {
        const int nr = grid_->n_r();
        const int nt = grid_->n_theta();
        Eigen::VectorXd b(nr * nt);
        for (int m = 0; m < nt; ++m)
            for (int i = 0; i < nr; ++i) b[i + m * nr] = grid_->ring_w[i] * rhs.v(i, m);
        Eigen::VectorXd x = solver_.solve(b);
        Field out(rhs.grid);
        for (int m = 0; m < nt; ++m)
            for (int i = 0; i < nr; ++i) out.v(i, m) = x[i + m * nr];
        return out;
    }

  private:
    GridPtr grid_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

}  // namespace nehari
