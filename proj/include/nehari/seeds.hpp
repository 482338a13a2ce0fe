#pragma once

#include "nehari/energy.hpp"
#include "nehari/symmetry.hpp"

#include <complex>
#include <utility>
#include <vector>

namespace nehari {

/// Smooth compactly supported unit bump on (0,1); exactly zero outside.
inline double bump01(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return std::exp(4.0 - 1.0 / (x * (1.0 - x)));
}

/// Sphere point and bump placement for the equivariant seed maps. The m
/// complex coordinates drive one bump family each; family (i, b) occupies its
/// own radial annulus (pairwise disjoint), index i * B + b.
struct SeedSpec {
    int m = 1;
    std::vector<std::complex<double>> z;                    // |z| = 1 in C^m
    std::vector<std::pair<double, double>> radial_windows;  // m * B entries
    double angular_width_frac = 0.75;                       // of the sector 2pi/(pk)
};

namespace detail {

inline void validate_seed_spec(const PolarGrid& grid, const SeedSpec& spec, int blocks) {
    if (spec.m < 1 || static_cast<int>(spec.z.size()) != spec.m)
        throw std::invalid_argument("seed: z must hold m complex coordinates");
    double norm = 0.0;
    for (const auto& zi : spec.z) norm += std::norm(zi);
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-9)
        throw std::invalid_argument("seed: z must lie on the unit sphere");
    if (static_cast<int>(spec.radial_windows.size()) != spec.m * blocks)
        throw std::invalid_argument("seed: need one radial window per (i, b) family");
    for (const auto& w : spec.radial_windows) {
        if (!(w.first < w.second) || w.first < grid.spec.r_inner ||
            w.second > grid.spec.r_outer)
            throw std::invalid_argument("seed: radial window outside the domain");
        if (w.second - w.first < 2.5 * grid.dr)
            throw std::invalid_argument("seed: radial window unresolved by the grid");
    }
    auto sorted = spec.radial_windows;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].first < sorted[i - 1].second)
            throw std::invalid_argument("seed: radial windows must be pairwise disjoint");
    if (!(spec.angular_width_frac > 0.0) || !(spec.angular_width_frac >= 0.0) ||
        spec.angular_width_frac >= 1.0)
        throw std::invalid_argument("seed: angular_width_frac must lie in (0,1)");
}

inline Eigen::ArrayXd radial_bump(const PolarGrid& grid, double lo, double hi) {
    Eigen::ArrayXd out(grid.n_r());
    for (int i = 0; i < grid.n_r(); ++i) out[i] = bump01((grid.r[i] - lo) / (hi - lo));
    return out;
}

}  // namespace detail

/// Equal disjoint radial windows for m families x B blocks, leaving a margin
/// at the domain boundary and a gap between windows.
inline std::vector<std::pair<double, double>> default_radial_windows(const PolarGrid& grid,
                                                                     int m, int blocks) {
    const double lo = grid.spec.r_inner + 0.06 * (grid.spec.r_outer - grid.spec.r_inner);
    const double hi = grid.spec.r_outer - 0.06 * (grid.spec.r_outer - grid.spec.r_inner);
    const int count = m * blocks;
    const double slot = (hi - lo) / count;
    std::vector<std::pair<double, double>> out(count);
    for (int w = 0; w < count; ++w)
        out[w] = {lo + w * slot, lo + (w + 0.85) * slot};
    return out;
}

/// The Prop. 2.8 map: sector bumps replicated over the k rotations, laid out
/// as p rotated copies per block, then retracted componentwise (disjoint
/// supports make the scaling system diagonal). Phases are quantized to exact
/// grid rotations, so psi(e^{2 pi i / p} z) = sigma psi(z) holds bit-exactly.
inline State seed_positive(GridPtr grid, const SymmetryClass& cls, const SeedSpec& spec,
                           const SystemParams& params) {
    if (cls.branch != Branch::Positive)
        throw std::invalid_argument("seed_positive: class must be the positive branch");
    const int p = cls.p;
    const int k = cls.k;
    const int nt = grid->n_theta();
    const int B = params.blocks();
    if (nt % (p * k) != 0)
        throw std::invalid_argument("seed_positive: n_theta must be divisible by p*k");
    detail::validate_seed_spec(*grid, spec, B);

    const int delta = nt / (p * k);  // sector width in angular steps
    const int period = nt / k;
    const double sector = 2.0 * kPi / (p * k);
    const double width = spec.angular_width_frac * sector;
    if (width < 3.0 * grid->dtheta)
        throw std::invalid_argument("seed_positive: grid does not resolve the angular bumps");
    const double theta_lo = 0.5 * (sector - width);

    // R_{2pi/k}-invariant bump family per (i, b): angular lobe inside the base
    // sector tiled over the k rotation copies, times the radial window bump
    std::vector<Eigen::ArrayXXd> family(static_cast<size_t>(spec.m) * B);
    Eigen::ArrayXd lobe(period);
    for (int mw = 0; mw < period; ++mw)
        lobe[mw] = bump01((mw * grid->dtheta - theta_lo) / width);
    for (int i = 0; i < spec.m; ++i) {
        for (int b = 0; b < B; ++b) {
            const auto& win = spec.radial_windows[i * B + b];
            Eigen::ArrayXd rad = detail::radial_bump(*grid, win.first, win.second);
            Eigen::ArrayXXd f(grid->n_r(), nt);
            for (int m = 0; m < nt; ++m) f.col(m) = rad * lobe[m % period];
            family[i * B + b] = std::move(f);
        }
    }

    // quantized phase shifts (exact index rotations)
    std::vector<int> shift(spec.m);
    for (int i = 0; i < spec.m; ++i) {
        const double theta_i = std::arg(spec.z[i]);
        shift[i] = wrap_index(static_cast<int>(std::lround(theta_i / (k * grid->dtheta))), nt);
    }

    State u(grid, params.N);
    for (int b = 0; b < B; ++b) {
        for (int l = 0; l < p; ++l) {
            Field& comp = u.c[b * p + l];
            for (int i = 0; i < spec.m; ++i) {
                const double ri = std::abs(spec.z[i]);
                if (ri == 0.0) continue;
                const Eigen::ArrayXXd& f = family[i * B + b];
                const int s = wrap_index(shift[i] + l * delta, nt);
                for (int m = 0; m < nt; ++m)
                    comp.v.col(m) += ri * f.col(wrap_index(m - s, nt));
            }
        }
    }

    // componentwise closed-form retraction (diagonal system for disjoint supports)
    for (int j = 0; j < params.N; ++j) {
        const double d = h1_norm_sq(*grid, u.c[j], params.lambda[j]);
        const double q = detail::positive_part_quartic(u.c[j]);
        if (!(q > 0.0))
            throw std::logic_error("seed_positive: degenerate bump (zero quartic integral)");
        u.c[j].v *= std::sqrt(d / (params.mu[j] * q));
    }
    return u;
}

/// The Section-3 map: 2p overlapping angular windows eta_l select base
/// functions phi_l that are exactly odd under -R_{2pi/(2k)} (alternating-sign
/// tiling) and live in disjoint radial sub-annuli. Phases are quantized to a
/// fine lattice commensurate with 2pi/p, again making the sigma-equivariance
/// an index identity.
inline State seed_nodal(GridPtr grid, const SymmetryClass& cls, const SeedSpec& spec,
                        const SystemParams& params) {
    if (cls.branch != Branch::Nodal)
        throw std::invalid_argument("seed_nodal: class must be the nodal branch");
    const int k = cls.k;
    const int p = params.p;
    const int nt = grid->n_theta();
    const int B = params.blocks();
    if (nt % (2 * k) != 0)
        throw std::invalid_argument("seed_nodal: n_theta must be divisible by 2*k");
    detail::validate_seed_spec(*grid, spec, B);

    const int h = nt / (2 * k);  // half-period in angular steps

    // angular sign profile, exactly odd under the half-rotation
    Eigen::ArrayXd tau(nt);
    for (int m = 0; m < nt; ++m) {
        const double lobe = bump01((m % h + 0.5) / h);
        tau[m] = ((m / h) % 2 == 0) ? lobe : -lobe;
    }

    // base functions phi_l^{i,b}, l = 0..2p-1, in disjoint radial sub-annuli
    const int L = 2 * p;
    std::vector<Eigen::ArrayXd> radial(static_cast<size_t>(spec.m) * B * L);
    for (int i = 0; i < spec.m; ++i) {
        for (int b = 0; b < B; ++b) {
            const auto& win = spec.radial_windows[i * B + b];
            const double slot = (win.second - win.first) / L;
            if (slot < 2.0 * grid->dr)
                throw std::invalid_argument("seed_nodal: radial window too narrow for 2p lobes");
            for (int l = 0; l < L; ++l) {
                radial[(i * B + b) * L + l] = detail::radial_bump(
                    *grid, win.first + l * slot, win.first + (l + 0.9) * slot);
            }
        }
    }

    // window functions eta_l on a phase lattice of Q = 2p*Q0 units per turn
    const int Q0 = 1024;
    const int Q = L * Q0;  // pi/p corresponds to Q0 units
    auto window_coeff = [&](long q, int l) {
        long d = (q - static_cast<long>(l) * Q0) % Q;
        if (d < -Q / 2) d += Q;
        if (d >= Q / 2) d -= Q;
        if (std::llabs(d) >= Q0) return 0.0;
        return bump01((static_cast<double>(d) / Q0 + 1.0) / 2.0);
    };

    std::vector<long> qphase(spec.m);
    for (int i = 0; i < spec.m; ++i) {
        const double theta_i = std::arg(spec.z[i]);
        long q = std::lround(theta_i * Q / (2.0 * kPi)) % Q;
        if (q < 0) q += Q;
        qphase[i] = q;
    }

    State u(grid, params.N);
    for (int b = 0; b < B; ++b) {
        for (int l = 0; l < p; ++l) {  // component slot; phase offset 2pi(l+1)/p
            Field& comp = u.c[b * p + l];
            for (int i = 0; i < spec.m; ++i) {
                const double ri = std::abs(spec.z[i]);
                if (ri == 0.0) continue;
                const long q = qphase[i] + static_cast<long>(l + 1) * 2 * Q0;
                for (int w = 0; w < L; ++w) {
                    const double c = window_coeff(q, w);
                    if (c == 0.0) continue;
                    const Eigen::ArrayXd& rad = radial[(i * B + b) * L + w];
                    for (int m = 0; m < nt; ++m) comp.v.col(m) += (ri * c) * (rad * tau[m]);
                }
            }
        }
    }

    for (int j = 0; j < params.N; ++j) {
        const double d = h1_norm_sq(*grid, u.c[j], params.lambda[j]);
        const double q = detail::quartic(u.c[j]);
        if (!(q > 0.0))
            throw std::logic_error("seed_nodal: degenerate bump (zero quartic integral)");
        u.c[j].v *= std::sqrt(d / (params.mu[j] * q));
    }
    return u;
}

}  // namespace nehari
