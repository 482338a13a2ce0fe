#pragma once

#include "nehari/grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace nehari {

/// Finite subgroup of O(n), n in {2, 3}, stored by its elements.
struct FiniteGroup {
    std::vector<Eigen::MatrixXd> elements;

    int dim() const { return elements.empty() ? 0 : static_cast<int>(elements.front().rows()); }
    int order() const { return static_cast<int>(elements.size()); }
};

namespace detail {

inline bool matrix_close(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
    return (a - b).cwiseAbs().maxCoeff() <= tol;
}

inline bool contains(const std::vector<Eigen::MatrixXd>& set, const Eigen::MatrixXd& m,
                     double tol) {
    for (const auto& e : set)
        if (matrix_close(e, m, tol)) return true;
    return false;
}

}  // namespace detail

inline bool is_orthogonal(const Eigen::MatrixXd& m, double tol = 1e-12) {
    return detail::matrix_close(m.transpose() * m,
                                Eigen::MatrixXd::Identity(m.rows(), m.cols()), tol);
}

/// Builds a FiniteGroup from explicit elements, verifying identity membership,
/// closure, and inverse closure entrywise to 1e-12.
inline FiniteGroup group_from_elements(std::vector<Eigen::MatrixXd> elements) {
    if (elements.empty()) throw std::invalid_argument("group: no elements");
    const int n = static_cast<int>(elements.front().rows());
    if (n != 2 && n != 3) throw std::invalid_argument("group: dimension must be 2 or 3");
    const double tol = 1e-12;
    for (const auto& e : elements) {
        if (e.rows() != n || e.cols() != n)
            throw std::invalid_argument("group: mixed element dimensions");
        if (!is_orthogonal(e, 1e-10))
            throw std::invalid_argument("group: element is not orthogonal");
    }
    if (!detail::contains(elements, Eigen::MatrixXd::Identity(n, n), tol))
        throw std::invalid_argument("group: identity missing");
    for (const auto& a : elements) {
        if (!detail::contains(elements, a.transpose(), tol))
            throw std::invalid_argument("group: not closed under inverses");
        for (const auto& b : elements)
            if (!detail::contains(elements, a * b, tol))
                throw std::invalid_argument("group: not closed under products");
    }
    return FiniteGroup{std::move(elements)};
}

/// Generates the closure of a generating set (breadth-first products).
inline FiniteGroup group_generate(const std::vector<Eigen::MatrixXd>& generators,
                                  int max_order = 256) {
    if (generators.empty()) throw std::invalid_argument("group: no generators");
    const int n = static_cast<int>(generators.front().rows());
    const double tol = 1e-12;
    std::vector<Eigen::MatrixXd> elems;
    elems.push_back(Eigen::MatrixXd::Identity(n, n));
    bool grew = true;
    while (grew) {
        grew = false;
        for (size_t i = 0; i < elems.size(); ++i) {
            for (const auto& g : generators) {
                Eigen::MatrixXd prod = elems[i] * g;
                if (!detail::contains(elems, prod, tol)) {
                    elems.push_back(prod);
                    grew = true;
                    if (static_cast<int>(elems.size()) > max_order)
                        throw std::runtime_error("group_generate: order cap exceeded");
                }
            }
        }
    }
    return group_from_elements(std::move(elems));
}

inline Eigen::MatrixXd rotation2d(double theta) {
    Eigen::MatrixXd m(2, 2);
    m << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return m;
}

/// Rotation about the x3-axis (paper's R_theta for n = 3).
inline Eigen::MatrixXd rotation3d(double theta) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
    m(0, 0) = std::cos(theta);
    m(0, 1) = -std::sin(theta);
    m(1, 0) = std::sin(theta);
    m(1, 1) = std::cos(theta);
    return m;
}

inline Eigen::MatrixXd z_flip3d() {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
    m(2, 2) = -1.0;
    return m;
}

/// Group generated by coordinate permutations and (x1,x2,x3) -> (x1,-x2,-x3).
inline FiniteGroup tetrahedral_group() {
    Eigen::MatrixXd swap01 = Eigen::MatrixXd::Zero(3, 3);
    swap01(0, 1) = swap01(1, 0) = swap01(2, 2) = 1.0;
    Eigen::MatrixXd cycle = Eigen::MatrixXd::Zero(3, 3);
    cycle(0, 1) = cycle(1, 2) = cycle(2, 0) = 1.0;
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(3, 3);
    d(1, 1) = d(2, 2) = -1.0;
    return group_generate({swap01, cycle, d});
}

/// Cyclic rotation group <R_{2pi/k}> in 2-D.
inline FiniteGroup cyclic_rotation_group2d(int k) {
    if (k < 1) throw std::invalid_argument("cyclic group: k must be positive");
    std::vector<Eigen::MatrixXd> elems;
    for (int s = 0; s < k; ++s) elems.push_back(rotation2d(2.0 * kPi * s / k));
    return group_from_elements(std::move(elems));
}

/// Deduplicated orbit {g x0 : g in G}; points within 1e-9 are merged.
inline std::vector<Eigen::VectorXd> orbit(const FiniteGroup& group, const Eigen::VectorXd& x0) {
    if (x0.norm() == 0.0) throw std::invalid_argument("orbit: x0 must be nonzero");
    std::vector<Eigen::VectorXd> pts;
    for (const auto& g : group.elements) {
        Eigen::VectorXd y = g * x0;
        bool dup = false;
        for (const auto& q : pts)
            if ((q - y).norm() <= 1e-9) {
                dup = true;
                break;
            }
        if (!dup) pts.push_back(std::move(y));
    }
    return pts;
}

/// Verification record for Definition 5.1.
struct AdmissiblePairReport {
    bool normalizer_ok = false;   // b g b^-1 in G for all g
    bool power_in_group = false;  // b^p in G
    bool orbit_disjoint = false;  // G(b^s x0) pairwise disjoint, s = 0..p-1
    double min_interorbit_distance = 0.0;
    std::vector<std::vector<Eigen::VectorXd>> witness_orbits;

    bool admissible() const { return normalizer_ok && power_in_group && orbit_disjoint; }
};

inline AdmissiblePairReport check_admissible(const FiniteGroup& group, const Eigen::MatrixXd& b,
                                             int p, const Eigen::VectorXd& x0) {
    if (!is_orthogonal(b, 1e-10))
        throw std::invalid_argument("check_admissible: b must be orthogonal");
    if (b.rows() != group.dim())
        throw std::invalid_argument("check_admissible: dimension mismatch");
    AdmissiblePairReport rep;
    const double tol = 1e-9;

    rep.normalizer_ok = true;
    const Eigen::MatrixXd binv = b.transpose();
    for (const auto& g : group.elements) {
        if (!detail::contains(group.elements, b * g * binv, tol)) {
            rep.normalizer_ok = false;
            break;
        }
    }
    Eigen::MatrixXd bp = Eigen::MatrixXd::Identity(b.rows(), b.cols());
    for (int s = 0; s < p; ++s) bp = b * bp;
    rep.power_in_group = detail::contains(group.elements, bp, tol);

    rep.witness_orbits.clear();
    Eigen::VectorXd x = x0;
    for (int s = 0; s < p; ++s) {
        rep.witness_orbits.push_back(orbit(group, x));
        x = b * x;
    }
    double min_dist = std::numeric_limits<double>::infinity();
    for (int s = 0; s < p; ++s)
        for (int t = s + 1; t < p; ++t)
            for (const auto& a : rep.witness_orbits[s])
                for (const auto& c : rep.witness_orbits[t])
                    min_dist = std::min(min_dist, (a - c).norm());
    rep.min_interorbit_distance = (p > 1) ? min_dist : std::numeric_limits<double>::infinity();
    rep.orbit_disjoint = rep.min_interorbit_distance > 1e-9;
    return rep;
}

}  // namespace nehari
