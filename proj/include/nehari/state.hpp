#pragma once

#include "nehari/grid.hpp"

#include <vector>

namespace nehari {

/// N-tuple of fields on a shared grid, one per equation component.
struct State {
    std::vector<Field> c;

    State() = default;
    State(GridPtr g, int n) {
        c.reserve(n);
        for (int j = 0; j < n; ++j) c.emplace_back(g);
    }

    int n() const { return static_cast<int>(c.size()); }
    GridPtr grid() const { return c.empty() ? nullptr : c.front().grid; }

    Field& operator[](int j) { return c[j]; }
    const Field& operator[](int j) const { return c[j]; }
};

inline State axpy(const State& x, double a, const State& y) {
    State out = x;
    for (int j = 0; j < out.n(); ++j) out.c[j].v += a * y.c[j].v;
    return out;
}

inline State scale_components(const State& u, const Eigen::VectorXd& t) {
    State out = u;
    for (int j = 0; j < out.n(); ++j) out.c[j].v *= t[j];
    return out;
}

inline double inner(const State& a, const State& b) {
    double acc = 0.0;
    for (int j = 0; j < a.n(); ++j) acc += inner(a.c[j], b.c[j]);
    return acc;
}

inline double l2_norm_sq(const State& u) { return inner(u, u); }
inline double l2_norm(const State& u) { return std::sqrt(l2_norm_sq(u)); }

}  // namespace nehari
