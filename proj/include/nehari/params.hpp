#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace nehari {

/// Coefficients of the N-coupled system together with the block structure
/// (p | N, B = N/p blocks of p consecutive components). The diagonal of beta
/// is tied to mu (beta_jj = mu_j).
struct SystemParams {
    int N = 2;
    int p = 2;
    Eigen::VectorXd lambda;  // size N, positive, constant within each block
    Eigen::VectorXd mu;      // size N, positive
    Eigen::MatrixXd beta;    // N x N symmetric, off-diagonal <= 0

    int blocks() const { return N / p; }

    static SystemParams uniform(int N, int p, double lambda, double mu, double beta_offdiag) {
        SystemParams s;
        s.N = N;
        s.p = p;
        s.lambda = Eigen::VectorXd::Constant(N, lambda);
        s.mu = Eigen::VectorXd::Constant(N, mu);
        s.beta = Eigen::MatrixXd::Constant(N, N, beta_offdiag);
        for (int j = 0; j < N; ++j) s.beta(j, j) = mu;
        return s;
    }
};

inline bool is_prime(int p) {
    if (p < 2) return false;
    for (int d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

/// Checks assumptions (A)-(D) and the structural preconditions. Returns a
/// human-readable violation list; empty means valid.
inline std::vector<std::string> validate_params(const SystemParams& s) {
    std::vector<std::string> out;
    if (s.N < 1) {
        out.push_back("N must be positive");
        return out;
    }
    if (!is_prime(s.p)) out.push_back("p must be prime");
    if (s.p < 1 || s.N % std::max(s.p, 1) != 0) out.push_back("p must divide N");
    if (s.lambda.size() != s.N || s.mu.size() != s.N || s.beta.rows() != s.N ||
        s.beta.cols() != s.N) {
        out.push_back("lambda/mu/beta dimensions must match N");
        return out;
    }
    if (!out.empty()) return out;

    const int B = s.N / s.p;
    const double tol = 1e-12;

    // (A) lambda positive, constant within each block
    for (int b = 0; b < B; ++b) {
        for (int l = 0; l < s.p; ++l) {
            const int j = b * s.p + l;
            if (!(s.lambda[j] > 0.0))
                out.push_back("(A): lambda[" + std::to_string(j + 1) + "] must be positive");
            if (s.lambda[j] != s.lambda[b * s.p])
                out.push_back("(A): lambda not constant within block " + std::to_string(b + 1));
        }
    }
    // (B) symmetry, off-diagonal sign, mu positive
    for (int j = 0; j < s.N; ++j) {
        if (!(s.mu[j] > 0.0))
            out.push_back("(B): mu[" + std::to_string(j + 1) + "] must be positive");
        if (s.beta(j, j) != s.mu[j])
            out.push_back("(B): beta diagonal must equal mu (beta_jj := mu_j)");
        for (int i = 0; i < s.N; ++i) {
            if (i == j) continue;
            if (std::abs(s.beta(i, j) - s.beta(j, i)) > tol)
                out.push_back("(B): beta must be symmetric at (" + std::to_string(i + 1) + "," +
                              std::to_string(j + 1) + ")");
            if (s.beta(i, j) > 0.0)
                out.push_back("(B): beta[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) +
                              "] must be <= 0");
        }
    }
    // (C) invariance of beta under the within-block cyclic shift, blockwise.
    // The product of the adjacent row/column swaps composes to the cycle
    // (b*p, b*p+1, ..., b*p+p-1) applied simultaneously to rows and columns.
    {
        std::vector<int> perm(s.N);
        for (int j = 0; j < s.N; ++j) perm[j] = j;
        for (int b = 0; b < B; ++b)
            for (int l = 0; l < s.p; ++l) perm[b * s.p + l] = b * s.p + (l + 1) % s.p;
        bool ok = true;
        for (int i = 0; i < s.N && ok; ++i)
            for (int j = 0; j < s.N && ok; ++j)
                if (std::abs(s.beta(perm[i], perm[j]) - s.beta(i, j)) > tol) ok = false;
        if (!ok) out.push_back("(C): beta not invariant under the blockwise cyclic shift");
    }
    // (D) mu_j + sum of in-block couplings <= 0
    for (int b = 0; b < B; ++b) {
        for (int l = 0; l < s.p; ++l) {
            const int j = b * s.p + l;
            double acc = s.mu[j];
            for (int l2 = 0; l2 < s.p; ++l2) {
                const int i = b * s.p + l2;
                if (i != j) acc += s.beta(i, j);
            }
            if (acc > 0.0)
                out.push_back("(D): mu + in-block beta sum positive for component " +
                              std::to_string(j + 1));
        }
    }
    return out;
}

inline void require_valid(const SystemParams& s) {
    auto v = validate_params(s);
    if (!v.empty()) throw std::invalid_argument("invalid system parameters: " + v.front());
}

enum class Branch { Positive, Nodal };

/// Symmetry class selecting M_k^+ (positive branch; rotation-permutation
/// fixed space) or M_k^nod (nodal branch; sign-rotation fixed space).
struct SymmetryClass {
    Branch branch = Branch::Positive;
    int k = 1;
    int p = 2;  // used by the positive branch only; nodal flip order is 2

    static SymmetryClass positive(int k, int p) { return {Branch::Positive, k, p}; }
    static SymmetryClass nodal(int k) { return {Branch::Nodal, k, 2}; }

    /// order of the combined group action (pk positive, 2k nodal)
    int group_order() const { return branch == Branch::Positive ? p * k : 2 * k; }
};

}  // namespace nehari
