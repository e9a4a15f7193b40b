#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <gknock/grouped_model.hpp>

namespace gknock {

/// Knockoff matrix and the pieces used to build it.
struct KnockoffAugmentation
{
    mat_t X_tilde;  // n x p
    mat_t S;        // p x p, group-block-diagonal
    double gamma = 0.0;
    mat_t U_tilde;  // n x p, orthonormal, orthogonal to col(X)
    mat_t C;        // C^T C = 2S - S Sigma^{-1} S
    double gram_deviation = 0.0;   // max |X~^T X~ - Sigma|
    double cross_deviation = 0.0;  // max |X~^T X - (Sigma - S)|
    double clipped_eigenvalue = 0.0;
};

/// Outcome of checking the group knockoff conditions.
struct ConditionReport
{
    double gram_deviation = 0.0;
    double cross_deviation = 0.0;
    double off_block_max = 0.0;
    double s_min_eigenvalue = 0.0;
    double two_sigma_minus_s_min_eigenvalue = 0.0;
    double tol = 0.0;
    bool pass = false;
};

struct ConstructionOptions
{
    /// Block declared singular when its min eigenvalue is below eig_floor * trace.
    double eig_floor = 1e-10;
    /// Relative shrink applied to gamma when the PSD constraint binds. Zero disables.
    double gamma_shrink = 0.0;
};

namespace detail {

inline mat_t symmetrize(const mat_t& M) { return 0.5 * (M + M.transpose()); }

inline mat_t extract_block(const mat_t& M, const std::vector<index_t>& rows,
                           const std::vector<index_t>& cols)
{
    mat_t out(rows.size(), cols.size());
    for (size_t a = 0; a < rows.size(); ++a)
        for (size_t b = 0; b < cols.size(); ++b) out(a, b) = M(rows[a], cols[b]);
    return out;
}

inline void scatter_block(mat_t& M, const std::vector<index_t>& idx, const mat_t& B)
{
    for (size_t a = 0; a < idx.size(); ++a)
        for (size_t b = 0; b < idx.size(); ++b) M(idx[a], idx[b]) = B(a, b);
}

inline double min_eigenvalue(const mat_t& M)
{
    Eigen::SelfAdjointEigenSolver<mat_t> es(symmetrize(M), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

} // namespace detail

/**
 * Block-diagonal D with D_{G_i,G_i} = Sigma_{G_i,G_i}^{-1/2} (symmetric root).
 * Throws numerical_error naming the first singular block.
 */
inline mat_t block_inverse_sqrt(const mat_t& Sigma, const group_list_t& groups,
                                double eig_floor = 1e-10)
{
    const index_t p = Sigma.rows();
    mat_t D = mat_t::Zero(p, p);
    for (size_t g = 0; g < groups.size(); ++g) {
        const auto& idx = groups[g];
        mat_t block = detail::symmetrize(detail::extract_block(Sigma, idx, idx));
        Eigen::SelfAdjointEigenSolver<mat_t> es(block);
        const double lmin = es.eigenvalues().minCoeff();
        const double trace = block.trace();
        if (!(lmin > eig_floor * std::max(trace, 1e-300))) {
            throw numerical_error("group " + std::to_string(g + 1)
                                  + " covariance block is singular (min eigenvalue "
                                  + std::to_string(lmin) + ")");
        }
        const vec_t inv_root = es.eigenvalues().cwiseSqrt().cwiseInverse();
        const mat_t root = es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose();
        detail::scatter_block(D, idx, detail::symmetrize(root));
    }
    return D;
}

/// gamma = min(1, 2 lambda_min(D Sigma D)), clamped to [0, 1].
inline double equivariant_gamma(const mat_t& Sigma, const group_list_t& groups,
                                double eig_floor = 1e-10)
{
    const mat_t D = block_inverse_sqrt(Sigma, groups, eig_floor);
    const double lmin = detail::min_eigenvalue(D * Sigma * D);
    if (!(lmin > eig_floor)) {
        throw numerical_error("design too degenerate for knockoffs: lambda_min(D Sigma D) = "
                              + std::to_string(lmin));
    }
    return std::clamp(std::min(1.0, 2.0 * lmin), 0.0, 1.0);
}

/// S = diag(gamma * Sigma_{G_1,G_1}, ..., gamma * Sigma_{G_m,G_m}); off-block entries exactly 0.
inline mat_t build_s_matrix(const mat_t& Sigma, const group_list_t& groups, double gamma)
{
    mat_t S = mat_t::Zero(Sigma.rows(), Sigma.cols());
    for (const auto& idx : groups) {
        for (auto a : idx)
            for (auto b : idx) S(a, b) = gamma * 0.5 * (Sigma(a, b) + Sigma(b, a));
    }
    return S;
}

/**
 * n x p orthonormal matrix whose columns are orthogonal to col(X).
 *
 * A seeded Gaussian matrix is projected off col(X) and orthonormalized with
 * two-pass classical Gram-Schmidt. Exact zeros survive the process, so a
 * canonical-basis X yields exact orthogonality.
 */
inline mat_t orthonormal_complement(const mat_t& X, std::uint64_t seed)
{
    const index_t n = X.rows(), p = X.cols();
    if (n < 2 * p) {
        throw validation_error("knockoff construction needs n >= 2p (n = " + std::to_string(n)
                               + ", p = " + std::to_string(p)
                               + "); the n >= p row-augmentation extension is not supported");
    }
    Eigen::ColPivHouseholderQR<mat_t> qr(X);
    if (qr.rank() < p) {
        throw validation_error("design is rank deficient (rank " + std::to_string(qr.rank())
                               + " < " + std::to_string(p) + ")");
    }
    const mat_t Q1 = qr.householderQ() * mat_t::Identity(n, p);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    mat_t U(n, p);
    for (index_t j = 0; j < p; ++j)
        for (index_t i = 0; i < n; ++i) U(i, j) = normal(rng);

    // A draw that is (numerically) inside the span of X and earlier columns is
    // replaced by a fresh one; this only happens when the seed stream collides
    // with the data, e.g. X generated from the same seed.
    constexpr int max_redraws = 8;
    for (index_t k = 0; k < p; ++k) {
        for (int attempt = 0;; ++attempt) {
            vec_t v = U.col(k);
            const double scale = v.norm();
            for (int pass = 0; pass < 2; ++pass) {
                v.noalias() -= Q1 * (Q1.transpose() * v);
                if (k > 0) {
                    const vec_t h = U.leftCols(k).transpose() * v;
                    v.noalias() -= U.leftCols(k) * h;
                }
            }
            const double nrm = v.norm();
            if (nrm > 1e-6 * scale) {
                U.col(k) = v / nrm;
                break;
            }
            if (attempt == max_redraws) {
                throw numerical_error("failed to complete orthonormal basis at column "
                                      + std::to_string(k + 1));
            }
            for (index_t i = 0; i < n; ++i) U(i, k) = normal(rng);
        }
    }
    return U;
}

/// Result of psd_factor: C with C^T C ~= M after eigenvalue clipping.
struct PsdFactor
{
    mat_t C;
    double clipped = 0.0;  // magnitude of the most negative eigenvalue clipped to zero
};

/**
 * Symmetric square root of a PSD matrix via eigendecomposition, clipping negative
 * eigenvalues to zero. Throws if an eigenvalue is below -clip_tol; the default
 * tolerance is 1e-6 times the spectral norm.
 */
inline PsdFactor psd_factor(const mat_t& M, double clip_tol = -1.0)
{
    Eigen::SelfAdjointEigenSolver<mat_t> es(detail::symmetrize(M));
    vec_t evals = es.eigenvalues();
    const double scale = evals.cwiseAbs().maxCoeff();
    if (clip_tol < 0) clip_tol = 1e-6 * scale;
    PsdFactor out;
    for (index_t i = 0; i < evals.size(); ++i) {
        if (evals[i] < -clip_tol) {
            throw numerical_error("matrix is not PSD: eigenvalue " + std::to_string(evals[i]));
        }
        if (evals[i] < 0) {
            out.clipped = std::max(out.clipped, -evals[i]);
            evals[i] = 0;
        }
    }
    // symmetric square root, so M = I gives C = I exactly
    const mat_t& V = es.eigenvectors();
    out.C = detail::symmetrize(V * evals.cwiseSqrt().asDiagonal() * V.transpose());
    return out;
}

/**
 * Equivariant choice of S: S_i = gamma * Sigma_{G_i,G_i}. Alternative S
 * constructions plug into construct_group_knockoffs with the same signature.
 */
struct EquivariantS
{
    ConstructionOptions options;

    std::pair<mat_t, double> operator()(const mat_t& Sigma, const group_list_t& groups) const
    {
        double gamma = equivariant_gamma(Sigma, groups, options.eig_floor);
        if (gamma < 1.0) gamma *= (1.0 - options.gamma_shrink);
        return {build_s_matrix(Sigma, groups, gamma), gamma};
    }
};

/// Group knockoffs X~ = X (I - Sigma^{-1} S) + U~ C.
template <class SConstruction = EquivariantS>
inline KnockoffAugmentation construct_group_knockoffs(
    const GroupedDesign& design, std::uint64_t seed,
    const SConstruction& choose_s = SConstruction{})
{
    const mat_t& X = design.X();
    const index_t p = design.p();
    if (design.n() < 2 * p) {
        throw validation_error("knockoff construction needs n >= 2p (n = " + std::to_string(design.n())
                               + ", p = " + std::to_string(p) + ")");
    }
    const mat_t Sigma = gram(X);
    auto [S, gamma] = choose_s(Sigma, design.groups());
    const mat_t U = orthonormal_complement(X, seed);

    Eigen::LLT<mat_t> llt(Sigma);
    if (llt.info() != Eigen::Success) {
        throw numerical_error("Gram matrix is not invertible");
    }
    const mat_t SigInvS = llt.solve(S);
    const mat_t M = detail::symmetrize(2.0 * S - S * SigInvS);
    PsdFactor factor = psd_factor(M);

    KnockoffAugmentation aug;
    aug.X_tilde = X * (mat_t::Identity(p, p) - SigInvS) + U * factor.C;
    aug.S = std::move(S);
    aug.gamma = gamma;
    aug.U_tilde = U;
    aug.C = std::move(factor.C);
    aug.clipped_eigenvalue = factor.clipped;
    aug.gram_deviation = (aug.X_tilde.transpose() * aug.X_tilde - Sigma).cwiseAbs().maxCoeff();
    aug.cross_deviation =
        (aug.X_tilde.transpose() * X - (Sigma - aug.S)).cwiseAbs().maxCoeff();
    return aug;
}

/// Plain knockoffs (every feature its own group) for a bare matrix.
inline KnockoffAugmentation construct_knockoffs(const mat_t& X, std::uint64_t seed)
{
    return construct_group_knockoffs(singleton_design(X), seed);
}

/**
 * Check the group knockoff conditions within tol. The Gram conditions are
 * X~^T X~ = Sigma and X~^T X = Sigma - S; S must also be group-block-diagonal
 * with both S and 2 Sigma - S positive semidefinite.
 */
inline ConditionReport verify_knockoff_conditions(const mat_t& X, const mat_t& X_tilde,
                                                  const mat_t& S, const group_list_t& groups,
                                                  double tol)
{
    const index_t p = X.cols();
    const mat_t Sigma = gram(X);
    ConditionReport r;
    r.tol = tol;
    r.gram_deviation = (X_tilde.transpose() * X_tilde - Sigma).cwiseAbs().maxCoeff();
    r.cross_deviation = (X_tilde.transpose() * X - (Sigma - S)).cwiseAbs().maxCoeff();

    std::vector<index_t> owner(p, -1);
    for (size_t g = 0; g < groups.size(); ++g)
        for (auto j : groups[g]) owner[j] = static_cast<index_t>(g);
    for (index_t a = 0; a < p; ++a)
        for (index_t b = 0; b < p; ++b)
            if (owner[a] != owner[b]) r.off_block_max = std::max(r.off_block_max, std::abs(S(a, b)));

    r.s_min_eigenvalue = detail::min_eigenvalue(S);
    r.two_sigma_minus_s_min_eigenvalue = detail::min_eigenvalue(2.0 * Sigma - S);
    r.pass = r.gram_deviation <= tol && r.cross_deviation <= tol && r.off_block_max <= tol
             && r.s_min_eigenvalue >= -tol && r.two_sigma_minus_s_min_eigenvalue >= -tol;
    return r;
}

inline ConditionReport verify_knockoff_conditions(const GroupedDesign& design,
                                                  const KnockoffAugmentation& aug, double tol)
{
    return verify_knockoff_conditions(design.X(), aug.X_tilde, aug.S, design.groups(), tol);
}

} // namespace gknock
