#pragma once
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>
#include <gknock/filter.hpp>

namespace gknock {

/// Stack the columns of Y: (Y_11..Y_n1, ..., Y_1r..Y_nr).
inline vec_t vectorize_response(const mat_t& Y)
{
    return Eigen::Map<const vec_t>(Y.data(), Y.size());
}

inline mat_t unvectorize_response(const vec_t& y, index_t n, index_t r)
{
    if (y.size() != n * r) throw validation_error("vectorized response has wrong length");
    return Eigen::Map<const mat_t>(y.data(), n, r);
}

/// G_j = {j, j+p, ..., j+(r-1)p} for j = 0..p-1 (0-based).
inline group_list_t multitask_groups(index_t p, index_t r)
{
    if (p < 1 || r < 1) throw validation_error("multitask grouping needs p, r >= 1");
    group_list_t groups(p);
    for (index_t j = 0; j < p; ++j) {
        groups[j].reserve(r);
        for (index_t t = 0; t < r; ++t) groups[j].push_back(j + t * p);
    }
    return groups;
}

/// Dense I_r (x) M.
inline mat_t kron_identity(index_t r, const mat_t& M)
{
    mat_t out = mat_t::Zero(r * M.rows(), r * M.cols());
    for (index_t t = 0; t < r; ++t) out.block(t * M.rows(), t * M.cols(), M.rows(), M.cols()) = M;
    return out;
}

/**
 * Implicit block-diagonal design I_r (x) M. Products act block-wise; the
 * nr x pr matrix is only formed by materialize().
 */
struct KroneckerDesign
{
    mat_t base;
    index_t r = 1;

    index_t rows() const { return base.rows() * r; }
    index_t cols() const { return base.cols() * r; }

    vec_t multiply(const vec_t& b) const
    {
        const Eigen::Map<const mat_t> B(b.data(), base.cols(), r);
        mat_t out = base * B;
        return Eigen::Map<const vec_t>(out.data(), out.size());
    }

    vec_t transpose_multiply(const vec_t& y) const
    {
        const Eigen::Map<const mat_t> Yv(y.data(), base.rows(), r);
        mat_t out = base.transpose() * Yv;
        return Eigen::Map<const vec_t>(out.data(), out.size());
    }

    mat_t materialize() const { return kron_identity(r, base); }
};

/// Repeated-block knockoff matrix I_r (x) X~.
inline KroneckerDesign block_knockoff(const mat_t& X_tilde, index_t r)
{
    if (r < 1) throw validation_error("number of responses must be at least 1");
    return KroneckerDesign{X_tilde, r};
}

/**
 * Gram operator for the block problem y = vec(Y), design I_r (x) Z, without
 * forming it. Coefficients are the q x r matrix C (q = columns of Z) stored
 * row-major internally; the caller's layout is vec(C), matching the columns of
 * I_r (x) Z.
 *
 * Grouping::rows makes each row of C a group (joint row sparsity).
 * Grouping::entries makes every coefficient its own group, ordered row by row.
 */
class KroneckerGramOperator
{
public:
    enum class Grouping
    {
        rows,
        entries,
    };

    KroneckerGramOperator(const mat_t& Z, const mat_t& Y, Grouping grouping = Grouping::rows,
                          weight_t weights = weight_t::none)
        : grouping_(grouping), q_(Z.cols()), r_(Y.cols())
    {
        if (Z.rows() != Y.rows()) {
            throw validation_error("design has " + std::to_string(Z.rows())
                                   + " rows but response has " + std::to_string(Y.rows()));
        }
        gram_ = gram(Z);
        const mat_t zty = Z.transpose() * Y;
        aty_.resize(q_ * r_);
        Eigen::Map<rowmat_t>(aty_.data(), q_, r_) = zty;
        yty_ = Y.squaredNorm();
        weight_ = (grouping_ == Grouping::rows && weights == weight_t::sqrt_size)
                      ? std::sqrt(static_cast<double>(r_))
                      : 1.0;
    }

    index_t dim() const { return q_ * r_; }
    index_t num_groups() const { return grouping_ == Grouping::rows ? q_ : q_ * r_; }
    index_t group_begin(index_t g) const { return grouping_ == Grouping::rows ? g * r_ : g; }
    index_t group_size(index_t) const { return grouping_ == Grouping::rows ? r_ : 1; }
    double weight(index_t) const { return weight_; }
    const vec_t& aty() const { return aty_; }
    double yty() const { return yty_; }
    index_t responses() const { return r_; }

    void gram_apply(const vec_t& b, const std::vector<index_t>& nonzero, vec_t& out) const
    {
        out.setZero(dim());
        Eigen::Map<rowmat_t> O(out.data(), q_, r_);
        const Eigen::Map<const rowmat_t> C(b.data(), q_, r_);
        index_t last = -1;
        for (auto g : nonzero) {
            const index_t row = grouping_ == Grouping::rows ? g : g / r_;
            if (row == last) continue;
            last = row;
            O.noalias() += gram_.col(row) * C.row(row);
        }
    }

    /// lambda_max(I_r (x) Z^T Z) = lambda_max(Z^T Z).
    double lipschitz() const
    {
        Eigen::SelfAdjointEigenSolver<mat_t> es(gram_, Eigen::EigenvaluesOnly);
        return es.eigenvalues().maxCoeff();
    }

    vec_t to_internal(const vec_t& ext) const
    {
        vec_t out(dim());
        Eigen::Map<rowmat_t>(out.data(), q_, r_) = Eigen::Map<const mat_t>(ext.data(), q_, r_);
        return out;
    }

    vec_t to_external(const vec_t& in) const
    {
        vec_t out(dim());
        Eigen::Map<mat_t>(out.data(), q_, r_) = Eigen::Map<const rowmat_t>(in.data(), q_, r_);
        return out;
    }

private:
    Grouping grouping_;
    index_t q_, r_;
    mat_t gram_;
    vec_t aty_;
    double yty_ = 0.0;
    double weight_ = 1.0;
};

struct MultitaskFilterResult
{
    std::vector<index_t> selected_features;  // 0-based rows of B
    FilterResult inner;
    KnockoffAugmentation knockoffs;
    PathResult path;
    double lambda_max = 0.0;
};

/**
 * Multitask knockoff: plain knockoffs on X, then the group filter on
 * (I_r (x) [X X~], vec(Y)) with one group per feature.
 */
inline MultitaskFilterResult run_multitask_knockoff(const mat_t& X, const mat_t& Y, double q,
                                                    variant_t variant,
                                                    const FilterConfig& cfg = {})
{
    if (X.rows() != Y.rows()) {
        throw validation_error("design has " + std::to_string(X.rows()) + " rows but response has "
                               + std::to_string(Y.rows()));
    }
    if (!Y.allFinite()) throw validation_error("response matrix has non-finite entries");
    MultitaskFilterResult out;
    out.knockoffs = construct_group_knockoffs(singleton_design(X), cfg.seed,
                                              EquivariantS{cfg.construction});
    const KroneckerGramOperator op(augment(X, out.knockoffs.X_tilde), Y,
                                   KroneckerGramOperator::Grouping::rows, cfg.weights);
    KnockoffStatistics stats = knockoff_statistics(op, cfg);
    out.inner = apply_threshold(std::move(stats.W), q, variant);
    out.path = std::move(stats.path);
    out.lambda_max = stats.lambda_max;
    out.selected_features = out.inner.selected;
    return out;
}

/**
 * Pooled knockoff statistics: one statistic per coefficient of the vectorized
 * problem, ordered feature-major (index j * r + t).
 */
inline WStatistics pooled_statistics(const mat_t& X, const mat_t& X_tilde, const mat_t& Y,
                                     const FilterConfig& cfg)
{
    const KroneckerGramOperator op(augment(X, X_tilde), Y,
                                   KroneckerGramOperator::Grouping::entries, weight_t::none);
    return knockoff_statistics(op, cfg).W;
}

/// Features with at least one selected coefficient under feature-major indexing.
inline std::vector<index_t> features_from_entries(const std::vector<index_t>& entries, index_t r)
{
    std::vector<index_t> out;
    for (auto e : entries) {
        const index_t j = e / r;
        if (out.empty() || out.back() != j) out.push_back(j);
    }
    return out;
}

} // namespace gknock
