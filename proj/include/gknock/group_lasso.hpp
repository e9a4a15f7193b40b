#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>
#include <gknock/types.hpp>

namespace gknock {

/**
 * Group lasso
 *
 *      minimize_b  1/2 ||y - A b||_2^2 + lambda * sum_g w_g ||b_g||_2
 *
 * solved in Gram form: the solver only touches A^T A, A^T y and y^T y through
 * an operator. Operators keep each group's coefficients contiguous in an
 * internal layout and translate to and from the caller's layout.
 *
 * An operator provides:
 *      dim(), num_groups(), group_begin(g), group_size(g), weight(g),
 *      aty(), yty(), gram_apply(b, nonzero_groups, out), lipschitz(),
 *      to_internal(ext), to_external(internal).
 */

/// Dense Gram operator for arbitrary (possibly non-contiguous) groups.
class DenseGramOperator
{
public:
    DenseGramOperator(const mat_t& gram, const vec_t& aty, double yty,
                      const group_list_t& groups, weight_t weights = weight_t::none)
        : yty_(yty)
    {
        const index_t d = gram.rows();
        if (gram.cols() != d || aty.size() != d) {
            throw validation_error("Gram operator dimension mismatch");
        }
        perm_.reserve(d);
        begins_.reserve(groups.size() + 1);
        weights_.reserve(groups.size());
        std::vector<char> seen(d, 0);
        for (const auto& g : groups) {
            begins_.push_back(static_cast<index_t>(perm_.size()));
            for (auto j : g) {
                if (j < 0 || j >= d || seen[j]) {
                    throw validation_error("groups do not partition the coefficient vector");
                }
                seen[j] = 1;
                perm_.push_back(j);
            }
            weights_.push_back(weights == weight_t::none ? 1.0
                                                         : std::sqrt(static_cast<double>(g.size())));
        }
        begins_.push_back(static_cast<index_t>(perm_.size()));
        if (static_cast<index_t>(perm_.size()) != d) {
            throw validation_error("groups do not cover every coefficient");
        }
        gram_.resize(d, d);
        aty_.resize(d);
        for (index_t b = 0; b < d; ++b) {
            aty_[b] = aty[perm_[b]];
            for (index_t a = 0; a < d; ++a) gram_(a, b) = gram(perm_[a], perm_[b]);
        }
    }

    /// Build from a design matrix A and response y.
    static DenseGramOperator from_design(const mat_t& A, const vec_t& y,
                                         const group_list_t& groups,
                                         weight_t weights = weight_t::none)
    {
        if (A.rows() != y.size()) {
            throw validation_error("design has " + std::to_string(A.rows()) + " rows but response has "
                                   + std::to_string(y.size()));
        }
        mat_t G = mat_t::Zero(A.cols(), A.cols());
        G.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
        G = G.selfadjointView<Eigen::Lower>();
        return DenseGramOperator(G, A.transpose() * y, y.squaredNorm(), groups, weights);
    }

    index_t dim() const { return gram_.rows(); }
    index_t num_groups() const { return static_cast<index_t>(weights_.size()); }
    index_t group_begin(index_t g) const { return begins_[g]; }
    index_t group_size(index_t g) const { return begins_[g + 1] - begins_[g]; }
    double weight(index_t g) const { return weights_[g]; }
    const vec_t& aty() const { return aty_; }
    double yty() const { return yty_; }

    void gram_apply(const vec_t& b, const std::vector<index_t>& nonzero, vec_t& out) const
    {
        out.setZero(dim());
        for (auto g : nonzero) {
            const index_t s = group_begin(g), k = group_size(g);
            out.noalias() += gram_.middleCols(s, k) * b.segment(s, k);
        }
    }

    /// Largest eigenvalue of the Gram matrix.
    double lipschitz() const
    {
        if (dim() == 0) return 0.0;
        Eigen::SelfAdjointEigenSolver<mat_t> es(gram_, Eigen::EigenvaluesOnly);
        return es.eigenvalues().maxCoeff();
    }

    vec_t to_internal(const vec_t& ext) const
    {
        vec_t out(dim());
        for (index_t k = 0; k < dim(); ++k) out[k] = ext[perm_[k]];
        return out;
    }

    vec_t to_external(const vec_t& in) const
    {
        vec_t out(dim());
        for (index_t k = 0; k < dim(); ++k) out[perm_[k]] = in[k];
        return out;
    }

private:
    mat_t gram_;
    vec_t aty_;
    double yty_;
    std::vector<index_t> perm_;
    std::vector<index_t> begins_;
    std::vector<double> weights_;
};

/// Evenly log-spaced decreasing penalty values.
struct LambdaGrid
{
    std::vector<double> values;
    double lambda_max = 0.0;
    double min_ratio = 0.0;

    size_t size() const { return values.size(); }

    LambdaGrid scaled(double c) const
    {
        LambdaGrid g = *this;
        for (auto& v : g.values) v *= c;
        g.lambda_max *= c;
        return g;
    }
};

inline LambdaGrid make_lambda_grid(double lambda_max, int K, double min_ratio)
{
    if (K < 2) throw validation_error("grid size must be at least 2");
    if (!(min_ratio > 0.0 && min_ratio < 1.0)) {
        throw validation_error("grid min ratio must lie in (0, 1)");
    }
    if (!(lambda_max > 0.0)) {
        throw validation_error("lambda_max is zero: response is orthogonal to every feature");
    }
    LambdaGrid grid;
    grid.lambda_max = lambda_max;
    grid.min_ratio = min_ratio;
    grid.values.resize(K);
    const double log_ratio = std::log(min_ratio);
    for (int k = 0; k < K; ++k) {
        grid.values[k] = lambda_max * std::exp(log_ratio * k / (K - 1));
    }
    grid.values.front() = lambda_max;
    grid.values.back() = lambda_max * min_ratio;
    return grid;
}

struct SolverOptions
{
    double kkt_tol = 1e-6;
    int max_iter = 10000;
    /// Iterations between KKT checks.
    int check_every = 5;
};

struct SolveResult
{
    vec_t b;
    int iterations = 0;
    double kkt = 0.0;
    double objective = 0.0;
    bool converged = false;
};

namespace detail {

template <class Op>
inline std::vector<index_t> nonzero_groups(const Op& op, const vec_t& b)
{
    std::vector<index_t> out;
    for (index_t g = 0; g < op.num_groups(); ++g) {
        if (!b.segment(op.group_begin(g), op.group_size(g)).isZero(0.0)) out.push_back(g);
    }
    return out;
}

/// Gradient of the smooth part: A^T A b - A^T y.
template <class Op>
inline void smooth_gradient(const Op& op, const vec_t& b, vec_t& grad)
{
    op.gram_apply(b, nonzero_groups(op, b), grad);
    grad -= op.aty();
}

template <class Op>
inline double kkt_scale(const Op& op)
{
    const double m = op.aty().size() ? op.aty().cwiseAbs().maxCoeff() : 0.0;
    return 1.0 / std::max(1.0, m);
}

template <class Op>
inline double kkt_from_gradient(const Op& op, double lambda, const vec_t& b, const vec_t& grad)
{
    double worst = 0.0;
    for (index_t g = 0; g < op.num_groups(); ++g) {
        const index_t s = op.group_begin(g), k = op.group_size(g);
        const double lw = lambda * op.weight(g);
        const auto bg = b.segment(s, k);
        const double bn = bg.norm();
        // residual-correlation is -grad
        double r;
        if (bn > 0) {
            r = (-grad.segment(s, k) - lw * bg / bn).norm();
        } else {
            r = std::max(0.0, grad.segment(s, k).norm() - lw);
        }
        worst = std::max(worst, r);
    }
    return worst * kkt_scale(op);
}

template <class Op>
inline double penalty(const Op& op, double lambda, const vec_t& b)
{
    double s = 0.0;
    for (index_t g = 0; g < op.num_groups(); ++g) {
        s += op.weight(g) * b.segment(op.group_begin(g), op.group_size(g)).norm();
    }
    return lambda * s;
}

template <class Op>
inline double objective(const Op& op, double lambda, const vec_t& b)
{
    vec_t Gb;
    op.gram_apply(b, nonzero_groups(op, b), Gb);
    return 0.5 * op.yty() - b.dot(op.aty()) + 0.5 * b.dot(Gb) + penalty(op, lambda, b);
}

template <class Op>
inline void group_soft_threshold(const Op& op, double thresh_scale, vec_t& v)
{
    for (index_t g = 0; g < op.num_groups(); ++g) {
        auto seg = v.segment(op.group_begin(g), op.group_size(g));
        const double t = thresh_scale * op.weight(g);
        const double nrm = seg.norm();
        if (nrm <= t) {
            seg.setZero();
        } else {
            seg *= (1.0 - t / nrm);
        }
    }
}

} // namespace detail

/// lambda above which b = 0 is optimal: max_g ||A_g^T y|| / w_g.
template <class Op>
inline double lambda_max(const Op& op)
{
    double out = 0.0;
    for (index_t g = 0; g < op.num_groups(); ++g) {
        const double nrm = op.aty().segment(op.group_begin(g), op.group_size(g)).norm();
        out = std::max(out, nrm / op.weight(g));
    }
    return out;
}

/// Scaled KKT residual of b (internal layout).
template <class Op>
inline double kkt_residual(const Op& op, double lambda, const vec_t& b)
{
    vec_t grad;
    detail::smooth_gradient(op, b, grad);
    return detail::kkt_from_gradient(op, lambda, b, grad);
}

/**
 * Accelerated proximal gradient (FISTA with gradient-based adaptive restart)
 * with fixed step 1/L. Works entirely in the operator's internal layout.
 * Never returns a point with larger objective than init.
 */
template <class Op>
inline SolveResult solve_group_lasso(const Op& op, double lambda, const vec_t& init,
                                     double lipschitz, const SolverOptions& opts = {})
{
    const index_t d = op.dim();
    if (init.size() != d) throw validation_error("initial coefficients have wrong dimension");
    if (lambda < 0) throw validation_error("lambda must be non-negative");

    SolveResult res;
    vec_t x = init;
    vec_t grad(d);
    detail::smooth_gradient(op, x, grad);
    res.kkt = detail::kkt_from_gradient(op, lambda, x, grad);
    if (res.kkt <= opts.kkt_tol || !(lipschitz > 0)) {
        res.b = std::move(x);
        res.converged = res.kkt <= opts.kkt_tol;
        res.objective = detail::objective(op, lambda, res.b);
        return res;
    }

    const double step = 1.0 / lipschitz;
    vec_t yk = x, x_new(d), grad_y = grad;
    bool grad_y_ready = true;
    double t = 1.0;
    int it = 0;
    for (it = 1; it <= opts.max_iter; ++it) {
        if (!grad_y_ready) detail::smooth_gradient(op, yk, grad_y);
        x_new = yk - step * grad_y;
        detail::group_soft_threshold(op, lambda * step, x_new);

        bool y_is_x;
        if ((yk - x_new).dot(x_new - x) > 0.0) {
            t = 1.0;
            yk = x_new;
            y_is_x = true;
        } else {
            const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double momentum = (t - 1.0) / t_new;
            yk = x_new + momentum * (x_new - x);
            y_is_x = momentum == 0.0;
            t = t_new;
        }
        x.swap(x_new);
        grad_y_ready = false;

        if (it % opts.check_every == 0 || it == opts.max_iter) {
            detail::smooth_gradient(op, x, grad);
            res.kkt = detail::kkt_from_gradient(op, lambda, x, grad);
            if (res.kkt <= opts.kkt_tol) {
                res.converged = true;
                break;
            }
            if (y_is_x) {
                grad_y = grad;
                grad_y_ready = true;
            }
        }
    }
    res.iterations = std::min(it, opts.max_iter);

    const double f_x = detail::objective(op, lambda, x);
    const double f_init = detail::objective(op, lambda, init);
    if (f_init < f_x) {
        res.b = init;
        res.objective = f_init;
        res.kkt = kkt_residual(op, lambda, init);
        res.converged = res.kkt <= opts.kkt_tol;
    } else {
        res.b = std::move(x);
        res.objective = f_x;
    }
    return res;
}

struct PathOptions
{
    SolverOptions solver;
    double active_tol = 1e-8;
    /// Stop walking the grid once every group has entered; later points cannot change entry times.
    bool stop_when_all_entered = true;
};

struct GridPointStats
{
    double lambda = 0.0;
    int iterations = 0;
    double kkt = 0.0;
    bool converged = false;
};

/// Entry time of every group of the operator, in operator group order.
struct GroupPath
{
    std::vector<double> entry;
    LambdaGrid grid;
    std::vector<GridPointStats> stats;  // one per solved grid point
    int non_converged = 0;
};

/**
 * Walk the grid with warm starts; a group's entry time is the largest grid
 * value at which its coefficient block has norm above active_tol (0 if never).
 */
template <class Op>
inline GroupPath group_entry_times(const Op& op, const LambdaGrid& grid,
                                   const PathOptions& opts = {})
{
    GroupPath path;
    path.grid = grid;
    path.entry.assign(op.num_groups(), 0.0);
    const double L = op.lipschitz();
    vec_t b = vec_t::Zero(op.dim());
    index_t entered = 0;
    for (double lambda : grid.values) {
        SolveResult r = solve_group_lasso(op, lambda, b, L, opts.solver);
        b = std::move(r.b);
        path.stats.push_back({lambda, r.iterations, r.kkt, r.converged});
        if (!r.converged) ++path.non_converged;
        for (index_t g = 0; g < op.num_groups(); ++g) {
            if (path.entry[g] != 0.0) continue;
            if (b.segment(op.group_begin(g), op.group_size(g)).norm() > opts.active_tol) {
                path.entry[g] = lambda;
                ++entered;
            }
        }
        if (opts.stop_when_all_entered && entered == op.num_groups()) break;
    }
    return path;
}

/// Entry times split into original groups and their knockoff counterparts.
struct PathResult
{
    std::vector<double> entry_original;
    std::vector<double> entry_knockoff;
    LambdaGrid grid;
    std::vector<GridPointStats> stats;
    int non_converged = 0;
};

/// Split a path over 2m groups ordered [originals..., knockoffs...].
inline PathResult split_path(GroupPath path)
{
    const size_t m2 = path.entry.size();
    if (m2 % 2 != 0) throw validation_error("augmented path must have an even number of groups");
    PathResult out;
    out.entry_original.assign(path.entry.begin(), path.entry.begin() + m2 / 2);
    out.entry_knockoff.assign(path.entry.begin() + m2 / 2, path.entry.end());
    out.grid = std::move(path.grid);
    out.stats = std::move(path.stats);
    out.non_converged = path.non_converged;
    return out;
}

/// lambda_max for a dense design (caller's column layout).
inline double lambda_max(const mat_t& A, const vec_t& y, const group_list_t& groups,
                         weight_t weights = weight_t::none)
{
    return lambda_max(DenseGramOperator::from_design(A, y, groups, weights));
}

/// Solve on a dense design; init and the returned b use the caller's column layout.
inline SolveResult solve_group_lasso(const mat_t& A, const vec_t& y, const group_list_t& groups,
                                     double lambda, const vec_t& init,
                                     const SolverOptions& opts = {},
                                     weight_t weights = weight_t::none)
{
    const auto op = DenseGramOperator::from_design(A, y, groups, weights);
    SolveResult r = solve_group_lasso(op, lambda, op.to_internal(init), op.lipschitz(), opts);
    r.b = op.to_external(r.b);
    return r;
}

inline double kkt_residual(const mat_t& A, const vec_t& y, const group_list_t& groups,
                           double lambda, const vec_t& b, weight_t weights = weight_t::none)
{
    const auto op = DenseGramOperator::from_design(A, y, groups, weights);
    return kkt_residual(op, lambda, op.to_internal(b));
}

/// Groups of [X X~]: G_1..G_m then G_1 + p, ..., G_m + p.
inline group_list_t augmented_groups(const group_list_t& groups, index_t p)
{
    group_list_t out = groups;
    for (const auto& g : groups) {
        std::vector<index_t> shifted(g);
        for (auto& j : shifted) j += p;
        out.push_back(std::move(shifted));
    }
    return out;
}

/// Column-bind X and X~.
inline mat_t augment(const mat_t& X, const mat_t& X_tilde)
{
    mat_t A(X.rows(), X.cols() + X_tilde.cols());
    A << X, X_tilde;
    return A;
}

} // namespace gknock
