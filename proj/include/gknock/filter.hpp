#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>
#include <gknock/group_lasso.hpp>
#include <gknock/grouped_model.hpp>
#include <gknock/knockoff_construction.hpp>

namespace gknock {

/// Per-group statistics; positive values favour the original group.
using WStatistics = std::vector<double>;

struct FilterResult
{
    WStatistics W;
    std::optional<double> threshold;  // nullopt: nothing qualifies, empty selection
    std::vector<index_t> selected;     // 0-based, ascending
    double fdp_estimate = 0.0;         // at the threshold (0 when there is none)
    variant_t variant = variant_t::knockoff;
    double q = 0.2;
};

/// Solver and grid settings shared by every knockoff run.
struct FilterConfig
{
    int grid_size = 100;
    double grid_min_ratio = 1e-3;
    PathOptions path;
    weight_t weights = weight_t::none;
    ConstructionOptions construction;
    std::uint64_t seed = 20160511;
};

/// W_i = max(lambda_i, lambda~_i) * sign(lambda_i - lambda~_i).
inline WStatistics signed_max_statistics(const std::vector<double>& entry_original,
                                         const std::vector<double>& entry_knockoff)
{
    if (entry_original.size() != entry_knockoff.size()) {
        throw validation_error("entry time vectors differ in length");
    }
    WStatistics W(entry_original.size());
    for (size_t i = 0; i < W.size(); ++i) {
        const double a = entry_original[i], b = entry_knockoff[i];
        W[i] = a > b ? a : (a < b ? -b : 0.0);
    }
    return W;
}

inline WStatistics signed_max_statistics(const PathResult& path)
{
    return signed_max_statistics(path.entry_original, path.entry_knockoff);
}

/// ({i : W_i >= t}, {i : W_i <= -t}); requires t > 0.
inline std::pair<std::vector<index_t>, std::vector<index_t>> selection_sets(const WStatistics& W,
                                                                            double t)
{
    if (!(t > 0)) throw validation_error("selection threshold must be positive");
    std::pair<std::vector<index_t>, std::vector<index_t>> out;
    for (size_t i = 0; i < W.size(); ++i) {
        if (W[i] >= t) out.first.push_back(static_cast<index_t>(i));
        if (W[i] <= -t) out.second.push_back(static_cast<index_t>(i));
    }
    return out;
}

inline double fdp_estimate(const WStatistics& W, double t, variant_t variant)
{
    if (!(t > 0)) throw validation_error("selection threshold must be positive");
    size_t pos = 0, neg = 0;
    for (double w : W) {
        if (w >= t) ++pos;
        if (w <= -t) ++neg;
    }
    const double offset = variant == variant_t::knockoff_plus ? 1.0 : 0.0;
    return (offset + static_cast<double>(neg)) / static_cast<double>(std::max<size_t>(pos, 1));
}

/// Smallest realized |W_i| > 0 with estimated FDP <= q.
inline std::optional<double> knockoff_threshold(const WStatistics& W, double q, variant_t variant)
{
    if (!(q > 0 && q < 1)) throw validation_error("target FDR q must lie in (0, 1)");
    std::set<double> candidates;
    for (double w : W)
        if (w != 0.0) candidates.insert(std::abs(w));
    for (double t : candidates) {
        if (fdp_estimate(W, t, variant) <= q) return t;
    }
    return std::nullopt;
}

inline FilterResult apply_threshold(WStatistics W, double q, variant_t variant)
{
    FilterResult r;
    r.threshold = knockoff_threshold(W, q, variant);
    if (r.threshold) {
        r.selected = selection_sets(W, *r.threshold).first;
        r.fdp_estimate = fdp_estimate(W, *r.threshold, variant);
    }
    r.W = std::move(W);
    r.variant = variant;
    r.q = q;
    return r;
}

/// Statistics together with the path they came from.
struct KnockoffStatistics
{
    WStatistics W;
    PathResult path;
    double lambda_max = 0.0;
};

/// W from any Gram operator whose groups are ordered [originals..., knockoffs...].
template <class Op>
inline KnockoffStatistics knockoff_statistics(const Op& op, const FilterConfig& cfg)
{
    KnockoffStatistics out;
    out.lambda_max = lambda_max(op);
    const index_t m = op.num_groups() / 2;
    if (!(out.lambda_max > 0.0)) {
        out.W.assign(m, 0.0);
        out.path.entry_original.assign(m, 0.0);
        out.path.entry_knockoff.assign(m, 0.0);
        return out;
    }
    const LambdaGrid grid = make_lambda_grid(out.lambda_max, cfg.grid_size, cfg.grid_min_ratio);
    out.path = split_path(group_entry_times(op, grid, cfg.path));
    out.W = signed_max_statistics(out.path);
    return out;
}

/// W for the augmented design [X X~] with the original grouping.
inline KnockoffStatistics knockoff_statistics(const mat_t& X, const mat_t& X_tilde, const vec_t& y,
                                              const group_list_t& groups, const FilterConfig& cfg)
{
    const auto op = DenseGramOperator::from_design(augment(X, X_tilde), y,
                                                   augmented_groups(groups, X.cols()), cfg.weights);
    return knockoff_statistics(op, cfg);
}

/// Full run with intermediates kept for audit.
struct GroupKnockoffRun
{
    KnockoffAugmentation knockoffs;
    KnockoffStatistics statistics;
    FilterResult result;
};

/**
 * Full group knockoff filter at target FDR q, with the knockoffs and the
 * path kept for audit.
 */
inline GroupKnockoffRun run_group_knockoff_filter(const GroupedDesign& design, const Response& y,
                                                  double q, variant_t variant,
                                                  const FilterConfig& cfg = {})
{
    if (y.n() != design.n()) {
        throw validation_error("response length " + std::to_string(y.n())
                               + " does not match design rows " + std::to_string(design.n()));
    }
    GroupKnockoffRun run;
    run.knockoffs = construct_group_knockoffs(design, cfg.seed, EquivariantS{cfg.construction});
    run.statistics = knockoff_statistics(design.X(), run.knockoffs.X_tilde, y.y, design.groups(), cfg);
    run.result = apply_threshold(run.statistics.W, q, variant);
    return run;
}

/**
 * Sufficiency check: W on ([X X~], y) equals W on (Q[X X~], Qy) for orthogonal Q.
 */
inline bool check_sufficiency(const mat_t& X, const mat_t& X_tilde, const vec_t& y,
                              const group_list_t& groups, const mat_t& Q,
                              const FilterConfig& cfg = {}, double tol = 1e-6)
{
    const WStatistics W = knockoff_statistics(X, X_tilde, y, groups, cfg).W;
    const WStatistics Wq = knockoff_statistics(Q * X, Q * X_tilde, Q * y, groups, cfg).W;
    double dev = 0.0;
    for (size_t i = 0; i < W.size(); ++i) dev = std::max(dev, std::abs(W[i] - Wq[i]));
    return dev < tol;
}

/// Exchange the columns of group i between X and X~.
inline std::pair<mat_t, mat_t> swap_group(const mat_t& X, const mat_t& X_tilde,
                                          const std::vector<index_t>& group)
{
    std::pair<mat_t, mat_t> out{X, X_tilde};
    for (auto j : group) {
        out.first.col(j) = X_tilde.col(j);
        out.second.col(j) = X.col(j);
    }
    return out;
}

/**
 * Group-antisymmetry check: swapping group i flips the sign of W_i and leaves
 * every other coordinate unchanged. i is 0-based.
 */
inline bool check_group_antisymmetry(const mat_t& X, const mat_t& X_tilde, const vec_t& y,
                                     const group_list_t& groups, index_t i,
                                     const FilterConfig& cfg = {}, double tol = 1e-10)
{
    if (i < 0 || i >= static_cast<index_t>(groups.size())) {
        throw validation_error("group index out of range");
    }
    const WStatistics W = knockoff_statistics(X, X_tilde, y, groups, cfg).W;
    const auto [Xs, Xts] = swap_group(X, X_tilde, groups[i]);
    const WStatistics Ws = knockoff_statistics(Xs, Xts, y, groups, cfg).W;
    for (size_t j = 0; j < W.size(); ++j) {
        const double expect = static_cast<index_t>(j) == i ? -W[j] : W[j];
        if (std::abs(Ws[j] - expect) > tol) return false;
    }
    return true;
}

} // namespace gknock
