#pragma once
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>
#include <gknock/types.hpp>

namespace gknock {

/**
 * Design matrix together with a partition of its columns into groups.
 *
 * Groups are explicit index lists and need not be contiguous.
 * Group order is the order of first appearance of each label.
 * Instances are immutable after construction.
 */
class GroupedDesign
{
public:
    GroupedDesign(mat_t X, group_list_t groups, std::vector<std::string> group_ids)
        : X_(std::move(X)),
          groups_(std::move(groups)),
          group_ids_(std::move(group_ids)),
          membership_(X_.cols(), -1)
    {
        validate();
    }

    const mat_t& X() const { return X_; }
    index_t n() const { return X_.rows(); }
    index_t p() const { return X_.cols(); }
    index_t m() const { return static_cast<index_t>(groups_.size()); }
    const group_list_t& groups() const { return groups_; }
    const std::vector<index_t>& group(index_t i) const { return groups_[i]; }
    index_t group_size(index_t i) const { return static_cast<index_t>(groups_[i].size()); }
    const std::vector<std::string>& group_ids() const { return group_ids_; }

    /// Group index containing feature j.
    index_t group_of(index_t j) const { return membership_[j]; }

    std::vector<index_t> group_sizes() const
    {
        std::vector<index_t> out;
        out.reserve(groups_.size());
        for (const auto& g : groups_) out.push_back(static_cast<index_t>(g.size()));
        return out;
    }

    GroupedDesign with_matrix(mat_t X) const
    {
        if (X.cols() != p()) {
            throw validation_error("replacement matrix has " + std::to_string(X.cols())
                                   + " columns, expected " + std::to_string(p()));
        }
        return GroupedDesign(std::move(X), groups_, group_ids_);
    }

private:
    void validate()
    {
        if (X_.cols() == 0 || X_.rows() == 0) {
            throw validation_error("design matrix is empty");
        }
        if (groups_.empty()) throw validation_error("no groups given");
        if (group_ids_.size() != groups_.size()) {
            throw validation_error("group id count does not match group count");
        }
        for (index_t j = 0; j < X_.cols(); ++j) {
            for (index_t i = 0; i < X_.rows(); ++i) {
                if (!std::isfinite(X_(i, j))) {
                    throw validation_error("non-finite entry in design at row " + std::to_string(i + 1)
                                           + ", column " + std::to_string(j + 1));
                }
            }
        }
        for (index_t g = 0; g < m(); ++g) {
            if (groups_[g].empty()) {
                throw validation_error("group " + group_ids_[g] + " is empty");
            }
            for (auto j : groups_[g]) {
                if (j < 0 || j >= p()) {
                    throw validation_error("group " + group_ids_[g] + " references column "
                                           + std::to_string(j + 1) + " out of range");
                }
                if (membership_[j] != -1) {
                    throw validation_error("column " + std::to_string(j + 1)
                                           + " belongs to more than one group");
                }
                membership_[j] = g;
            }
        }
        for (index_t j = 0; j < p(); ++j) {
            if (membership_[j] == -1) {
                throw validation_error("column " + std::to_string(j + 1) + " has no group");
            }
        }
    }

    mat_t X_;
    group_list_t groups_;
    std::vector<std::string> group_ids_;
    std::vector<index_t> membership_;
};

/// Single response vector paired with a design.
struct Response
{
    vec_t y;

    explicit Response(vec_t values) : y(std::move(values))
    {
        for (index_t i = 0; i < y.size(); ++i) {
            if (!std::isfinite(y[i])) {
                throw validation_error("non-finite response at row " + std::to_string(i + 1));
            }
        }
    }

    index_t n() const { return y.size(); }
};

/// Simulation ground truth: which groups carry signal, and optionally beta.
struct GroundTruth
{
    std::vector<index_t> signal_groups;  // sorted, 0-based
    std::optional<vec_t> beta;
};

/**
 * Partition columns by label. Labels are arbitrary tokens; groups are numbered
 * in order of first appearance.
 */
inline GroupedDesign new_grouped_design(mat_t X, const std::vector<std::string>& labels)
{
    if (labels.empty()) throw validation_error("empty group label list");
    if (static_cast<index_t>(labels.size()) != X.cols()) {
        throw validation_error("got " + std::to_string(labels.size()) + " group labels for "
                               + std::to_string(X.cols()) + " columns");
    }
    std::unordered_map<std::string, index_t> index_of;
    group_list_t groups;
    std::vector<std::string> ids;
    for (index_t j = 0; j < static_cast<index_t>(labels.size()); ++j) {
        const auto& lab = labels[j];
        if (lab.empty()) {
            throw validation_error("empty group label for column " + std::to_string(j + 1));
        }
        auto it = index_of.find(lab);
        if (it == index_of.end()) {
            it = index_of.emplace(lab, static_cast<index_t>(groups.size())).first;
            groups.emplace_back();
            ids.push_back(lab);
        }
        groups[it->second].push_back(j);
    }
    return GroupedDesign(std::move(X), std::move(groups), std::move(ids));
}

inline GroupedDesign new_grouped_design(mat_t X, const std::vector<int>& labels)
{
    std::vector<std::string> s;
    s.reserve(labels.size());
    for (int l : labels) s.push_back(std::to_string(l));
    return new_grouped_design(std::move(X), s);
}

/// Every column in its own group, labelled 1..p.
inline GroupedDesign singleton_design(mat_t X)
{
    std::vector<int> labels(X.cols());
    for (index_t j = 0; j < X.cols(); ++j) labels[j] = static_cast<int>(j + 1);
    return new_grouped_design(std::move(X), labels);
}

/// Contiguous groups of equal size: {0..s-1}, {s..2s-1}, ...
inline GroupedDesign contiguous_design(mat_t X, index_t group_size)
{
    if (group_size <= 0 || X.cols() % group_size != 0) {
        throw validation_error("column count is not a multiple of the group size");
    }
    std::vector<int> labels(X.cols());
    for (index_t j = 0; j < X.cols(); ++j) labels[j] = static_cast<int>(j / group_size + 1);
    return new_grouped_design(std::move(X), labels);
}

/// Scale each column to unit l2 norm.
inline GroupedDesign normalize_columns(const GroupedDesign& design)
{
    mat_t X = design.X();
    for (index_t j = 0; j < X.cols(); ++j) {
        const double nrm = X.col(j).norm();
        if (nrm == 0.0) {
            throw validation_error("column " + std::to_string(j + 1) + " is identically zero");
        }
        X.col(j) /= nrm;
    }
    return design.with_matrix(std::move(X));
}

/// Sigma = X^T X, exactly symmetric.
inline mat_t gram(const mat_t& X)
{
    mat_t G = mat_t::Zero(X.cols(), X.cols());
    G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
    return G.selfadjointView<Eigen::Lower>();
}

inline mat_t gram(const GroupedDesign& design) { return gram(design.X()); }

} // namespace gknock
