#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>
#include <Eigen/Dense>

namespace gknock {

using index_t = Eigen::Index;
using value_t = double;
using mat_t = Eigen::MatrixXd;
using vec_t = Eigen::VectorXd;
using rowmat_t = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Indices of the features in each group (0-based internally).
using group_list_t = std::vector<std::vector<index_t>>;

/**
 * Error hierarchy. Each class maps to a stable process exit code in the CLI:
 * usage 2, validation 3, numerical 4.
 */
class error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

class usage_error : public error
{
public:
    using error::error;
    int exit_code() const noexcept override { return 2; }
};

class validation_error : public error
{
public:
    using error::error;
    int exit_code() const noexcept override { return 3; }
};

class numerical_error : public error
{
public:
    using error::error;
    int exit_code() const noexcept override { return 4; }
};

class io_error : public error
{
public:
    using error::error;
    int exit_code() const noexcept override { return 3; }
};

/// Selection variant of the knockoff filter.
enum class variant_t
{
    knockoff,
    knockoff_plus,
};

inline const char* to_string(variant_t v)
{
    return v == variant_t::knockoff ? "knockoff" : "knockoff+";
}

/// Penalty weight per group: 1, or sqrt of the group size.
enum class weight_t
{
    none,
    sqrt_size,
};

inline const char* to_string(weight_t w)
{
    return w == weight_t::none ? "none" : "sqrt";
}

} // namespace gknock
