#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "tik/matrix.hpp"
#include "tik/partition.hpp"

namespace tik {

/// Only the inverse hyperbolic sine family ships; the identifier is kept so
/// reports can name the family.
enum class TransformFamily { ihs };

/// IHS transform: asinh(lambda * x) / lambda, identity at lambda == 0.
double ihs_forward(double x, double lambda);

/// Inverse of ihs_forward: sinh(lambda * y) / lambda. Throws a range error
/// instead of returning infinity.
double ihs_inverse(double y, double lambda);

/// Per-coordinate log-Jacobian of ihs_forward: -0.5 * log(lambda^2 x^2 + 1).
double log_jacobian_term(double x, double lambda);

/// Ordered set of candidate transformation parameters.
class LambdaGrid {
public:
    /// Validates: strictly increasing, non-negative, finite, contains 0, size >= 2.
    explicit LambdaGrid(std::vector<double> values);

    /// {0} together with 0.01 * 1.25^j for j = 0..38.
    static LambdaGrid default_grid();

    /// Parses "0,0.05..2" style specs. Segments are separated by ';'. A segment
    /// containing ".." is a range "start,step..end"; otherwise it is an
    /// explicit comma-separated list. All segments are unioned.
    static LambdaGrid parse(std::string_view spec);

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Index of an exact grid member, or nullopt.
    std::optional<std::size_t> index_of(double value) const;
    bool contains(double value) const { return index_of(value).has_value(); }

    friend bool operator==(const LambdaGrid&, const LambdaGrid&) = default;

private:
    std::vector<double> values_;
};

enum class LambdaMode { shared, per_cluster };

/// Transformation parameters: a 1 x p row (shared) or a K x p matrix (per cluster).
struct LambdaState {
    LambdaMode mode = LambdaMode::shared;
    Matrix values;

    static LambdaState shared(std::vector<double> per_dimension);
    static LambdaState per_cluster(Matrix per_cluster_dimension);

    std::size_t dims() const { return values.cols(); }
    /// Lambda applied to dimension j of an observation in cluster k.
    double at(int cluster, std::size_t j) const {
        return mode == LambdaMode::shared ? values(0, j) : values(static_cast<std::size_t>(cluster), j);
    }
    bool all_zero() const;
    bool on_grid(const LambdaGrid& grid) const;

    friend bool operator==(const LambdaState&, const LambdaState&) = default;
};

/// Elementwise ihs_forward. Per-cluster states need a partition mapping rows to clusters.
Matrix transform_matrix(const Matrix& x, const LambdaState& lambda,
                        const Partition* partition = nullptr);

/// Elementwise ihs_inverse with the same lambda lookup as transform_matrix.
Matrix inverse_transform_matrix(const Matrix& y, const LambdaState& lambda,
                                const Partition* partition = nullptr);

}  // namespace tik
