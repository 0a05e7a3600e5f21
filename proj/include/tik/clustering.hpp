#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tik/matrix.hpp"
#include "tik/partition.hpp"
#include "tik/transform.hpp"

namespace tik {

enum class ClusterMode { none, shared, per_cluster };

enum class StepType { one_step, per_dimension, per_dimension_per_cluster };

struct RunConfig {
    int k = 2;
    ClusterMode lambda_mode = ClusterMode::shared;
    LambdaGrid grid = LambdaGrid::default_grid();
    StepType step_type = StepType::one_step;
    int n_starts = 100;
    int max_iter = 500;
    /// Per-cluster starts iterate with per_dimension_per_cluster moves until
    /// they settle, then continue with step_type. Counts toward max_iter.
    bool staged_steps = true;
    std::uint64_t seed = 1;
    /// Worker cap; 0 means hardware concurrency. Never changes results.
    int threads = 0;

    /// Throws usage errors for k < 1, n_starts < 1, max_iter < 1 or n <= k.
    void validate(const Matrix& x) const;
};

inline constexpr int default_starts_shared = 100;
inline constexpr int default_starts_per_cluster = 20;

struct IterationRecord {
    double objective;
    bool repaired;  // an empty cluster was reseeded during this iteration
};

struct ClusterModel {
    Partition partition;
    Matrix centers;  // K x p, transformed space
    LambdaState lambda;
    double objective = 0.0;
    double wss = 0.0;  // transformed-space within-cluster sum of squares
    int iterations = 0;
    bool converged = false;
    bool cycle_detected = false;
    bool degenerate = false;  // WSS == 0, objective is -infinity
    std::uint64_t seed = 0;   // seed of the winning start
    int start_index = 0;
    /// Objective after initialisation (entry 0) and after every iteration.
    std::vector<IterationRecord> trace;
};

/// (np/2) log(WSS) + 0.5 * sum log(lambda^2 x^2 + 1), WSS taken in the
/// transformed space about the partition's own means. Returns -infinity when
/// WSS is exactly zero.
double evaluate_objective(const Matrix& x, const Partition& partition, const LambdaState& lambda);

/// Within-cluster sum of squares of the transformed data.
double transformed_wss(const Matrix& x, const Partition& partition, const LambdaState& lambda);

/// Nearest center by squared Euclidean distance; ties go to the lower index.
Partition assign_step(const Matrix& transformed, const Matrix& centers);

struct CenterUpdate {
    Matrix centers;
    Partition partition;  // differs from the input only when a repair happened
    bool repaired = false;
};

/// Cluster means. An empty cluster takes the observation farthest from its
/// own cluster mean (lowest index on ties); that observation leaves its donor.
CenterUpdate update_centers(const Matrix& transformed, const Partition& partition, int k);

/// One rung up/down search over the grid with the partition held fixed.
/// Returns the input unchanged when no move lowers the objective.
LambdaState lambda_step(const Matrix& x, const Partition& partition, const LambdaState& lambda,
                        const LambdaGrid& grid, StepType step_type);

/// Multistart TiK-means. lambda_mode none is Lloyd's K-means; per_cluster
/// delegates to tikmeans_fit_nonhomogeneous without a warm start.
ClusterModel tikmeans_fit(const Matrix& x, const RunConfig& config);

/// Per-cluster TiK-means. When warm_start is given (a shared-mode model on
/// the same data and K) start 0 replicates its lambda into every cluster row
/// and resumes from its partition; remaining starts are random.
ClusterModel tikmeans_fit_nonhomogeneous(const Matrix& x, const RunConfig& config,
                                         const ClusterModel* warm_start = nullptr);

/// Shared and none modes call tikmeans_fit. Per-cluster mode first runs a
/// shared fit with shared_starts starts and warm-starts from its solution.
ClusterModel fit_staged(const Matrix& x, const RunConfig& config, int shared_starts);

/// Single start from explicit initial centers (transformed space) and lambda.
/// Used for K-means equivalence checks and warm starts.
ClusterModel tikmeans_run_from(const Matrix& x, const RunConfig& config, const LambdaState& initial_lambda,
                               const Matrix& initial_centers);

/// Centers mapped back to the original data space with ihs_inverse.
Matrix back_transform_centers(const ClusterModel& model);

/// Deterministic per-start seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace tik
