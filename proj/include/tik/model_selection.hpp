#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tik/clustering.hpp"

namespace tik {

/// WSS_k / (np) of the best-of-starts Lloyd fit (lambda mode forced to none).
double kmeans_distortion(const Matrix& x, int k, const RunConfig& config);

/// Converged TiK-means objective for k clusters. Per-cluster configs are fitted
/// with a shared warm start of shared_starts starts.
double tik_distortion(const Matrix& x, int k, const RunConfig& config, int shared_starts = default_starts_shared);

/// Shifts distortions to be strictly positive when any is <= 0:
/// d - min(d) + 1e-6 * range(d). Identity when all are already positive.
std::vector<double> positive_distortions(std::span<const double> distortions);

/// J_1 = d_1^-eta, J_k = d_k^-eta - d_{k-1}^-eta on positivity-adjusted
/// distortions. eta must be non-zero.
std::vector<double> jump_statistics(std::span<const double> distortions, double eta);

/// 1-based K maximising the jump statistic; ties go to the smaller K.
int jump_argmax(std::span<const double> jumps);

struct JumpProfile {
    std::vector<int> k_values;        // 1..K_max
    std::vector<double> distortions;  // raw, per K
    std::vector<double> eta_grid;
    std::vector<int> argmax_table;    // chosen K per eta
    int selected_k = 1;
    bool fallback = false;  // no interior K was ever chosen
    int longest_run_k = 0;  // interior K with the longest contiguous eta run (0 if none)
    std::size_t longest_run_length = 0;

    /// Columns eta,chosen_k.
    std::string to_csv() const;
    /// Columns k,distortion.
    std::string distortions_csv() const;
    /// Jump selection plot: chosen K against eta.
    std::string to_svg() const;
};

/// Selection over precomputed distortions: the K outside {1, K_max} chosen by
/// the most eta values, ties to smaller K.
JumpProfile select_k(std::vector<double> distortions, std::vector<double> eta_grid);

/// Fits K = 1..K_max once each and runs select_k on the objectives.
JumpProfile jump_selection(const Matrix& x, int k_max, std::vector<double> eta_grid, const RunConfig& config,
                           int shared_starts = default_starts_shared);

/// 400 points on [-10, 10] with (-0.05, 0.05) removed.
std::vector<double> default_eta_grid();

/// min(2 * hint + 1, 20), or 20 without a hint.
int kmax_default(std::optional<int> k_true_hint);

/// Classic recommendation eta = p / 2; informational only.
inline double classic_eta(std::size_t p) { return static_cast<double>(p) / 2.0; }

}  // namespace tik
