#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tik/matrix.hpp"
#include "tik/partition.hpp"

namespace tik {

/// Permutation-model adjusted Rand index. Labels are arbitrary integers.
/// When both partitions make the index's denominator vanish, returns 1.0 if
/// they agree up to relabeling and 0.0 otherwise.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Integer codes 0, 1, ... in order of first appearance.
std::vector<int> encode_labels(std::span<const std::string> labels);

struct ConfusionMatrix {
    std::vector<std::string> row_names;  // reference classes
    std::vector<std::string> col_names;  // estimated clusters
    std::vector<std::vector<std::size_t>> counts;

    std::size_t total() const;
    std::string to_text() const;
    std::string to_csv() const;
};

/// Rows and columns ordered by first appearance.
ConfusionMatrix confusion_matrix(std::span<const std::string> reference, std::span<const std::string> estimated);

/// Within-cluster sum of squared Euclidean distances to cluster means.
double wss(const Matrix& x, const Partition& partition);

}  // namespace tik
