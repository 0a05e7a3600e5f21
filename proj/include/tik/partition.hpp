#pragma once

#include <cstddef>
#include <vector>

namespace tik {

/// Hard assignment of n observations to clusters 0..k-1.
/// External surfaces (reports, CSV, the C API) print labels 1-based.
struct Partition {
    std::vector<int> labels;
    int k = 0;

    std::size_t size() const { return labels.size(); }
    std::vector<std::size_t> cluster_sizes() const;
    bool has_empty_cluster() const;

    friend bool operator==(const Partition&, const Partition&) = default;
};

}  // namespace tik
