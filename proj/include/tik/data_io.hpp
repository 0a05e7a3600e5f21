#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tik/matrix.hpp"

namespace tik {

struct Dataset {
    Matrix x;
    std::optional<std::vector<std::string>> labels;
    std::vector<std::string> feature_names;
    std::string provenance;
};

/// Header row required. The optional label column is kept as strings; every
/// other column must parse as a finite real.
Dataset load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column = std::nullopt);
Dataset read_csv(std::istream& in, const std::optional<std::string>& label_column, const std::string& provenance);

/// Writes features and, when present, a trailing label column.
void write_csv(std::ostream& out, const Dataset& data, std::string_view label_header = "label");
void write_matrix_csv(std::ostream& out, const Matrix& x, const std::vector<std::string>& names);

struct Scaled {
    Matrix x;
    std::vector<double> factors;  // original = scaled * factor
};

/// Divides every column by sqrt(sum x^2 / (n - 1)); no centering.
Scaled rms_scale(const Matrix& x, const std::vector<std::string>& names = {});

/// Column RMS with the (n - 1) divisor.
std::vector<double> column_rms(const Matrix& x);

struct Shifted {
    Matrix x;
    std::vector<double> offsets;  // original = shifted - offset
};

/// Columns holding any value <= 0 are shifted by (margin - column min).
/// Without a margin each column uses 0.01 * its RMS.
Shifted shift_positive(const Matrix& x, std::optional<double> margin = std::nullopt);

struct SimulationSpec {
    std::vector<std::size_t> n_per_cluster;
    Matrix latent_means;  // K x p
    double latent_sd = 1.0;
    std::vector<double> lambda_true;  // length p
    std::uint64_t seed = 1;
};

/// Spherical Gaussian latent clusters pushed through ihs_inverse, giving
/// skewed observable groups. Labels are "1".."K". The latent draws are
/// written to latent_out when given.
Dataset simulate_skewed(const SimulationSpec& spec, Matrix* latent_out = nullptr);

/// Named generator presets. Known: "paper-toy".
SimulationSpec simulation_preset(std::string_view name, std::uint64_t seed);
std::vector<std::string> simulation_preset_names();

}  // namespace tik
