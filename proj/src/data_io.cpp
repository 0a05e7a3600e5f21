#include "tik/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "tik/error.hpp"
#include "tik/transform.hpp"

namespace tik {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && first != last;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::string format_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

Dataset read_csv(std::istream& in, const std::optional<std::string>& label_column, const std::string& provenance) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw Error(ErrorKind::parse, provenance + ": missing header row");
    for (auto& h : header) h = trim(h);

    std::optional<std::size_t> label_idx;
    if (label_column) {
        auto it = std::find(header.begin(), header.end(), *label_column);
        if (it == header.end())
            throw Error(ErrorKind::usage, provenance + ": label column '" + *label_column + "' not in header");
        label_idx = static_cast<std::size_t>(it - header.begin());
    }

    Dataset ds;
    ds.provenance = provenance;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != label_idx) ds.feature_names.push_back(header[c]);
    const std::size_t p = ds.feature_names.size();
    if (p == 0) throw Error(ErrorKind::parse, provenance + ": no feature columns");

    std::vector<double> values;
    std::vector<std::string> labels;
    std::size_t line_no = 1, n = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw Error(ErrorKind::parse, provenance + ": line " + std::to_string(line_no) + " has " +
                                              std::to_string(fields.size()) + " fields, expected " +
                                              std::to_string(header.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string cell = trim(fields[c]);
            if (c == label_idx) {
                labels.push_back(cell);
                continue;
            }
            double v = 0.0;
            if (!parse_double(cell, v) || !std::isfinite(v))
                throw Error(ErrorKind::parse, provenance + ": line " + std::to_string(line_no) + ", column '" +
                                                  header[c] + "': cannot parse '" + cell + "' as a finite number");
            values.push_back(v);
        }
        ++n;
    }
    if (n == 0) throw Error(ErrorKind::parse, provenance + ": no data rows");
    ds.x = Matrix(n, p, std::move(values));
    if (label_idx) ds.labels = std::move(labels);
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    return read_csv(in, label_column, path.string());
}

void write_matrix_csv(std::ostream& out, const Matrix& x, const std::vector<std::string>& names) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
        if (j > 0) out << ',';
        out << csv_field(j < names.size() ? names[j] : "x" + std::to_string(j + 1));
    }
    out << '\n';
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_number(x(i, j));
        }
        out << '\n';
    }
}

void write_csv(std::ostream& out, const Dataset& data, std::string_view label_header) {
    const Matrix& x = data.x;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        if (j > 0) out << ',';
        out << csv_field(j < data.feature_names.size() ? data.feature_names[j] : "x" + std::to_string(j + 1));
    }
    if (data.labels) out << ',' << csv_field(std::string(label_header));
    out << '\n';
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_number(x(i, j));
        }
        if (data.labels) out << ',' << csv_field((*data.labels)[i]);
        out << '\n';
    }
}

std::vector<double> column_rms(const Matrix& x) {
    std::vector<double> rms(x.cols(), 0.0);
    if (x.rows() < 2) throw Error(ErrorKind::usage, "RMS scaling needs at least two rows");
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) s += x(i, j) * x(i, j);
        rms[j] = std::sqrt(s / static_cast<double>(x.rows() - 1));
    }
    return rms;
}

Scaled rms_scale(const Matrix& x, const std::vector<std::string>& names) {
    Scaled out{x, column_rms(x)};
    for (std::size_t j = 0; j < x.cols(); ++j) {
        if (out.factors[j] == 0.0)
            throw Error(ErrorKind::usage, "cannot RMS-scale all-zero column '" +
                                              (j < names.size() ? names[j] : std::to_string(j + 1)) + "'");
        for (std::size_t i = 0; i < x.rows(); ++i) out.x(i, j) /= out.factors[j];
    }
    return out;
}

Shifted shift_positive(const Matrix& x, std::optional<double> margin) {
    if (margin && !(*margin > 0.0)) throw Error(ErrorKind::usage, "shift margin must be positive");
    Shifted out{x, std::vector<double>(x.cols(), 0.0)};
    std::vector<double> rms;
    if (!margin) rms = column_rms(x);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double lo = x(0, j);
        for (std::size_t i = 1; i < x.rows(); ++i) lo = std::min(lo, x(i, j));
        if (lo > 0.0) continue;
        double m = margin ? *margin : 0.01 * rms[j];
        if (m <= 0.0) m = 0.01;  // all-zero column
        out.offsets[j] = m - lo;
        for (std::size_t i = 0; i < x.rows(); ++i) out.x(i, j) += out.offsets[j];
    }
    return out;
}

Dataset simulate_skewed(const SimulationSpec& spec, Matrix* latent_out) {
    const std::size_t k = spec.n_per_cluster.size();
    const std::size_t p = spec.lambda_true.size();
    if (k == 0 || spec.latent_means.rows() != k || spec.latent_means.cols() != p)
        throw Error(ErrorKind::usage, "simulation: latent means must be K x p");
    if (!(spec.latent_sd >= 0.0)) throw Error(ErrorKind::usage, "simulation: latent sd must be >= 0");
    for (double l : spec.lambda_true)
        if (!(l >= 0.0)) throw Error(ErrorKind::usage, "simulation: lambda must be >= 0");

    std::size_t n = 0;
    for (auto c : spec.n_per_cluster) n += c;
    Matrix latent(n, p), observed(n, p);
    std::vector<std::string> labels;
    labels.reserve(n);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::size_t row = 0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t t = 0; t < spec.n_per_cluster[c]; ++t, ++row) {
            for (std::size_t j = 0; j < p; ++j) {
                latent(row, j) = spec.latent_means(c, j) + spec.latent_sd * z(rng);
                observed(row, j) = ihs_inverse(latent(row, j), spec.lambda_true[j]);
            }
            labels.push_back(std::to_string(c + 1));
        }
    Dataset ds;
    ds.x = std::move(observed);
    ds.labels = std::move(labels);
    for (std::size_t j = 0; j < p; ++j) ds.feature_names.push_back("x" + std::to_string(j + 1));
    std::ostringstream prov;
    prov << "simulate_skewed(seed=" << spec.seed << ", sd=" << spec.latent_sd << ")";
    ds.provenance = prov.str();
    if (latent_out != nullptr) *latent_out = std::move(latent);
    return ds;
}

SimulationSpec simulation_preset(std::string_view name, std::uint64_t seed) {
    if (name == "paper-toy") {
        // Two groups, lambda = (1.4, 0.9). Latent means and spread are
        // reconstructed by tools/derive_toy_preset.py.
        SimulationSpec s;
        s.n_per_cluster = {100, 150};
        s.latent_means = Matrix::from_rows({{0.0, 0.0}, {3.0, 3.0}});
        s.latent_sd = 0.6;
        s.lambda_true = {1.4, 0.9};
        s.seed = seed;
        return s;
    }
    throw Error(ErrorKind::usage, "unknown simulation preset '" + std::string(name) + "'");
}

std::vector<std::string> simulation_preset_names() { return {"paper-toy"}; }

}  // namespace tik
