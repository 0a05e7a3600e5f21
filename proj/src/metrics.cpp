#include "tik/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "tik/error.hpp"

namespace tik {

namespace {

std::int64_t pairs(std::int64_t m) { return m * (m - 1) / 2; }

std::vector<int> dense_codes(std::span<const int> labels, int& count) {
    std::unordered_map<int, int> code;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = code.try_emplace(labels[i], static_cast<int>(code.size()));
        out[i] = it->second;
    }
    count = static_cast<int>(code.size());
    return out;
}

}  // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::usage, "adjusted_rand_index: label vectors differ in length");
    if (a.size() < 2) throw Error(ErrorKind::usage, "adjusted_rand_index: need at least two observations");
    int ra = 0, cb = 0;
    const auto ca = dense_codes(a, ra);
    const auto cbv = dense_codes(b, cb);

    std::vector<std::int64_t> table(static_cast<std::size_t>(ra) * static_cast<std::size_t>(cb), 0);
    std::vector<std::int64_t> row(static_cast<std::size_t>(ra), 0), col(static_cast<std::size_t>(cb), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++table[static_cast<std::size_t>(ca[i]) * static_cast<std::size_t>(cb) + static_cast<std::size_t>(cbv[i])];
        ++row[static_cast<std::size_t>(ca[i])];
        ++col[static_cast<std::size_t>(cbv[i])];
    }
    std::int64_t index = 0, sum_a = 0, sum_b = 0;
    for (auto v : table) index += pairs(v);
    for (auto v : row) sum_a += pairs(v);
    for (auto v : col) sum_b += pairs(v);
    const double total = static_cast<double>(pairs(static_cast<std::int64_t>(a.size())));
    const double expected = static_cast<double>(sum_a) * static_cast<double>(sum_b) / total;
    const double max_index = 0.5 * static_cast<double>(sum_a + sum_b);
    if (max_index == expected) {
        // Degenerate: both trivial. Identical up to relabeling iff the
        // contingency table is a permutation pattern.
        const bool same = ra == cb && std::count_if(table.begin(), table.end(), [](auto v) { return v > 0; }) == ra;
        return same ? 1.0 : 0.0;
    }
    return (static_cast<double>(index) - expected) / (max_index - expected);
}

std::vector<int> encode_labels(std::span<const std::string> labels) {
    std::unordered_map<std::string, int> code;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = code.try_emplace(labels[i], static_cast<int>(code.size()));
        out[i] = it->second;
    }
    return out;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t s = 0;
    for (const auto& r : counts)
        for (auto v : r) s += v;
    return s;
}

std::string ConfusionMatrix::to_text() const {
    std::size_t name_w = 0;
    for (const auto& n : row_names) name_w = std::max(name_w, n.size());
    std::size_t cell_w = 1;
    for (const auto& n : col_names) cell_w = std::max(cell_w, n.size());
    for (const auto& r : counts)
        for (auto v : r) cell_w = std::max(cell_w, std::to_string(v).size());

    std::ostringstream os;
    os << std::string(name_w, ' ');
    for (const auto& n : col_names) os << "  " << std::setw(static_cast<int>(cell_w)) << n;
    os << '\n';
    for (std::size_t i = 0; i < counts.size(); ++i) {
        os << std::left << std::setw(static_cast<int>(name_w)) << row_names[i] << std::right;
        for (auto v : counts[i]) os << "  " << std::setw(static_cast<int>(cell_w)) << v;
        os << '\n';
    }
    return os.str();
}

std::string ConfusionMatrix::to_csv() const {
    std::ostringstream os;
    os << "reference";
    for (const auto& n : col_names) os << ',' << n;
    os << '\n';
    for (std::size_t i = 0; i < counts.size(); ++i) {
        os << row_names[i];
        for (auto v : counts[i]) os << ',' << v;
        os << '\n';
    }
    return os.str();
}

ConfusionMatrix confusion_matrix(std::span<const std::string> reference, std::span<const std::string> estimated) {
    if (reference.size() != estimated.size())
        throw Error(ErrorKind::usage, "confusion_matrix: label vectors differ in length");
    ConfusionMatrix cm;
    const auto rc = encode_labels(reference);
    const auto ec = encode_labels(estimated);
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (static_cast<std::size_t>(rc[i]) == cm.row_names.size()) cm.row_names.push_back(reference[i]);
        if (static_cast<std::size_t>(ec[i]) == cm.col_names.size()) cm.col_names.push_back(estimated[i]);
    }
    cm.counts.assign(cm.row_names.size(), std::vector<std::size_t>(cm.col_names.size(), 0));
    for (std::size_t i = 0; i < reference.size(); ++i)
        ++cm.counts[static_cast<std::size_t>(rc[i])][static_cast<std::size_t>(ec[i])];
    return cm;
}

double wss(const Matrix& x, const Partition& partition) {
    if (partition.size() != x.rows()) throw Error(ErrorKind::usage, "wss: partition length does not match data rows");
    const auto k = static_cast<std::size_t>(partition.k);
    Matrix means(k, x.cols(), 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto c = static_cast<std::size_t>(partition.labels[i]);
        if (c >= k) throw Error(ErrorKind::usage, "wss: label out of range");
        ++counts[c];
        for (std::size_t j = 0; j < x.cols(); ++j) means(c, j) += x(i, j);
    }
    for (std::size_t c = 0; c < k; ++c)
        if (counts[c] > 0)
            for (std::size_t j = 0; j < x.cols(); ++j) means(c, j) /= static_cast<double>(counts[c]);
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        s += squared_distance(x.row(i), means.row(static_cast<std::size_t>(partition.labels[i])));
    return s;
}

}  // namespace tik
