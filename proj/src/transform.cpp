#include "tik/transform.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "tik/error.hpp"

namespace tik {

namespace {

void check_args(double x, double lambda, const char* what) {
    if (!std::isfinite(x) || !std::isfinite(lambda))
        throw Error(ErrorKind::domain, std::string(what) + ": non-finite argument");
    if (lambda < 0.0)
        throw Error(ErrorKind::domain, std::string(what) + ": lambda must be non-negative");
}

double parse_number(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw Error(ErrorKind::usage, "grid spec: cannot parse '" + std::string(text) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// Range endpoints like 0.05 * i accumulate representation noise; snap to 12
// significant digits so "0,0.1..1" yields 0.3 rather than 0.30000000000000004.
double snap(double v) {
    if (v == 0.0) return 0.0;
    const double mag = std::pow(10.0, 11 - std::floor(std::log10(std::fabs(v))));
    return std::round(v * mag) / mag;
}

}  // namespace

double ihs_forward(double x, double lambda) {
    check_args(x, lambda, "ihs_forward");
    if (lambda == 0.0) return x;
    const double ax = std::fabs(x);
    const double z = lambda * ax;
    double y;
    if (std::isfinite(z))
        y = std::asinh(z) / lambda;
    else
        y = (std::numbers::ln2 + std::log(lambda) + std::log(ax)) / lambda;
    return std::signbit(x) ? -y : y;
}

double ihs_inverse(double y, double lambda) {
    check_args(y, lambda, "ihs_inverse");
    if (lambda == 0.0) return y;
    const double ay = std::fabs(y);
    const double z = lambda * ay;
    double x;
    if (z < 20.0)
        x = std::sinh(z) / lambda;
    else
        x = std::exp(z - std::log(2.0 * lambda));
    if (!std::isfinite(x))
        throw Error(ErrorKind::range, "ihs_inverse: sinh(lambda * y) / lambda overflows");
    return std::signbit(y) ? -x : x;
}

double log_jacobian_term(double x, double lambda) {
    check_args(x, lambda, "log_jacobian_term");
    const double z = lambda * std::fabs(x);
    if (z == 0.0) return 0.0;
    if (z > 1e150) return -(std::log(lambda) + std::log(std::fabs(x)));
    return -0.5 * std::log1p(z * z);
}

LambdaGrid::LambdaGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2)
        throw Error(ErrorKind::usage, "lambda grid needs at least two values");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double v = values_[i];
        if (!std::isfinite(v) || v < 0.0)
            throw Error(ErrorKind::usage, "lambda grid values must be finite and non-negative");
        if (i > 0 && !(v > values_[i - 1]))
            throw Error(ErrorKind::usage, "lambda grid must be strictly increasing");
    }
    if (values_.front() != 0.0)
        throw Error(ErrorKind::usage, "lambda grid must contain 0");
}

LambdaGrid LambdaGrid::default_grid() {
    std::vector<double> v{0.0};
    for (int j = 0; j <= 38; ++j) v.push_back(0.01 * std::pow(1.25, j));
    return LambdaGrid(std::move(v));
}

LambdaGrid LambdaGrid::parse(std::string_view spec) {
    std::vector<double> v;
    for (std::string_view segment : split(spec, ';')) {
        if (segment.empty()) continue;
        const auto dots = segment.find("..");
        if (dots == std::string_view::npos) {
            for (auto tok : split(segment, ',')) v.push_back(parse_number(tok));
            continue;
        }
        const auto head = split(segment.substr(0, dots), ',');
        if (head.size() != 2)
            throw Error(ErrorKind::usage, "grid range must look like start,step..end");
        const double start = parse_number(head[0]);
        const double step = parse_number(head[1]);
        const double end = parse_number(segment.substr(dots + 2));
        if (!(step > 0.0) || end < start)
            throw Error(ErrorKind::usage, "grid range needs step > 0 and end >= start");
        const auto count = static_cast<long>(std::floor((end - start) / step + 1e-9));
        if (count > 100000) throw Error(ErrorKind::usage, "grid range too long");
        for (long i = 0; i <= count; ++i) v.push_back(snap(start + static_cast<double>(i) * step));
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return LambdaGrid(std::move(v));
}

std::optional<std::size_t> LambdaGrid::index_of(double value) const {
    auto it = std::lower_bound(values_.begin(), values_.end(), value);
    if (it == values_.end() || *it != value) return std::nullopt;
    return static_cast<std::size_t>(it - values_.begin());
}

LambdaState LambdaState::shared(std::vector<double> per_dimension) {
    const std::size_t p = per_dimension.size();
    return {LambdaMode::shared, Matrix(1, p, std::move(per_dimension))};
}

LambdaState LambdaState::per_cluster(Matrix per_cluster_dimension) {
    return {LambdaMode::per_cluster, std::move(per_cluster_dimension)};
}

bool LambdaState::all_zero() const {
    return std::all_of(values.data().begin(), values.data().end(), [](double v) { return v == 0.0; });
}

bool LambdaState::on_grid(const LambdaGrid& grid) const {
    return std::all_of(values.data().begin(), values.data().end(),
                       [&](double v) { return grid.contains(v); });
}

namespace {

template <class F>
Matrix apply_elementwise(const Matrix& x, const LambdaState& lambda, const Partition* partition, F f) {
    if (lambda.dims() != x.cols())
        throw Error(ErrorKind::usage, "lambda dimension does not match data columns");
    if (lambda.mode == LambdaMode::per_cluster) {
        if (partition == nullptr)
            throw Error(ErrorKind::usage, "per-cluster lambda requires a partition");
        if (partition->size() != x.rows())
            throw Error(ErrorKind::usage, "partition length does not match data rows");
    }
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const int k = partition != nullptr ? partition->labels[i] : 0;
        if (lambda.mode == LambdaMode::per_cluster &&
            (k < 0 || static_cast<std::size_t>(k) >= lambda.values.rows()))
            throw Error(ErrorKind::usage, "partition label outside lambda rows");
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = f(x(i, j), lambda.at(k, j));
    }
    return out;
}

}  // namespace

Matrix transform_matrix(const Matrix& x, const LambdaState& lambda, const Partition* partition) {
    return apply_elementwise(x, lambda, partition, ihs_forward);
}

Matrix inverse_transform_matrix(const Matrix& y, const LambdaState& lambda, const Partition* partition) {
    return apply_elementwise(y, lambda, partition, ihs_inverse);
}

std::vector<std::size_t> Partition::cluster_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
}

bool Partition::has_empty_cluster() const {
    const auto sizes = cluster_sizes();
    return std::find(sizes.begin(), sizes.end(), 0u) != sizes.end();
}

}  // namespace tik
