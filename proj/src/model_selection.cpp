#include "tik/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "tik/error.hpp"

namespace tik {

namespace {

RunConfig config_for_k(const RunConfig& base, int k) {
    RunConfig c = base;
    c.k = k;
    c.seed = derive_seed(base.seed, 1000u + static_cast<std::uint64_t>(k));
    return c;
}

}  // namespace

double kmeans_distortion(const Matrix& x, int k, const RunConfig& config) {
    if (k < 1) throw Error(ErrorKind::usage, "K must be at least 1");
    if (static_cast<std::size_t>(k) >= x.rows()) return 0.0;  // every point its own cluster
    RunConfig c = config;
    c.k = k;
    c.lambda_mode = ClusterMode::none;
    const ClusterModel m = tikmeans_fit(x, c);
    return m.wss / (static_cast<double>(x.rows()) * static_cast<double>(x.cols()));
}

double tik_distortion(const Matrix& x, int k, const RunConfig& config, int shared_starts) {
    if (k < 1) throw Error(ErrorKind::usage, "K must be at least 1");
    RunConfig c = config;
    c.k = k;
    return fit_staged(x, c, shared_starts).objective;
}

std::vector<double> positive_distortions(std::span<const double> d) {
    std::vector<double> out(d.begin(), d.end());
    if (out.empty()) return out;
    for (double v : out)
        if (!std::isfinite(v)) throw Error(ErrorKind::usage, "distortions must be finite");
    const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
    if (*lo > 0.0) return out;
    const double range = *hi - *lo;
    const double eps = range > 0.0 ? 1e-6 * range : 1e-6;
    const double shift = -*lo + eps;
    for (double& v : out) v += shift;
    return out;
}

std::vector<double> jump_statistics(std::span<const double> distortions, double eta) {
    if (eta == 0.0 || !std::isfinite(eta)) throw Error(ErrorKind::usage, "jump statistic needs a finite non-zero eta");
    const auto d = positive_distortions(distortions);
    std::vector<double> j(d.size());
    double prev = 0.0;  // d_0^-eta taken as 0
    for (std::size_t k = 0; k < d.size(); ++k) {
        const double cur = std::pow(d[k], -eta);
        j[k] = cur - prev;
        prev = cur;
    }
    return j;
}

int jump_argmax(std::span<const double> jumps) {
    int best = 1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < jumps.size(); ++k) {
        const double v = std::isnan(jumps[k]) ? -std::numeric_limits<double>::infinity() : jumps[k];
        if (v > best_v) {
            best_v = v;
            best = static_cast<int>(k) + 1;
        }
    }
    return best;
}

JumpProfile select_k(std::vector<double> distortions, std::vector<double> eta_grid) {
    if (distortions.size() < 2) throw Error(ErrorKind::usage, "jump selection needs K_max >= 2");
    if (eta_grid.empty()) throw Error(ErrorKind::usage, "eta grid is empty");
    for (double e : eta_grid)
        if (e == 0.0) throw Error(ErrorKind::usage, "eta grid must exclude 0");

    JumpProfile prof;
    const int k_max = static_cast<int>(distortions.size());
    for (int k = 1; k <= k_max; ++k) prof.k_values.push_back(k);
    prof.distortions = std::move(distortions);
    prof.eta_grid = std::move(eta_grid);
    std::sort(prof.eta_grid.begin(), prof.eta_grid.end());

    std::vector<std::size_t> votes(static_cast<std::size_t>(k_max) + 1, 0);
    for (double eta : prof.eta_grid) {
        const int k = jump_argmax(jump_statistics(prof.distortions, eta));
        prof.argmax_table.push_back(k);
        ++votes[static_cast<std::size_t>(k)];
    }

    int best = 0;
    for (int k = 2; k < k_max; ++k)
        if (votes[static_cast<std::size_t>(k)] > 0 &&
            (best == 0 || votes[static_cast<std::size_t>(k)] > votes[static_cast<std::size_t>(best)]))
            best = k;
    if (best == 0) {
        prof.fallback = true;
        best = 1;
        for (int k = 2; k <= k_max; ++k)
            if (votes[static_cast<std::size_t>(k)] > votes[static_cast<std::size_t>(best)]) best = k;
    }
    prof.selected_k = best;

    for (std::size_t i = 0; i < prof.argmax_table.size();) {
        std::size_t e = i;
        while (e < prof.argmax_table.size() && prof.argmax_table[e] == prof.argmax_table[i]) ++e;
        const int k = prof.argmax_table[i];
        if (k != 1 && k != k_max && e - i > prof.longest_run_length) {
            prof.longest_run_length = e - i;
            prof.longest_run_k = k;
        }
        i = e;
    }
    return prof;
}

JumpProfile jump_selection(const Matrix& x, int k_max, std::vector<double> eta_grid, const RunConfig& config,
                           int shared_starts) {
    if (k_max < 2) throw Error(ErrorKind::usage, "K_max must be at least 2");
    if (static_cast<std::size_t>(k_max) >= x.rows())
        throw Error(ErrorKind::usage, "K_max must be smaller than the number of observations");
    std::vector<double> d;
    for (int k = 1; k <= k_max; ++k) {
        const ClusterModel m = fit_staged(x, config_for_k(config, k), shared_starts);
        if (!std::isfinite(m.objective))
            throw Error(ErrorKind::usage, "degenerate fit (zero WSS) at K = " + std::to_string(k));
        d.push_back(m.objective);
    }
    return select_k(std::move(d), std::move(eta_grid));
}

std::vector<double> default_eta_grid() {
    std::vector<double> g;
    constexpr int points = 400;
    // 200 points on each side of the excluded gap.
    for (int i = 0; i < points / 2; ++i) g.push_back(-10.0 + (10.0 - 0.05) * i / (points / 2 - 1));
    for (int i = 0; i < points / 2; ++i) g.push_back(0.05 + (10.0 - 0.05) * i / (points / 2 - 1));
    return g;
}

int kmax_default(std::optional<int> k_true_hint) {
    if (!k_true_hint) return 20;
    return std::min(2 * *k_true_hint + 1, 20);
}

std::string JumpProfile::to_csv() const {
    std::ostringstream os;
    os << "eta,chosen_k\n" << std::setprecision(10);
    for (std::size_t i = 0; i < eta_grid.size(); ++i) os << eta_grid[i] << ',' << argmax_table[i] << '\n';
    return os.str();
}

std::string JumpProfile::distortions_csv() const {
    std::ostringstream os;
    os << "k,distortion\n" << std::setprecision(17);
    for (std::size_t i = 0; i < distortions.size(); ++i) os << k_values[i] << ',' << distortions[i] << '\n';
    return os.str();
}

std::string JumpProfile::to_svg() const {
    constexpr double width = 640, height = 400, left = 60, right = 20, top = 30, bottom = 50;
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    const double eta_lo = eta_grid.empty() ? -1.0 : eta_grid.front();
    const double eta_hi = eta_grid.empty() ? 1.0 : eta_grid.back();
    const int k_max = k_values.empty() ? 1 : k_values.back();
    auto sx = [&](double eta) { return left + (eta_hi > eta_lo ? (eta - eta_lo) / (eta_hi - eta_lo) : 0.5) * plot_w; };
    auto sy = [&](int k) { return top + plot_h - (k_max > 1 ? (k - 1.0) / (k_max - 1.0) : 0.5) * plot_h; };

    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">Jump selection plot (selected K = "
       << selected_k << ")</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
       << top + plot_h << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
       << "\" stroke=\"black\"/>\n";
    for (int k = 1; k <= k_max; ++k) {
        os << "<line x1=\"" << left - 4 << "\" y1=\"" << sy(k) << "\" x2=\"" << left + plot_w << "\" y2=\"" << sy(k)
           << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << left - 8 << "\" y=\"" << sy(k) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << k
           << "</text>\n";
    }
    for (int t = 0; t <= 4; ++t) {
        const double eta = eta_lo + (eta_hi - eta_lo) * t / 4.0;
        os << "<text x=\"" << sx(eta) << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
           << eta << "</text>\n";
    }
    os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\" font-size=\"12\">eta</text>\n";
    os << "<text x=\"15\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 15 "
       << top + plot_h / 2 << ")\">argmax K of J_K</text>\n";
    os << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
    for (std::size_t i = 0; i < eta_grid.size(); ++i) os << sx(eta_grid[i]) << ',' << sy(argmax_table[i]) << ' ';
    os << "\"/>\n";
    for (std::size_t i = 0; i < eta_grid.size(); ++i)
        os << "<circle cx=\"" << sx(eta_grid[i]) << "\" cy=\"" << sy(argmax_table[i]) << "\" r=\"2\" fill=\""
           << (argmax_table[i] == selected_k ? "crimson" : "steelblue") << "\"/>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace tik
