#include "tik/clustering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "tik/error.hpp"

namespace tik {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Moves must beat the current objective by this relative margin; anything
// smaller is rounding noise from re-summation.
constexpr double kImprovementFloor = 1e-12;

double penalty_term(double x, double lambda) { return -log_jacobian_term(x, lambda); }

void check_partition(const Partition& partition, std::size_t n) {
    if (partition.k < 1) throw Error(ErrorKind::usage, "partition needs k >= 1");
    if (partition.size() != n) throw Error(ErrorKind::usage, "partition length does not match data rows");
    for (int l : partition.labels)
        if (l < 0 || l >= partition.k) throw Error(ErrorKind::usage, "partition label out of range");
}

void check_finite(const Matrix& x) {
    for (double v : x.data())
        if (!std::isfinite(v)) throw Error(ErrorKind::domain, "data matrix contains non-finite values");
}

// Means of each cluster where cluster k lives in space_of(k). Empty clusters
// are repaired by moving in the observation farthest from its own mean.
template <class SpaceOf>
CenterUpdate update_centers_impl(SpaceOf space_of, std::size_t n, std::size_t p, Partition partition, int k) {
    CenterUpdate out;
    out.centers = Matrix(static_cast<std::size_t>(k), p, 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);

    auto mean_of = [&](int c) {
        auto row = out.centers.row(static_cast<std::size_t>(c));
        std::fill(row.begin(), row.end(), 0.0);
        const Matrix& space = space_of(c);
        std::size_t m = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (partition.labels[i] != c) continue;
            ++m;
            auto xi = space.row(i);
            for (std::size_t j = 0; j < p; ++j) row[j] += xi[j];
        }
        if (m > 0)
            for (double& v : row) v /= static_cast<double>(m);
        counts[static_cast<std::size_t>(c)] = m;
    };
    for (int c = 0; c < k; ++c) mean_of(c);

    for (int empty = 0; empty < k; ++empty) {
        if (counts[static_cast<std::size_t>(empty)] != 0) continue;
        std::size_t donor_row = n;
        double farthest = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int c = partition.labels[i];
            if (counts[static_cast<std::size_t>(c)] <= 1) continue;
            const double d = squared_distance(space_of(c).row(i), out.centers.row(static_cast<std::size_t>(c)));
            if (d > farthest) {
                farthest = d;
                donor_row = i;
            }
        }
        if (donor_row == n) throw Error(ErrorKind::usage, "cannot repair empty cluster: too few observations");
        const int donor = partition.labels[donor_row];
        partition.labels[donor_row] = empty;
        mean_of(empty);
        mean_of(donor);
        out.repaired = true;
    }
    out.partition = std::move(partition);
    return out;
}

constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

// ihs_forward and the penalty for every (grid value, column, row), shared by
// all starts of a fit. Skipped when it would exceed kCacheBytes.
class TransformCache {
public:
    static constexpr std::size_t kCacheBytes = std::size_t{256} << 20;

    TransformCache(const Matrix& x, const LambdaGrid& grid) : n_(x.rows()), p_(x.cols()) {
        const std::size_t cells = grid.size() * n_ * p_;
        if (cells * 2 * sizeof(double) > kCacheBytes) return;
        fwd_.resize(cells);
        pen_.resize(cells);
        for (std::size_t g = 0; g < grid.size(); ++g)
            for (std::size_t j = 0; j < p_; ++j) {
                double* f = &fwd_[(g * p_ + j) * n_];
                double* q = &pen_[(g * p_ + j) * n_];
                for (std::size_t i = 0; i < n_; ++i) {
                    f[i] = ihs_forward(x(i, j), grid[g]);
                    q[i] = penalty_term(x(i, j), grid[g]);
                }
            }
    }

    bool enabled() const { return !fwd_.empty(); }
    const double* forward(std::size_t g, std::size_t j) const { return &fwd_[(g * p_ + j) * n_]; }
    const double* penalty(std::size_t g, std::size_t j) const { return &pen_[(g * p_ + j) * n_]; }

private:
    std::size_t n_, p_;
    std::vector<double> fwd_, pen_;
};

// Mutable state of one start: lambda, partition, transformed copies of the
// data (one per lambda row) and per (cluster, dimension) WSS/penalty tables.
class Workspace {
public:
    Workspace(const Matrix& x, LambdaMode mode, int k, const TransformCache* cache = nullptr)
        : x_(x), cache_(cache && cache->enabled() ? cache : nullptr), mode_(mode), k_(k), n_(x.rows()), p_(x.cols()),
          rows_(mode == LambdaMode::shared ? 1 : static_cast<std::size_t>(k)),
          lambda_(rows_ * p_, 0.0), spaces_(rows_, Matrix(n_, p_)),
          wss_(static_cast<std::size_t>(k) * p_, 0.0), pen_(static_cast<std::size_t>(k) * p_, 0.0) {
        half_np_ = 0.5 * static_cast<double>(n_) * static_cast<double>(p_);
    }

    void set_lambda(const LambdaState& lambda) {
        if (lambda.dims() != p_) throw Error(ErrorKind::usage, "lambda dimension does not match data columns");
        if (lambda.mode != mode_) throw Error(ErrorKind::usage, "lambda mode does not match");
        if (lambda.values.rows() != rows_) throw Error(ErrorKind::usage, "lambda rows do not match K");
        for (double v : lambda.values.data())
            if (!std::isfinite(v) || v < 0.0) throw Error(ErrorKind::domain, "lambda must be finite and >= 0");
        std::copy(lambda.values.data().begin(), lambda.values.data().end(), lambda_.begin());
        index_.clear();
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t j = 0; j < p_; ++j) rebuild_column(r, j);
    }

    // Binds lambda to grid positions so it can be stepped.
    void bind_grid(const LambdaGrid& grid) {
        grid_ = &grid;
        index_.assign(lambda_.size(), 0);
        for (std::size_t c = 0; c < lambda_.size(); ++c) {
            auto idx = grid.index_of(lambda_[c]);
            if (!idx) throw Error(ErrorKind::usage, "lambda value is not on the grid");
            index_[c] = *idx;
        }
    }

    void set_grid_indices(const LambdaGrid& grid, const std::vector<std::size_t>& idx) {
        grid_ = &grid;
        index_ = idx;
        for (std::size_t c = 0; c < idx.size(); ++c) lambda_[c] = grid[idx[c]];
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t j = 0; j < p_; ++j) rebuild_column(r, j);
    }

    void set_partition(Partition partition) {
        partition_ = std::move(partition);
        rebuild_members();
    }

    void set_centers(Matrix centers) { centers_ = std::move(centers); }

    const Partition& partition() const { return partition_; }
    const Matrix& centers() const { return centers_; }
    const Matrix& space(std::size_t row) const { return spaces_[row]; }
    std::size_t lambda_row(int cluster) const { return mode_ == LambdaMode::shared ? 0 : static_cast<std::size_t>(cluster); }
    const std::vector<std::size_t>& grid_indices() const { return index_; }

    LambdaState lambda_state() const {
        LambdaState s;
        s.mode = mode_;
        s.values = Matrix(rows_, p_, lambda_);
        return s;
    }

    // Recomputes centers as partition means without repair.
    void recompute_means() {
        auto upd = update_centers_impl([&](int c) -> const Matrix& { return spaces_[lambda_row(c)]; }, n_, p_,
                                       partition_, k_);
        centers_ = std::move(upd.centers);
    }

    bool update_centers_with_repair() {
        auto upd = update_centers_impl([&](int c) -> const Matrix& { return spaces_[lambda_row(c)]; }, n_, p_,
                                       partition_, k_);
        centers_ = std::move(upd.centers);
        if (upd.repaired) set_partition(std::move(upd.partition));
        return upd.repaired;
    }

    // Plain nearest-center assignment, or (per-cluster mode) the Jacobian-aware
    // rule minimising (np / 2WSS) * distance + penalty, which majorises the
    // objective change so a reassignment never increases it.
    Partition assign(bool penalized) const {
        const double total = total_wss();
        penalized = penalized && total > 0.0;
        const double scale = penalized ? half_np_ / total : 1.0;
        std::vector<double> point_pen;
        if (penalized) {
            point_pen.assign(static_cast<std::size_t>(k_) * n_, 0.0);
            for (int c = 0; c < k_; ++c) {
                double* out = &point_pen[static_cast<std::size_t>(c) * n_];
                for (std::size_t j = 0; j < p_; ++j) {
                    const std::size_t cell = lambda_row(c) * p_ + j;
                    if (lambda_[cell] == 0.0) continue;
                    if (const double* q = cached_penalty(cell, j)) {
                        for (std::size_t i = 0; i < n_; ++i) out[i] += q[i];
                    } else {
                        for (std::size_t i = 0; i < n_; ++i) out[i] += penalty_term(x_(i, j), lambda_[cell]);
                    }
                }
            }
        }
        Partition out;
        out.k = k_;
        out.labels.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            int best = 0;
            double best_cost = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k_; ++c) {
                double cost = squared_distance(spaces_[lambda_row(c)].row(i), centers_.row(static_cast<std::size_t>(c)));
                if (penalized) cost = scale * cost + point_pen[static_cast<std::size_t>(c) * n_ + i];
                if (cost < best_cost) {
                    best_cost = cost;
                    best = c;
                }
            }
            out.labels[i] = best;
        }
        return out;
    }

    void recompute_tables() {
        for (int c = 0; c < k_; ++c)
            for (std::size_t j = 0; j < p_; ++j) {
                const std::size_t cell = lambda_row(c) * p_ + j;
                const std::size_t g = index_.empty() ? kNoIndex : index_[cell];
                wss_[static_cast<std::size_t>(c) * p_ + j] = cluster_column_wss(c, j, lambda_[cell], g);
                pen_[static_cast<std::size_t>(c) * p_ + j] = cluster_column_penalty(c, j, lambda_[cell], g);
            }
    }

    double total_wss() const {
        double s = 0.0;
        for (double v : wss_) s += v;
        return s;
    }

    double total_penalty() const {
        double s = 0.0;
        for (double v : pen_) s += v;
        return s;
    }

    double objective() const { return objective_of(total_wss(), total_penalty()); }

    // One lambda move round; returns true when lambda changed.
    bool step_lambda(StepType step_type) {
        struct Move {
            std::size_t row, dim, new_index;
            double objective, dwss, dpen;
        };
        const double total_w = total_wss();
        const double total_p = total_penalty();
        const double current = objective_of(total_w, total_p);
        if (current == kNegInf) return false;
        const double threshold = current - kImprovementFloor * std::max(1.0, std::fabs(current));

        std::vector<Move> best_per_cell;
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t j = 0; j < p_; ++j) {
                const std::size_t cell = r * p_ + j;
                const std::size_t idx = index_[cell];
                double old_w = 0.0, old_p = 0.0;
                for (int c = 0; c < k_; ++c) {
                    if (lambda_row(c) != r) continue;
                    old_w += wss_[static_cast<std::size_t>(c) * p_ + j];
                    old_p += pen_[static_cast<std::size_t>(c) * p_ + j];
                }
                std::optional<Move> best;
                for (int dir : {-1, +1}) {
                    if (dir < 0 && idx == 0) continue;
                    if (dir > 0 && idx + 1 >= grid_->size()) continue;
                    const std::size_t cand = dir < 0 ? idx - 1 : idx + 1;
                    const double lam = (*grid_)[cand];
                    double w = 0.0, pp = 0.0;
                    for (int c = 0; c < k_; ++c) {
                        if (lambda_row(c) != r) continue;
                        w += cluster_column_wss(c, j, lam, cand);
                        pp += cluster_column_penalty(c, j, lam, cand);
                    }
                    const double obj = objective_of(total_w - old_w + w, total_p - old_p + pp);
                    if (obj < threshold && (!best || obj < best->objective))
                        best = Move{r, j, cand, obj, w - old_w, pp - old_p};
                }
                if (best) best_per_cell.push_back(*best);
            }
        }
        if (best_per_cell.empty()) return false;

        const Move* single = &best_per_cell.front();
        for (const Move& m : best_per_cell)
            if (m.objective < single->objective) single = &m;

        std::vector<Move> chosen;
        switch (step_type) {
        case StepType::one_step:
            chosen.push_back(*single);
            break;
        case StepType::per_dimension:
            for (std::size_t j = 0; j < p_; ++j) {
                const Move* b = nullptr;
                for (const Move& m : best_per_cell)
                    if (m.dim == j && (b == nullptr || m.objective < b->objective)) b = &m;
                if (b != nullptr) chosen.push_back(*b);
            }
            break;
        case StepType::per_dimension_per_cluster:
            chosen = best_per_cell;
            break;
        }
        if (chosen.size() > 1) {
            double dw = 0.0, dp = 0.0;
            for (const Move& m : chosen) {
                dw += m.dwss;
                dp += m.dpen;
            }
            // Individually improving moves can overshoot together; keep descent.
            if (!(objective_of(total_w + dw, total_p + dp) < threshold)) chosen.assign(1, *single);
        }
        for (const Move& m : chosen) {
            const std::size_t cell = m.row * p_ + m.dim;
            index_[cell] = m.new_index;
            lambda_[cell] = (*grid_)[m.new_index];
            rebuild_column(m.row, m.dim);
        }
        recompute_means();
        recompute_tables();
        return true;
    }

private:
    double objective_of(double total_w, double total_p) const {
        if (total_w <= 0.0) return kNegInf;
        return half_np_ * std::log(total_w) + total_p;
    }

    const double* cached_forward(std::size_t cell, std::size_t j) const {
        return cache_ && !index_.empty() ? cache_->forward(index_[cell], j) : nullptr;
    }

    const double* cached_penalty(std::size_t cell, std::size_t j) const {
        return cache_ && !index_.empty() ? cache_->penalty(index_[cell], j) : nullptr;
    }

    void rebuild_column(std::size_t row, std::size_t j) {
        const double lam = lambda_[row * p_ + j];
        Matrix& s = spaces_[row];
        if (const double* f = cached_forward(row * p_ + j, j)) {
            for (std::size_t i = 0; i < n_; ++i) s(i, j) = f[i];
            return;
        }
        for (std::size_t i = 0; i < n_; ++i) s(i, j) = ihs_forward(x_(i, j), lam);
    }

    void rebuild_members() {
        members_.assign(static_cast<std::size_t>(k_), {});
        for (std::size_t i = 0; i < n_; ++i) members_[static_cast<std::size_t>(partition_.labels[i])].push_back(i);
    }

    double cluster_column_wss(int c, std::size_t j, double lam, std::size_t g) const {
        const auto& rows = members_[static_cast<std::size_t>(c)];
        if (rows.empty()) return 0.0;
        scratch_.resize(rows.size());
        double mean = 0.0;
        const double* f = cache_ && g != kNoIndex ? cache_->forward(g, j) : nullptr;
        for (std::size_t t = 0; t < rows.size(); ++t) {
            scratch_[t] = f ? f[rows[t]] : ihs_forward(x_(rows[t], j), lam);
            mean += scratch_[t];
        }
        mean /= static_cast<double>(rows.size());
        double s = 0.0;
        for (double y : scratch_) s += (y - mean) * (y - mean);
        return s;
    }

    double cluster_column_penalty(int c, std::size_t j, double lam, std::size_t g) const {
        if (lam == 0.0) return 0.0;
        double s = 0.0;
        if (cache_ && g != kNoIndex) {
            const double* q = cache_->penalty(g, j);
            for (std::size_t i : members_[static_cast<std::size_t>(c)]) s += q[i];
        } else {
            for (std::size_t i : members_[static_cast<std::size_t>(c)]) s += penalty_term(x_(i, j), lam);
        }
        return s;
    }

    const Matrix& x_;
    const TransformCache* cache_;
    LambdaMode mode_;
    int k_;
    std::size_t n_, p_;
    std::size_t rows_;
    double half_np_ = 0.0;
    std::vector<double> lambda_;
    const LambdaGrid* grid_ = nullptr;
    std::vector<std::size_t> index_;
    std::vector<Matrix> spaces_;
    Partition partition_;
    std::vector<std::vector<std::size_t>> members_;
    Matrix centers_;
    std::vector<double> wss_, pen_;
    mutable std::vector<double> scratch_;
};

LambdaMode to_lambda_mode(ClusterMode m) {
    return m == ClusterMode::per_cluster ? LambdaMode::per_cluster : LambdaMode::shared;
}

ClusterModel finish_model(const Workspace& ws, std::vector<IterationRecord> trace, int iterations, bool converged,
                          bool cycle, std::uint64_t seed, int start) {
    ClusterModel m;
    m.partition = ws.partition();
    m.centers = ws.centers();
    m.lambda = ws.lambda_state();
    m.objective = ws.objective();
    m.wss = ws.total_wss();
    m.degenerate = m.objective == kNegInf;
    m.iterations = iterations;
    m.converged = converged;
    m.cycle_detected = cycle;
    m.seed = seed;
    m.start_index = start;
    m.trace = std::move(trace);
    return m;
}

// Iterates lambda step, assignment and mean update from a prepared workspace
// whose partition, centers and tables are current.
ClusterModel iterate(Workspace& ws, const RunConfig& config, bool initial_repair, std::uint64_t seed, int start) {
    const bool stepping = config.lambda_mode != ClusterMode::none;
    const bool per_cluster = config.lambda_mode == ClusterMode::per_cluster;
    std::vector<IterationRecord> trace{{ws.objective(), initial_repair}};

    // Per-cluster starts first move every improving cell at once, then
    // finish with the configured step type from that point.
    bool exploring = per_cluster && config.staged_steps && config.step_type != StepType::per_dimension_per_cluster;
    StepType step = exploring ? StepType::per_dimension_per_cluster : config.step_type;

    std::set<std::vector<std::size_t>> seen;
    auto remember = [&] {
        std::vector<std::size_t> state(ws.grid_indices());
        for (int l : ws.partition().labels) state.push_back(static_cast<std::size_t>(l));
        return seen.insert(std::move(state)).second;
    };
    if (per_cluster) remember();

    bool converged = false, cycle = false;
    int iterations = 0;
    for (int iter = 1; iter <= config.max_iter; ++iter) {
        iterations = iter;
        const bool lambda_changed = stepping && ws.step_lambda(step);
        Partition next = ws.assign(per_cluster);
        const bool labels_changed = next.labels != ws.partition().labels;
        ws.set_partition(std::move(next));
        const bool repaired = ws.update_centers_with_repair();
        ws.recompute_tables();
        trace.push_back({ws.objective(), repaired});
        if (!lambda_changed && !labels_changed && !repaired) {
            if (!exploring) {
                converged = true;
                break;
            }
            exploring = false;
            step = config.step_type;
            seen.clear();
        }
        if (per_cluster && !remember()) {
            cycle = true;
            break;
        }
    }
    return finish_model(ws, std::move(trace), iterations, converged, cycle, seed, start);
}

ClusterModel random_start(const Matrix& x, const RunConfig& config, int start, const TransformCache* cache) {
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(start));
    std::mt19937_64 rng(seed);
    const LambdaMode mode = to_lambda_mode(config.lambda_mode);
    Workspace ws(x, mode, config.k, cache);
    const std::size_t rows = mode == LambdaMode::shared ? 1 : static_cast<std::size_t>(config.k);
    std::vector<std::size_t> idx(rows * x.cols(), 0);
    if (config.lambda_mode != ClusterMode::none) {
        std::uniform_int_distribution<std::size_t> pick(0, config.grid.size() - 1);
        for (auto& v : idx) v = pick(rng);
    }
    ws.set_grid_indices(config.grid, idx);

    // K distinct observations via partial Fisher-Yates.
    std::vector<std::size_t> order(x.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Matrix centers(static_cast<std::size_t>(config.k), x.cols());
    for (int c = 0; c < config.k; ++c) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(c), order.size() - 1);
        std::swap(order[static_cast<std::size_t>(c)], order[pick(rng)]);
        auto src = ws.space(ws.lambda_row(c)).row(order[static_cast<std::size_t>(c)]);
        std::copy(src.begin(), src.end(), centers.row(static_cast<std::size_t>(c)).begin());
    }
    ws.set_centers(std::move(centers));
    ws.set_partition(ws.assign(false));
    const bool repaired = ws.update_centers_with_repair();
    ws.recompute_tables();
    return iterate(ws, config, repaired, seed, start);
}

bool better(const ClusterModel& a, const ClusterModel& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    return a.start_index < b.start_index;
}

template <class RunOne>
ClusterModel multistart(const RunConfig& config, int n_starts, RunOne run_one) {
    std::vector<std::optional<ClusterModel>> results(static_cast<std::size_t>(n_starts));
    unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
    workers = std::clamp(workers, 1u, static_cast<unsigned>(n_starts));

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (int s = next++; s < n_starts; s = next++) {
            try {
                results[static_cast<std::size_t>(s)] = run_one(s);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    std::size_t best = 0;
    for (std::size_t s = 1; s < results.size(); ++s)
        if (better(*results[s], *results[best])) best = s;
    return std::move(*results[best]);
}

}  // namespace

void RunConfig::validate(const Matrix& x) const {
    if (k < 1) throw Error(ErrorKind::usage, "K must be at least 1");
    if (n_starts < 1) throw Error(ErrorKind::usage, "n_starts must be at least 1");
    if (max_iter < 1) throw Error(ErrorKind::usage, "max_iter must be at least 1");
    if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorKind::usage, "data matrix is empty");
    if (x.rows() <= static_cast<std::size_t>(k))
        throw Error(ErrorKind::usage, "need more observations than clusters (n = " + std::to_string(x.rows()) +
                                          ", K = " + std::to_string(k) + ")");
    check_finite(x);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // splitmix64 over (master, stream)
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double evaluate_objective(const Matrix& x, const Partition& partition, const LambdaState& lambda) {
    check_partition(partition, x.rows());
    Workspace ws(x, lambda.mode, partition.k);
    ws.set_lambda(lambda);
    ws.set_partition(partition);
    ws.recompute_tables();
    return ws.objective();
}

double transformed_wss(const Matrix& x, const Partition& partition, const LambdaState& lambda) {
    check_partition(partition, x.rows());
    Workspace ws(x, lambda.mode, partition.k);
    ws.set_lambda(lambda);
    ws.set_partition(partition);
    ws.recompute_tables();
    return ws.total_wss();
}

Partition assign_step(const Matrix& transformed, const Matrix& centers) {
    if (centers.rows() == 0 || centers.cols() != transformed.cols())
        throw Error(ErrorKind::usage, "centers do not match data columns");
    Partition out;
    out.k = static_cast<int>(centers.rows());
    out.labels.resize(transformed.rows());
    for (std::size_t i = 0; i < transformed.rows(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.rows(); ++c) {
            const double d = squared_distance(transformed.row(i), centers.row(c));
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        out.labels[i] = best;
    }
    return out;
}

CenterUpdate update_centers(const Matrix& transformed, const Partition& partition, int k) {
    Partition p = partition;
    p.k = k;
    check_partition(p, transformed.rows());
    return update_centers_impl([&](int) -> const Matrix& { return transformed; }, transformed.rows(),
                               transformed.cols(), std::move(p), k);
}

LambdaState lambda_step(const Matrix& x, const Partition& partition, const LambdaState& lambda,
                        const LambdaGrid& grid, StepType step_type) {
    check_partition(partition, x.rows());
    Workspace ws(x, lambda.mode, partition.k);
    ws.set_lambda(lambda);
    ws.bind_grid(grid);
    ws.set_partition(partition);
    ws.recompute_tables();
    ws.step_lambda(step_type);
    return ws.lambda_state();
}

ClusterModel tikmeans_fit(const Matrix& x, const RunConfig& config) {
    if (config.lambda_mode == ClusterMode::per_cluster) return tikmeans_fit_nonhomogeneous(x, config, nullptr);
    config.validate(x);
    const TransformCache cache(x, config.grid);
    return multistart(config, config.n_starts, [&](int s) { return random_start(x, config, s, &cache); });
}

ClusterModel tikmeans_fit_nonhomogeneous(const Matrix& x, const RunConfig& config, const ClusterModel* warm_start) {
    RunConfig cfg = config;
    cfg.lambda_mode = ClusterMode::per_cluster;
    cfg.validate(x);
    if (warm_start != nullptr) {
        if (warm_start->lambda.mode != LambdaMode::shared)
            throw Error(ErrorKind::usage, "warm start must be a shared-lambda model");
        if (warm_start->partition.k != cfg.k || warm_start->partition.size() != x.rows() ||
            warm_start->lambda.dims() != x.cols())
            throw Error(ErrorKind::usage, "warm start does not match data or K");
    }
    const TransformCache cache(x, cfg.grid);
    return multistart(cfg, cfg.n_starts, [&](int s) {
        if (s == 0 && warm_start != nullptr) {
            Workspace ws(x, LambdaMode::per_cluster, cfg.k, &cache);
            Matrix rows(static_cast<std::size_t>(cfg.k), x.cols());
            for (std::size_t c = 0; c < rows.rows(); ++c)
                for (std::size_t j = 0; j < x.cols(); ++j) rows(c, j) = warm_start->lambda.values(0, j);
            ws.set_lambda(LambdaState::per_cluster(std::move(rows)));
            ws.bind_grid(cfg.grid);
            ws.set_partition(warm_start->partition);
            ws.recompute_means();
            ws.recompute_tables();
            return iterate(ws, cfg, false, derive_seed(cfg.seed, 0), 0);
        }
        return random_start(x, cfg, s, &cache);
    });
}

ClusterModel fit_staged(const Matrix& x, const RunConfig& config, int shared_starts) {
    if (config.lambda_mode != ClusterMode::per_cluster) return tikmeans_fit(x, config);
    RunConfig shared = config;
    shared.lambda_mode = ClusterMode::shared;
    shared.n_starts = shared_starts;
    const ClusterModel warm = tikmeans_fit(x, shared);
    return tikmeans_fit_nonhomogeneous(x, config, &warm);
}

ClusterModel tikmeans_run_from(const Matrix& x, const RunConfig& config, const LambdaState& initial_lambda,
                               const Matrix& initial_centers) {
    config.validate(x);
    if (initial_centers.rows() != static_cast<std::size_t>(config.k) || initial_centers.cols() != x.cols())
        throw Error(ErrorKind::usage, "initial centers must be K x p");
    const LambdaMode mode = to_lambda_mode(config.lambda_mode);
    Workspace ws(x, mode, config.k);
    ws.set_lambda(initial_lambda);
    ws.bind_grid(config.grid);
    ws.set_centers(initial_centers);
    ws.set_partition(ws.assign(false));
    const bool repaired = ws.update_centers_with_repair();
    ws.recompute_tables();
    return iterate(ws, config, repaired, config.seed, 0);
}

Matrix back_transform_centers(const ClusterModel& model) {
    Matrix out(model.centers.rows(), model.centers.cols());
    for (std::size_t c = 0; c < out.rows(); ++c)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(c, j) = ihs_inverse(model.centers(c, j), model.lambda.at(static_cast<int>(c), j));
    return out;
}

}  // namespace tik
