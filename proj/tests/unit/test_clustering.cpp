#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tik/clustering.hpp"
#include "tik/error.hpp"
#include "tik/metrics.hpp"

using namespace tik;

namespace {

// Frozen from tests/oracles/scalar_oracle.py (mpmath, 40 digits).
constexpr double kObjectiveLambda0 = 0.6931471805599453094;
constexpr double kObjectiveLambda1 = 1.1337469729220936993;

Matrix random_blobs(std::mt19937_64& rng, std::size_t n, std::size_t p, int k, double spread, bool positive) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> centre(positive ? 1.0 : -5.0, 8.0);
    Matrix means(static_cast<std::size_t>(k), p);
    for (auto& v : means.data()) v = centre(rng);
    Matrix x(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const double v = means(i % static_cast<std::size_t>(k), j) + spread * z(rng);
            x(i, j) = positive ? std::exp(0.4 * v) : v;
        }
    return x;
}

oracle::Rows to_rows(const Matrix& m) {
    oracle::Rows r(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
    return r;
}

}  // namespace

TEST_CASE("evaluate_objective examples") {
    const Matrix x = Matrix::from_rows({{1.0}, {-1.0}});
    const Partition one{{0, 0}, 1};
    CHECK(evaluate_objective(x, one, LambdaState::shared({0.0})) == doctest::Approx(kObjectiveLambda0).epsilon(1e-14));
    CHECK(evaluate_objective(x, one, LambdaState::shared({1.0})) == doctest::Approx(kObjectiveLambda1).epsilon(1e-14));

    // lambda == 0: (np/2) log(WSS of raw data) for any partition
    const Matrix y = Matrix::from_rows({{0.0, 1.0}, {2.0, 5.0}, {4.0, 3.0}, {10.0, 9.0}});
    const Partition two{{0, 0, 1, 1}, 2};
    CHECK(evaluate_objective(y, two, LambdaState::shared({0.0, 0.0})) ==
          doctest::Approx(4.0 * std::log(wss(y, two))).epsilon(1e-14));
}

TEST_CASE("evaluate_objective degenerate WSS is -infinity") {
    const Matrix x = Matrix::from_rows({{1.0}, {1.0}, {4.0}});
    const Partition p{{0, 0, 1}, 2};
    const double v = evaluate_objective(x, p, LambdaState::shared({0.5}));
    CHECK(std::isinf(v));
    CHECK(v < 0);
}

TEST_CASE("evaluate_objective matches the naive oracle, shared and per cluster") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 9.0);
    const auto grid = LambdaGrid::default_grid();
    std::uniform_int_distribution<std::size_t> g(0, grid.size() - 1);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 12, p = 3;
        const int k = 3;
        Matrix x(n, p);
        for (auto& v : x.data()) v = u(rng);
        Partition part{std::vector<int>(n), k};
        for (std::size_t i = 0; i < n; ++i) part.labels[i] = static_cast<int>(i % 3);
        std::vector<double> shared(p);
        for (auto& v : shared) v = grid[g(rng)];
        Matrix per(3, p);
        for (auto& v : per.data()) v = grid[g(rng)];
        const auto rows = to_rows(x);
        CHECK(evaluate_objective(x, part, LambdaState::shared(shared)) ==
              doctest::Approx(oracle::objective(rows, part.labels, k, {shared})).epsilon(1e-11));
        CHECK(evaluate_objective(x, part, LambdaState::per_cluster(per)) ==
              doctest::Approx(oracle::objective(rows, part.labels, k, to_rows(per))).epsilon(1e-11));
    }
}

TEST_CASE("objective is invariant under label permutation") {
    std::mt19937_64 rng(5);
    const Matrix x = random_blobs(rng, 30, 2, 3, 1.0, false);
    Partition part{std::vector<int>(30), 3};
    for (std::size_t i = 0; i < 30; ++i) part.labels[i] = static_cast<int>((i * 7) % 3);
    const Matrix lam = Matrix::from_rows({{0.1, 0.5}, {1.0, 0.0}, {2.0, 0.3}});
    const int perm[3] = {2, 0, 1};
    Partition permuted = part;
    for (auto& l : permuted.labels) l = perm[l];
    Matrix lam_perm(3, 2);
    for (int c = 0; c < 3; ++c)
        for (std::size_t j = 0; j < 2; ++j) lam_perm(static_cast<std::size_t>(perm[c]), j) = lam(static_cast<std::size_t>(c), j);
    CHECK(evaluate_objective(x, part, LambdaState::per_cluster(lam)) ==
          evaluate_objective(x, permuted, LambdaState::per_cluster(lam_perm)));
    CHECK(evaluate_objective(x, part, LambdaState::shared({0.3, 0.7})) ==
          evaluate_objective(x, permuted, LambdaState::shared({0.3, 0.7})));
}

TEST_CASE("per-cluster with equal rows equals shared") {
    std::mt19937_64 rng(8);
    const Matrix x = random_blobs(rng, 40, 3, 2, 0.7, true);
    Partition part{std::vector<int>(40), 2};
    for (std::size_t i = 0; i < 40; ++i) part.labels[i] = static_cast<int>(i % 2);
    const std::vector<double> lam{0.2, 1.5, 0.0};
    const Matrix rows = Matrix::from_rows({lam, lam});
    CHECK(std::fabs(evaluate_objective(x, part, LambdaState::shared(lam)) -
                    evaluate_objective(x, part, LambdaState::per_cluster(rows))) <= 1e-12);
}

TEST_CASE("assign_step examples") {
    const Matrix centers = Matrix::from_rows({{0.0}, {2.0}});
    CHECK(assign_step(Matrix::from_rows({{1.0}}), centers).labels == std::vector<int>{0});
    CHECK(assign_step(Matrix::from_rows({{5.0}, {-3.0}}), Matrix::from_rows({{1.0}})).labels ==
          std::vector<int>{0, 0});
    const Matrix pts = Matrix::from_rows({{0.0}, {0.1}, {10.0}, {10.1}});
    CHECK(assign_step(pts, Matrix::from_rows({{0.05}, {10.05}})).labels == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("update_centers examples") {
    auto r = update_centers(Matrix::from_rows({{1.0}, {3.0}}), Partition{{0, 0}, 1}, 1);
    CHECK(r.centers(0, 0) == 2.0);
    CHECK_FALSE(r.repaired);

    r = update_centers(Matrix::from_rows({{0.0, 0.0}, {4.0, 6.0}}), Partition{{0, 1}, 2}, 2);
    CHECK(r.centers == Matrix::from_rows({{0.0, 0.0}, {4.0, 6.0}}));

    // All in cluster 1: its mean is 11/3, the farthest point (10) reseeds cluster 2.
    r = update_centers(Matrix::from_rows({{0.0}, {1.0}, {10.0}}), Partition{{0, 0, 0}, 2}, 2);
    CHECK(r.repaired);
    CHECK(r.partition.labels == std::vector<int>{0, 0, 1});
    CHECK(r.centers(0, 0) == 0.5);
    CHECK(r.centers(1, 0) == 10.0);
}

TEST_CASE("lambda_step examples") {
    const LambdaGrid grid({0.0, 0.5, 1.0});
    // Two skewed 1-D groups.
    const Matrix x = Matrix::from_rows({{0.2}, {0.5}, {0.9}, {6.0}, {14.0}, {30.0}});
    const Partition part{{0, 0, 0, 1, 1, 1}, 2};

    // Exhaustive oracle over the whole grid.
    const auto rows = to_rows(x);
    std::vector<double> obj;
    for (double l : grid.values()) obj.push_back(oracle::objective(rows, part.labels, 2, {{l}}));
    const auto stepped = lambda_step(x, part, LambdaState::shared({0.0}), grid, StepType::one_step);
    if (obj[1] < obj[0])
        CHECK(stepped.values(0, 0) == 0.5);
    else
        CHECK(stepped.values(0, 0) == 0.0);
    // This dataset is skewed enough that the first rung does improve.
    CHECK(obj[1] < obj[0]);

    // At the grid optimum nothing moves.
    const std::size_t best = static_cast<std::size_t>(std::min_element(obj.begin(), obj.end()) - obj.begin());
    const auto at_best =
        lambda_step(x, part, LambdaState::shared({grid[best]}), grid, StepType::one_step);
    const bool neighbours_worse = (best == 0 || obj[best - 1] >= obj[best]) && (best + 1 == obj.size() || obj[best + 1] >= obj[best]);
    CHECK(neighbours_worse);
    CHECK(at_best.values(0, 0) == grid[best]);

    // Boundary: at the top only the inward rung exists.
    const auto from_top = lambda_step(x, part, LambdaState::shared({1.0}), grid, StepType::one_step);
    CHECK((from_top.values(0, 0) == 1.0 || from_top.values(0, 0) == 0.5));
    CHECK(from_top.values(0, 0) == (obj[1] < obj[2] ? 0.5 : 1.0));

    CHECK_THROWS_AS(lambda_step(x, part, LambdaState::shared({0.3}), grid, StepType::one_step), Error);
}

TEST_CASE("lambda_step one_step moves a single coordinate, per_dimension may move several") {
    std::mt19937_64 rng(21);
    const Matrix x = random_blobs(rng, 60, 3, 2, 0.5, true);
    Partition part{std::vector<int>(60), 2};
    for (std::size_t i = 0; i < 60; ++i) part.labels[i] = static_cast<int>(i % 2);
    const auto grid = LambdaGrid::default_grid();
    const auto start = LambdaState::shared({grid[10], grid[10], grid[10]});
    const double before = evaluate_objective(x, part, start);

    const auto one = lambda_step(x, part, start, grid, StepType::one_step);
    int moved = 0;
    for (std::size_t j = 0; j < 3; ++j) moved += one.values(0, j) != start.values(0, j);
    CHECK(moved <= 1);
    CHECK(evaluate_objective(x, part, one) <= before);

    const auto many = lambda_step(x, part, start, grid, StepType::per_dimension);
    CHECK(evaluate_objective(x, part, many) <= before);
    CHECK(many.on_grid(grid));

    Matrix per(2, 3, grid[10]);
    const auto pc = lambda_step(x, part, LambdaState::per_cluster(per), grid, StepType::per_dimension_per_cluster);
    CHECK(evaluate_objective(x, part, pc) <= evaluate_objective(x, part, LambdaState::per_cluster(per)));
}

TEST_CASE("fit: well separated groups are recovered") {
    const Matrix x = Matrix::from_rows({{0.0}, {0.1}, {0.2}, {100.0}, {100.1}});
    RunConfig cfg;
    cfg.k = 2;
    cfg.n_starts = 10;
    cfg.seed = 4;
    const auto m = tikmeans_fit(x, cfg);
    const std::vector<int> truth{0, 0, 0, 1, 1};
    CHECK(adjusted_rand_index(m.partition.labels, truth) == 1.0);
    CHECK(m.converged);
    CHECK(m.lambda.on_grid(cfg.grid));
}

TEST_CASE("fit: usage errors") {
    const Matrix x = Matrix::from_rows({{0.0}, {1.0}});
    RunConfig cfg;
    cfg.k = 2;
    CHECK_THROWS_AS(tikmeans_fit(x, cfg), Error);
    cfg.k = 1;
    cfg.n_starts = 0;
    CHECK_THROWS_AS(tikmeans_fit(x, cfg), Error);
}

TEST_CASE("fit: lambda mode none is Lloyd with the same seeds") {
    std::mt19937_64 rng(9);
    const Matrix x = random_blobs(rng, 50, 2, 3, 1.2, false);
    RunConfig cfg;
    cfg.k = 3;
    cfg.lambda_mode = ClusterMode::none;
    cfg.n_starts = 8;
    cfg.seed = 99;
    const auto m = tikmeans_fit(x, cfg);
    CHECK(m.lambda.all_zero());
    CHECK(m.objective == doctest::Approx(0.5 * 100.0 * std::log(wss(x, m.partition))).epsilon(1e-12));
}

TEST_CASE("fit: model invariants") {
    std::mt19937_64 rng(13);
    const Matrix x = random_blobs(rng, 80, 3, 3, 0.6, true);
    for (ClusterMode mode : {ClusterMode::shared, ClusterMode::per_cluster}) {
        RunConfig cfg;
        cfg.k = 3;
        cfg.lambda_mode = mode;
        cfg.n_starts = 6;
        cfg.seed = 17;
        const auto m = tikmeans_fit(x, cfg);
        CHECK(m.objective == doctest::Approx(evaluate_objective(x, m.partition, m.lambda)).epsilon(1e-9));
        CHECK(m.lambda.on_grid(cfg.grid));
        CHECK_FALSE(m.partition.has_empty_cluster());
        if (m.converged) {
            CHECK(m.trace.back().objective == m.trace[m.trace.size() - 2].objective);
        }
        // centers are the means of the transformed members
        const Matrix y = transform_matrix(x, m.lambda, &m.partition);
        const auto upd = update_centers(y, m.partition, 3);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t j = 0; j < 3; ++j) CHECK(m.centers(c, j) == doctest::Approx(upd.centers(c, j)).epsilon(1e-12));
    }
}

TEST_CASE("fit is deterministic and independent of worker count") {
    std::mt19937_64 rng(14);
    const Matrix x = random_blobs(rng, 60, 2, 2, 0.8, true);
    RunConfig cfg;
    cfg.k = 2;
    cfg.n_starts = 12;
    cfg.seed = 5;
    cfg.threads = 1;
    const auto a = tikmeans_fit(x, cfg);
    cfg.threads = 4;
    const auto b = tikmeans_fit(x, cfg);
    CHECK(a.partition == b.partition);
    CHECK(a.lambda == b.lambda);
    CHECK(a.objective == b.objective);
    CHECK(a.start_index == b.start_index);
    CHECK(a.centers == b.centers);
}

TEST_CASE("nonhomogeneous warm start reproduces the shared objective at iteration 0") {
    std::mt19937_64 rng(15);
    const Matrix x = random_blobs(rng, 60, 2, 2, 0.6, true);
    RunConfig cfg;
    cfg.k = 2;
    cfg.n_starts = 10;
    cfg.seed = 3;
    const auto shared = tikmeans_fit(x, cfg);
    RunConfig pc = cfg;
    pc.lambda_mode = ClusterMode::per_cluster;
    pc.n_starts = 1;
    const auto m = tikmeans_fit_nonhomogeneous(x, pc, &shared);
    CHECK(std::fabs(m.trace.front().objective - shared.objective) <= 1e-12);
    CHECK(m.objective <= shared.objective + 1e-9);
    CHECK(m.lambda.mode == LambdaMode::per_cluster);
}

TEST_CASE("nonhomogeneous runs terminate from poor random starts") {
    std::mt19937_64 rng(16);
    const Matrix x = random_blobs(rng, 40, 2, 2, 1.5, true);
    RunConfig cfg;
    cfg.k = 2;
    cfg.lambda_mode = ClusterMode::per_cluster;
    cfg.n_starts = 20;
    cfg.max_iter = 60;
    cfg.seed = 1;
    cfg.step_type = StepType::per_dimension_per_cluster;
    const auto m = tikmeans_fit(x, cfg);
    CHECK(m.iterations <= 60);
    CHECK((m.converged || m.cycle_detected || m.iterations == 60));
}

TEST_CASE("back_transform_centers") {
    ClusterModel m;
    m.centers = Matrix::from_rows({{0.8813735870195430252, 2.0}});
    m.lambda = LambdaState::shared({1.0, 0.0});
    const Matrix b = back_transform_centers(m);
    CHECK(b(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(b(0, 1) == 2.0);

    m.centers = Matrix::from_rows({{0.5}, {0.5}});
    m.lambda = LambdaState::per_cluster(Matrix::from_rows({{0.0}, {2.0}}));
    const Matrix c = back_transform_centers(m);
    CHECK(c(0, 0) == 0.5);
    CHECK(c(1, 0) == doctest::Approx(std::sinh(1.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("single-start run matches the reference Lloyd implementation") {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 20; ++t) {
        const Matrix x = random_blobs(rng, 40, 2, 3, 1.5, false);
        Matrix centers(3, 2);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t j = 0; j < 2; ++j) centers(c, j) = x(c * 5, j);
        RunConfig cfg;
        cfg.k = 3;
        cfg.lambda_mode = ClusterMode::none;
        cfg.max_iter = 200;
        const auto m = tikmeans_run_from(x, cfg, LambdaState::shared({0.0, 0.0}), centers);
        const auto ref = oracle::lloyd(to_rows(x), to_rows(centers), 200);
        CHECK(m.partition.labels == ref.labels);
    }
}

TEST_CASE("derive_seed is deterministic and spreads streams") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}
