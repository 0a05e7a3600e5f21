#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tikmeans/tikmeans.h"

using nlohmann::ordered_json;

namespace {

constexpr int report_schema_version = 1;

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(tik_status s) {
    if (s != TIK_OK) throw Failure(tik_last_error());
}

using DatasetPtr = std::unique_ptr<tik_dataset, decltype(&tik_dataset_free)>;
using ModelPtr = std::unique_ptr<tik_model, decltype(&tik_model_free)>;
using ProfilePtr = std::unique_ptr<tik_jump_profile, decltype(&tik_jump_profile_free)>;

std::string take(char* s) {
    std::string out(s);
    tik_string_free(s);
    return out;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw Failure("not a number: '" + item + "'");
        }
        if (used != item.size()) throw Failure("not a number: '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw Failure("empty list");
    return out;
}

std::vector<double> parse_grid(const std::string& spec) {
    std::size_t len = 0;
    check(tik_grid_parse(spec.c_str(), nullptr, 0, &len));
    std::vector<double> g(len);
    check(tik_grid_parse(spec.c_str(), g.data(), g.size(), &len));
    return g;
}

std::vector<double> default_grid() {
    std::size_t len = 0;
    check(tik_grid_default(nullptr, 0, &len));
    std::vector<double> g(len);
    check(tik_grid_default(g.data(), g.size(), &len));
    return g;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure("cannot open " + path + " for writing");
    out << text;
    if (!out) throw Failure("write failed: " + path);
}

ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

ordered_json matrix_json(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
    ordered_json m = ordered_json::array();
    for (std::size_t i = 0; i < rows; ++i) {
        ordered_json r = ordered_json::array();
        for (std::size_t j = 0; j < cols; ++j) r.push_back(number(v[i * cols + j]));
        m.push_back(r);
    }
    return m;
}

// Options shared by cluster and select-k.
struct Engine {
    std::string input;
    std::string lambda_mode = "shared";
    std::string grid;
    std::string step_type = "one";
    std::optional<int> starts;
    int shared_starts = 100;
    int max_iter = 500;
    std::uint64_t seed = 1;
    std::string scale = "none";
    bool shift = false;
    std::optional<double> shift_margin;
    std::string labels;
    int threads = -1;

    void add(CLI::App* app) {
        app->add_option("--input", input, "CSV file with a header row")->required();
        app->add_option("--lambda-mode", lambda_mode, "none, shared or per-cluster")
            ->check(CLI::IsMember({"none", "shared", "per-cluster"}));
        app->add_option("--grid", grid, "lambda grid, e.g. \"0,0.05..2\" or \"0,0.1,0.5;1,0.5..4\"");
        app->add_option("--step-type", step_type, "one, per-dimension or per-dimension-per-cluster")
            ->check(CLI::IsMember({"one", "per-dimension", "per-dimension-per-cluster"}));
        app->add_option("--starts", starts, "random starts (default 100 shared/none, 20 per-cluster)")
            ->check(CLI::PositiveNumber);
        app->add_option("--shared-starts", shared_starts, "starts of the shared stage before a per-cluster fit")
            ->check(CLI::PositiveNumber);
        app->add_option("--max-iter", max_iter, "iteration cap per start")->check(CLI::PositiveNumber);
        app->add_option("--seed", seed, "master seed");
        app->add_option("--scale", scale, "none or rms")->check(CLI::IsMember({"none", "rms"}));
        app->add_flag("--shift-positive", shift, "shift columns with non-positive values above zero");
        app->add_option("--shift-margin", shift_margin, "margin for --shift-positive (default 1% of column RMS)")
            ->check(CLI::PositiveNumber);
        app->add_option("--labels", labels, "reference label column");
        app->add_option("--threads", threads, "worker cap (default $TIKMEANS_THREADS or all cores)")
            ->check(CLI::NonNegativeNumber);
    }

    int resolved_threads() const {
        if (threads >= 0) return threads;
        if (const char* env = std::getenv("TIKMEANS_THREADS")) {
            try {
                const int t = std::stoi(env);
                if (t >= 0) return t;
            } catch (const std::exception&) {
            }
            throw Failure(std::string("TIKMEANS_THREADS is not a non-negative integer: ") + env);
        }
        return 0;
    }

    tik_lambda_mode mode() const {
        if (lambda_mode == "none") return TIK_MODE_NONE;
        if (lambda_mode == "per-cluster") return TIK_MODE_PER_CLUSTER;
        return TIK_MODE_SHARED;
    }

    tik_step_type step() const {
        if (step_type == "per-dimension") return TIK_STEP_PER_DIMENSION;
        if (step_type == "per-dimension-per-cluster") return TIK_STEP_PER_DIMENSION_PER_CLUSTER;
        return TIK_STEP_ONE;
    }

    int resolved_starts() const {
        if (starts) return *starts;
        return mode() == TIK_MODE_PER_CLUSTER ? 20 : 100;
    }

    std::vector<double> resolved_grid() const { return grid.empty() ? default_grid() : parse_grid(grid); }

    DatasetPtr load(ordered_json& prep) const {
        tik_dataset* raw = nullptr;
        check(tik_dataset_load_csv(input.c_str(), labels.empty() ? nullptr : labels.c_str(), &raw));
        DatasetPtr d(raw, tik_dataset_free);
        const std::size_t p = tik_dataset_cols(d.get());
        if (shift) {
            std::vector<double> off(p);
            check(tik_dataset_shift_positive(d.get(), shift_margin.value_or(-1.0), off.data()));
            prep["shift_offsets"] = off;
        }
        if (scale == "rms") {
            std::vector<double> f(p);
            check(tik_dataset_rms_scale(d.get(), f.data()));
            prep["scale_factors"] = f;
        }
        return d;
    }

    tik_config config(int k, const std::vector<double>& g) const {
        tik_config c;
        tik_config_default(&c);
        c.k = k;
        c.lambda_mode = mode();
        c.step_type = step();
        c.n_starts = resolved_starts();
        c.n_starts_shared = shared_starts;
        c.max_iter = max_iter;
        c.seed = seed;
        c.threads = resolved_threads();
        c.grid = g.data();
        c.grid_len = g.size();
        return c;
    }

    ordered_json echo(const std::vector<double>& g) const {
        ordered_json j;
        j["input"] = input;
        j["lambda_mode"] = lambda_mode;
        j["grid"] = g;
        j["step_type"] = step_type;
        j["starts"] = resolved_starts();
        j["shared_starts"] = shared_starts;
        j["max_iter"] = max_iter;
        j["seed"] = seed;
        j["scale"] = scale;
        j["shift_positive"] = shift;
        j["shift_margin"] = shift_margin ? ordered_json(*shift_margin) : ordered_json(nullptr);
        j["labels"] = labels.empty() ? ordered_json(nullptr) : ordered_json(labels);
        return j;
    }
};

ordered_json confusion_json(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        while (std::getline(ss, cell, ',')) cols.push_back(cell);
    }
    ordered_json rows = ordered_json::array(), counts = ordered_json::array();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        rows.push_back(cell);
        ordered_json r = ordered_json::array();
        while (std::getline(ss, cell, ',')) r.push_back(std::stoll(cell));
        counts.push_back(r);
    }
    return {{"reference", rows}, {"clusters", cols}, {"counts", counts}};
}

int run_cluster(const Engine& e, int k, const std::string& output, const std::string& format) {
    const auto t0 = std::chrono::steady_clock::now();
    ordered_json prep = ordered_json::object();
    auto data = e.load(prep);
    const auto g = e.resolved_grid();
    const tik_config cfg = e.config(k, g);

    tik_model* raw = nullptr;
    check(tik_fit(data.get(), &cfg, &raw));
    ModelPtr m(raw, tik_model_free);

    const std::size_t n = tik_model_rows(m.get()), p = tik_model_cols(m.get());
    std::vector<int> labels(n);
    check(tik_model_labels(m.get(), labels.data(), n));
    const std::size_t lrows = tik_model_lambda_rows(m.get());
    std::vector<double> lambda(lrows * p), centers(static_cast<std::size_t>(k) * p), back(centers.size());
    check(tik_model_lambda(m.get(), lambda.data(), lambda.size()));
    check(tik_model_centers(m.get(), 0, centers.data(), centers.size()));
    check(tik_model_centers(m.get(), 1, back.data(), back.size()));

    const bool converged = tik_model_converged(m.get()) != 0;
    const bool cycled = tik_model_cycle_detected(m.get()) != 0;

    if (format == "csv") {
        std::ostringstream out;
        for (std::size_t j = 0; j < p; ++j) out << tik_dataset_feature_name(data.get(), j) << ',';
        out << "cluster\n";
        std::vector<double> x(n * p);
        check(tik_dataset_values(data.get(), x.data(), x.size()));
        out.precision(17);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) out << x[i * p + j] << ',';
            out << labels[i] << '\n';
        }
        write_text(output, out.str());
        return converged && !cycled ? 0 : 2;
    }

    ordered_json report;
    report["schema_version"] = report_schema_version;
    report["command"] = "cluster";
    ordered_json cfg_json = e.echo(g);
    cfg_json["k"] = k;
    report["config"] = cfg_json;
    report["preprocessing"] = prep;
    ordered_json model;
    model["k"] = k;
    model["lambda_mode"] = e.lambda_mode;
    model["lambda"] = matrix_json(lambda, lrows, p);
    model["objective"] = number(tik_model_objective(m.get()));
    model["wss"] = tik_model_wss(m.get());
    model["iterations"] = tik_model_iterations(m.get());
    model["converged"] = converged;
    model["cycle_detected"] = cycled;
    model["degenerate"] = tik_model_degenerate(m.get()) != 0;
    model["start_index"] = tik_model_start_index(m.get());
    model["start_seed"] = tik_model_seed(m.get());
    model["centers_transformed"] = matrix_json(centers, static_cast<std::size_t>(k), p);
    model["centers"] = matrix_json(back, static_cast<std::size_t>(k), p);
    model["labels"] = labels;
    report["model"] = model;

    if (tik_dataset_has_labels(data.get())) {
        double ari = 0;
        check(tik_model_ari(m.get(), data.get(), &ari));
        char* csv = nullptr;
        check(tik_model_confusion(m.get(), data.get(), 1, &csv));
        report["evaluation"] = {{"ari", ari}, {"confusion", confusion_json(take(csv))}};
    }
    ordered_json warnings = ordered_json::array();
    if (!converged) warnings.push_back("best start did not converge");
    if (cycled) warnings.push_back("best start stopped on a detected cycle");
    report["warnings"] = warnings;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report["timing"] = {{"seconds", secs}, {"threads", cfg.threads}};

    write_text(output, report.dump(2) + "\n");
    return converged && !cycled ? 0 : 2;
}

struct EtaFlags {
    std::string list;
    double min = -10, max = 10, exclude = 0.05;
    int count = 400;
    bool custom = false;

    std::vector<double> resolve() const {
        if (!list.empty()) return parse_list(list);
        if (!custom) {
            std::size_t len = 0;
            check(tik_default_eta_grid(nullptr, 0, &len));
            std::vector<double> g(len);
            check(tik_default_eta_grid(g.data(), g.size(), &len));
            return g;
        }
        if (count < 2 || !(max > min)) throw Failure("eta range needs --eta-count >= 2 and --eta-max > --eta-min");
        std::vector<double> g;
        for (int i = 0; i < count; ++i) {
            const double v = min + (max - min) * i / (count - 1);
            if (std::fabs(v) >= exclude && v != 0.0) g.push_back(v);
        }
        if (g.empty()) throw Failure("eta range is empty after exclusion");
        return g;
    }
};

int run_select_k(const Engine& e, std::optional<int> kmax, std::optional<int> hint, const EtaFlags& eta,
                 const std::string& svg, const std::string& output) {
    ordered_json prep = ordered_json::object();
    auto data = e.load(prep);
    const auto g = e.resolved_grid();
    const int km = kmax ? *kmax : tik_kmax_default(hint.value_or(0));
    const tik_config cfg = e.config(1, g);
    const auto etas = eta.resolve();

    tik_jump_profile* raw = nullptr;
    check(tik_jump_select(data.get(), km, etas.data(), etas.size(), &cfg, &raw));
    ProfilePtr prof(raw, tik_jump_profile_free);

    std::ostringstream out;
    out << "# input=" << e.input << " kmax=" << km << " lambda_mode=" << e.lambda_mode << " step_type=" << e.step_type
        << " starts=" << e.resolved_starts() << " shared_starts=" << e.shared_starts << " seed=" << e.seed
        << " scale=" << e.scale << " shift_positive=" << (e.shift ? "true" : "false") << " eta_count=" << etas.size()
        << "\n";
    char* s = nullptr;
    check(tik_jump_distortions_csv(prof.get(), &s));
    out << take(s) << "\n";
    check(tik_jump_table_csv(prof.get(), &s));
    out << take(s) << "\n";
    if (tik_jump_fallback(prof.get()))
        out << "# warning: no interior K was chosen for any eta; using the most frequent K\n";
    out << "# longest run: K=" << tik_jump_longest_run_k(prof.get())
        << " over " << tik_jump_longest_run_length(prof.get()) << " eta values\n";
    out << "selected K: " << tik_jump_selected_k(prof.get()) << "\n";
    write_text(output, out.str());

    if (!svg.empty()) {
        check(tik_jump_svg(prof.get(), &s));
        write_text(svg, take(s));
    }
    return 0;
}

int run_simulate(const std::string& preset, std::uint64_t seed, const std::string& n_list, const std::string& means,
                 double sd, const std::string& lambda, const std::string& output) {
    tik_dataset* raw = nullptr;
    if (!preset.empty()) {
        check(tik_dataset_simulate_preset(preset.c_str(), seed, &raw));
    } else {
        if (n_list.empty() || means.empty() || lambda.empty())
            throw Failure("simulate needs --preset or all of --n, --means and --lambda");
        std::vector<std::size_t> n;
        for (double v : parse_list(n_list)) {
            if (v < 1 || v != std::floor(v)) throw Failure("--n entries must be positive integers");
            n.push_back(static_cast<std::size_t>(v));
        }
        const auto lam = parse_list(lambda);
        std::vector<double> mu;
        std::stringstream ss(means);
        std::string row;
        std::size_t rows = 0;
        while (std::getline(ss, row, ';')) {
            const auto r = parse_list(row);
            if (r.size() != lam.size()) throw Failure("every --means row needs one value per --lambda entry");
            mu.insert(mu.end(), r.begin(), r.end());
            ++rows;
        }
        if (rows != n.size()) throw Failure("--means needs one row per --n entry");
        check(tik_dataset_simulate(n.data(), n.size(), mu.data(), lam.size(), sd, lam.data(), seed, &raw));
    }
    DatasetPtr d(raw, tik_dataset_free);
    char* csv = nullptr;
    check(tik_dataset_to_csv(d.get(), "label", &csv));
    write_text(output, take(csv));
    return 0;
}

int run_transform(const std::string& input, const std::string& lambda, const std::string& from_report,
                  const std::string& labels, bool inverse, const std::string& output) {
    tik_dataset* raw = nullptr;
    check(tik_dataset_load_csv(input.c_str(), labels.empty() ? nullptr : labels.c_str(), &raw));
    DatasetPtr d(raw, tik_dataset_free);
    const std::size_t p = tik_dataset_cols(d.get());
    if (!lambda.empty() == !from_report.empty()) throw Failure("give exactly one of --lambda and --from-report");
    if (!lambda.empty()) {
        const auto lam = parse_list(lambda);
        check(tik_dataset_transform(d.get(), lam.data(), lam.size(), inverse ? 1 : 0));
    } else {
        std::ifstream in(from_report);
        if (!in) throw Failure("cannot open " + from_report);
        ordered_json rep;
        try {
            in >> rep;
        } catch (const std::exception& ex) {
            throw Failure(from_report + ": " + ex.what());
        }
        if (!rep.contains("model") || !rep["model"].contains("lambda"))
            throw Failure(from_report + ": not a cluster report");
        const auto rows = rep["model"]["lambda"];
        std::vector<double> lam;
        for (const auto& r : rows)
            for (const auto& v : r) lam.push_back(v.get<double>());
        if (rows.size() == 1) {
            check(tik_dataset_transform(d.get(), lam.data(), lam.size(), inverse ? 1 : 0));
        } else {
            const auto lab = rep["model"]["labels"].get<std::vector<int>>();
            if (lam.size() != rows.size() * p) throw Failure("lambda count must equal the number of columns");
            check(tik_dataset_transform_partitioned(d.get(), lam.data(), rows.size(), p, lab.data(), lab.size(),
                                                    inverse ? 1 : 0));
        }
    }
    char* csv = nullptr;
    check(tik_dataset_to_csv(d.get(), labels.empty() ? "label" : labels.c_str(), &csv));
    write_text(output, take(csv));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transformation-infused K-means clustering"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tik_version());

    Engine cl_engine;
    int k = 0;
    std::string cl_output, format = "json";
    auto* cluster = app.add_subcommand("cluster", "fit a clustering and write a report");
    cl_engine.add(cluster);
    cluster->add_option("--k", k, "number of clusters")->required()->check(CLI::PositiveNumber);
    cluster->add_option("--output", cl_output, "report path (default stdout)");
    cluster->add_option("--format", format, "json report or csv of data with cluster labels")
        ->check(CLI::IsMember({"json", "csv"}));

    Engine sk_engine;
    std::optional<int> kmax, hint;
    EtaFlags eta;
    std::string svg, sk_output;
    auto* select = app.add_subcommand("select-k", "choose K with the jump statistic");
    sk_engine.add(select);
    select->add_option("--kmax", kmax, "largest K fitted")->check(CLI::PositiveNumber);
    select->add_option("--k-true-hint", hint, "expected K; sets kmax to min(2*hint+1, 20)")
        ->check(CLI::PositiveNumber);
    select->add_option("--eta", eta.list, "explicit comma-separated eta values");
    select->add_option("--eta-min", eta.min, "start of the eta range");
    select->add_option("--eta-max", eta.max, "end of the eta range");
    select->add_option("--eta-count", eta.count, "points in the eta range");
    select->add_option("--eta-exclude", eta.exclude, "drop |eta| below this");
    select->add_option("--svg", svg, "write the jump selection plot");
    select->add_option("--output", sk_output, "table path (default stdout)");

    std::string preset, n_list, means, sim_lambda, sim_output;
    std::uint64_t sim_seed = 1;
    double sd = 1.0;
    auto* simulate = app.add_subcommand("simulate", "generate skewed clusters");
    simulate->add_option("--preset", preset, "named generator");
    simulate->add_option("--seed", sim_seed, "random seed");
    simulate->add_option("--n", n_list, "observations per cluster, comma-separated");
    simulate->add_option("--means", means, "latent means, rows split by ';'");
    simulate->add_option("--sd", sd, "latent standard deviation")->check(CLI::PositiveNumber);
    simulate->add_option("--lambda", sim_lambda, "true lambda per dimension");
    simulate->add_option("--output", sim_output, "CSV path (default stdout)");

    std::string tr_input, tr_lambda, report, tr_labels, tr_output;
    bool inverse = false;
    auto* transform = app.add_subcommand("transform", "apply the IHS transform columnwise");
    transform->add_option("--input", tr_input, "CSV file")->required();
    transform->add_option("--lambda", tr_lambda, "lambda per column, comma-separated");
    transform->add_option("--from-report", report, "take lambda (and labels if per cluster) from a cluster report");
    transform->add_option("--labels", tr_labels, "label column to carry through");
    transform->add_flag("--inverse", inverse, "apply the inverse transform");
    transform->add_option("--output", tr_output, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (cluster->parsed()) return run_cluster(cl_engine, k, cl_output, format);
        if (select->parsed()) {
            eta.custom = select->count("--eta-min") || select->count("--eta-max") || select->count("--eta-count") ||
                         select->count("--eta-exclude");
            return run_select_k(sk_engine, kmax, hint, eta, svg, sk_output);
        }
        if (simulate->parsed()) return run_simulate(preset, sim_seed, n_list, means, sd, sim_lambda, sim_output);
        if (transform->parsed()) return run_transform(tr_input, tr_lambda, report, tr_labels, inverse, tr_output);
    } catch (const Failure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
