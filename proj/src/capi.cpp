#include "tikmeans/tikmeans.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>

#include "tik/clustering.hpp"
#include "tik/data_io.hpp"
#include "tik/error.hpp"
#include "tik/metrics.hpp"
#include "tik/model_selection.hpp"

struct tik_dataset {
    tik::Dataset data;
};

struct tik_model {
    tik::ClusterModel model;
};

struct tik_jump_profile {
    tik::JumpProfile profile;
};

namespace {

thread_local std::string last_error;

tik_status status_of(tik::ErrorKind k) {
    switch (k) {
        case tik::ErrorKind::usage: return TIK_ERR_USAGE;
        case tik::ErrorKind::domain: return TIK_ERR_DOMAIN;
        case tik::ErrorKind::range: return TIK_ERR_RANGE;
        case tik::ErrorKind::io: return TIK_ERR_IO;
        case tik::ErrorKind::parse: return TIK_ERR_PARSE;
    }
    return TIK_ERR_INTERNAL;
}

template <class F>
tik_status guard(F&& f) {
    try {
        f();
        last_error.clear();
        return TIK_OK;
    } catch (const tik::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
    } catch (const std::exception& e) {
        last_error = e.what();
    } catch (...) {
        last_error = "unknown error";
    }
    return TIK_ERR_INTERNAL;
}

void require(bool ok, const char* what) {
    if (!ok) throw tik::Error(tik::ErrorKind::usage, what);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void copy_out(std::span<const double> src, double* out, std::size_t len) {
    require(out != nullptr, "null output buffer");
    require(len >= src.size(), "output buffer too small");
    std::copy(src.begin(), src.end(), out);
}

tik::RunConfig to_run_config(const tik_config* c) {
    require(c != nullptr, "null config");
    tik::RunConfig r;
    r.k = c->k;
    switch (c->lambda_mode) {
        case TIK_MODE_NONE: r.lambda_mode = tik::ClusterMode::none; break;
        case TIK_MODE_SHARED: r.lambda_mode = tik::ClusterMode::shared; break;
        case TIK_MODE_PER_CLUSTER: r.lambda_mode = tik::ClusterMode::per_cluster; break;
        default: require(false, "unknown lambda mode");
    }
    switch (c->step_type) {
        case TIK_STEP_ONE: r.step_type = tik::StepType::one_step; break;
        case TIK_STEP_PER_DIMENSION: r.step_type = tik::StepType::per_dimension; break;
        case TIK_STEP_PER_DIMENSION_PER_CLUSTER: r.step_type = tik::StepType::per_dimension_per_cluster; break;
        default: require(false, "unknown step type");
    }
    r.n_starts = c->n_starts;
    r.max_iter = c->max_iter;
    r.seed = c->seed;
    r.threads = c->threads;
    require(c->threads >= 0, "threads must be non-negative");
    require(c->n_starts_shared >= 1, "shared warm-start stage needs at least one start");
    if (c->grid) r.grid = tik::LambdaGrid(std::vector<double>(c->grid, c->grid + c->grid_len));
    return r;
}

std::vector<int> labels_of(const tik_model* m) {
    std::vector<int> out = m->model.partition.labels;
    for (auto& l : out) ++l;
    return out;
}

std::vector<std::string> reference_labels(const tik_model* m, const tik_dataset* d) {
    require(m && d, "null handle");
    require(d->data.labels.has_value(), "dataset has no label column");
    require(d->data.labels->size() == m->model.partition.size(), "label count does not match the model");
    return *d->data.labels;
}

}  // namespace

extern "C" {

const char* tik_last_error(void) { return last_error.c_str(); }

const char* tik_version(void) { return "1.0.0"; }

void tik_string_free(char* s) { std::free(s); }

tik_status tik_dataset_load_csv(const char* path, const char* label_column, tik_dataset** out) {
    return guard([&] {
        require(path && out, "null argument");
        std::optional<std::string> label;
        if (label_column) label = label_column;
        *out = new tik_dataset{tik::load_csv(path, label)};
    });
}

tik_status tik_dataset_from_matrix(const double* data, size_t n, size_t p, tik_dataset** out) {
    return guard([&] {
        require(data && out, "null argument");
        require(n > 0 && p > 0, "empty matrix");
        tik::Dataset d;
        d.x = tik::Matrix(n, p, std::vector<double>(data, data + n * p));
        for (size_t j = 0; j < p; ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
        d.provenance = "memory";
        *out = new tik_dataset{std::move(d)};
    });
}

tik_status tik_dataset_simulate_preset(const char* name, uint64_t seed, tik_dataset** out) {
    return guard([&] {
        require(name && out, "null argument");
        *out = new tik_dataset{tik::simulate_skewed(tik::simulation_preset(name, seed))};
    });
}

tik_status tik_dataset_simulate(const size_t* n_per_cluster, size_t k, const double* latent_means, size_t p,
                                double latent_sd, const double* lambda_true, uint64_t seed, tik_dataset** out) {
    return guard([&] {
        require(n_per_cluster && latent_means && lambda_true && out, "null argument");
        require(k > 0 && p > 0, "need at least one cluster and one dimension");
        tik::SimulationSpec spec;
        spec.n_per_cluster.assign(n_per_cluster, n_per_cluster + k);
        spec.latent_means = tik::Matrix(k, p, std::vector<double>(latent_means, latent_means + k * p));
        spec.latent_sd = latent_sd;
        spec.lambda_true.assign(lambda_true, lambda_true + p);
        spec.seed = seed;
        *out = new tik_dataset{tik::simulate_skewed(spec)};
    });
}

void tik_dataset_free(tik_dataset* d) { delete d; }

size_t tik_dataset_rows(const tik_dataset* d) { return d ? d->data.x.rows() : 0; }

size_t tik_dataset_cols(const tik_dataset* d) { return d ? d->data.x.cols() : 0; }

int tik_dataset_has_labels(const tik_dataset* d) { return d && d->data.labels.has_value() ? 1 : 0; }

tik_status tik_dataset_values(const tik_dataset* d, double* out, size_t len) {
    return guard([&] {
        require(d != nullptr, "null dataset");
        copy_out(d->data.x.data(), out, len);
    });
}

const char* tik_dataset_feature_name(const tik_dataset* d, size_t j) {
    if (!d || j >= d->data.feature_names.size()) return nullptr;
    return d->data.feature_names[j].c_str();
}

const char* tik_dataset_label(const tik_dataset* d, size_t i) {
    if (!d || !d->data.labels || i >= d->data.labels->size()) return nullptr;
    return (*d->data.labels)[i].c_str();
}

tik_status tik_dataset_rms_scale(tik_dataset* d, double* factors) {
    return guard([&] {
        require(d != nullptr, "null dataset");
        auto s = tik::rms_scale(d->data.x, d->data.feature_names);
        if (factors) std::copy(s.factors.begin(), s.factors.end(), factors);
        d->data.x = std::move(s.x);
    });
}

tik_status tik_dataset_shift_positive(tik_dataset* d, double margin, double* offsets) {
    return guard([&] {
        require(d != nullptr, "null dataset");
        std::optional<double> m;
        if (margin >= 0) m = margin;
        auto s = tik::shift_positive(d->data.x, m);
        if (offsets) std::copy(s.offsets.begin(), s.offsets.end(), offsets);
        d->data.x = std::move(s.x);
    });
}

tik_status tik_dataset_transform(tik_dataset* d, const double* lambda, size_t p, int inverse) {
    return guard([&] {
        require(d && lambda, "null argument");
        require(p == d->data.x.cols(), "lambda count must equal the number of columns");
        const auto state = tik::LambdaState::shared(std::vector<double>(lambda, lambda + p));
        d->data.x = inverse ? tik::inverse_transform_matrix(d->data.x, state) : tik::transform_matrix(d->data.x, state);
    });
}

tik_status tik_dataset_transform_partitioned(tik_dataset* d, const double* lambda, size_t k, size_t p,
                                             const int* labels, size_t n, int inverse) {
    return guard([&] {
        require(d && lambda && labels, "null argument");
        require(p == d->data.x.cols(), "lambda count must equal the number of columns");
        require(n == d->data.x.rows(), "label count must equal the number of rows");
        require(k > 0, "need at least one lambda row");
        tik::Partition part{std::vector<int>(n), static_cast<int>(k)};
        for (size_t i = 0; i < n; ++i) {
            require(labels[i] >= 1 && static_cast<size_t>(labels[i]) <= k, "label out of range");
            part.labels[i] = labels[i] - 1;
        }
        const auto state =
            tik::LambdaState::per_cluster(tik::Matrix(k, p, std::vector<double>(lambda, lambda + k * p)));
        d->data.x = inverse ? tik::inverse_transform_matrix(d->data.x, state, &part)
                            : tik::transform_matrix(d->data.x, state, &part);
    });
}

tik_status tik_dataset_to_csv(const tik_dataset* d, const char* label_header, char** out) {
    return guard([&] {
        require(d && out, "null argument");
        std::ostringstream s;
        tik::write_csv(s, d->data, label_header ? label_header : "label");
        *out = dup_string(s.str());
    });
}

void tik_config_default(tik_config* c) {
    if (!c) return;
    *c = tik_config{};
    c->k = 2;
    c->lambda_mode = TIK_MODE_SHARED;
    c->step_type = TIK_STEP_ONE;
    c->n_starts = tik::default_starts_shared;
    c->n_starts_shared = tik::default_starts_shared;
    c->max_iter = 500;
    c->seed = 1;
    c->threads = 0;
    c->grid = nullptr;
    c->grid_len = 0;
}

tik_status tik_fit(const tik_dataset* d, const tik_config* c, tik_model** out) {
    return guard([&] {
        require(d && out, "null argument");
        const auto cfg = to_run_config(c);
        *out = new tik_model{tik::fit_staged(d->data.x, cfg, c->n_starts_shared)};
    });
}

void tik_model_free(tik_model* m) { delete m; }

int tik_model_k(const tik_model* m) { return m ? m->model.partition.k : 0; }

size_t tik_model_rows(const tik_model* m) { return m ? m->model.partition.size() : 0; }

size_t tik_model_cols(const tik_model* m) { return m ? m->model.centers.cols() : 0; }

tik_status tik_model_labels(const tik_model* m, int* out, size_t n) {
    return guard([&] {
        require(m && out, "null argument");
        require(n >= m->model.partition.size(), "output buffer too small");
        const auto l = labels_of(m);
        std::copy(l.begin(), l.end(), out);
    });
}

tik_status tik_model_centers(const tik_model* m, int original_space, double* out, size_t len) {
    return guard([&] {
        require(m != nullptr, "null model");
        if (original_space)
            copy_out(tik::back_transform_centers(m->model).data(), out, len);
        else
            copy_out(m->model.centers.data(), out, len);
    });
}

size_t tik_model_lambda_rows(const tik_model* m) { return m ? m->model.lambda.values.rows() : 0; }

tik_status tik_model_lambda(const tik_model* m, double* out, size_t len) {
    return guard([&] {
        require(m != nullptr, "null model");
        copy_out(m->model.lambda.values.data(), out, len);
    });
}

double tik_model_objective(const tik_model* m) { return m ? m->model.objective : 0.0; }
double tik_model_wss(const tik_model* m) { return m ? m->model.wss : 0.0; }
int tik_model_iterations(const tik_model* m) { return m ? m->model.iterations : 0; }
int tik_model_converged(const tik_model* m) { return m && m->model.converged ? 1 : 0; }
int tik_model_cycle_detected(const tik_model* m) { return m && m->model.cycle_detected ? 1 : 0; }
int tik_model_degenerate(const tik_model* m) { return m && m->model.degenerate ? 1 : 0; }
uint64_t tik_model_seed(const tik_model* m) { return m ? m->model.seed : 0; }
int tik_model_start_index(const tik_model* m) { return m ? m->model.start_index : 0; }
size_t tik_model_trace_length(const tik_model* m) { return m ? m->model.trace.size() : 0; }

tik_status tik_model_trace(const tik_model* m, double* objective, int* repaired, size_t len) {
    return guard([&] {
        require(m && objective, "null argument");
        const auto& t = m->model.trace;
        require(len >= t.size(), "output buffer too small");
        for (size_t i = 0; i < t.size(); ++i) {
            objective[i] = t[i].objective;
            if (repaired) repaired[i] = t[i].repaired ? 1 : 0;
        }
    });
}

tik_status tik_ari(const int* a, const int* b, size_t n, double* out) {
    return guard([&] {
        require(a && b && out, "null argument");
        *out = tik::adjusted_rand_index(std::span<const int>(a, n), std::span<const int>(b, n));
    });
}

tik_status tik_model_ari(const tik_model* m, const tik_dataset* d, double* out) {
    return guard([&] {
        require(out != nullptr, "null argument");
        const auto ref = tik::encode_labels(reference_labels(m, d));
        *out = tik::adjusted_rand_index(ref, m->model.partition.labels);
    });
}

tik_status tik_model_confusion(const tik_model* m, const tik_dataset* d, int csv, char** out) {
    return guard([&] {
        require(out != nullptr, "null argument");
        const auto ref = reference_labels(m, d);
        std::vector<std::string> est;
        for (int l : labels_of(m)) est.push_back(std::to_string(l));
        const auto cm = tik::confusion_matrix(ref, est);
        *out = dup_string(csv ? cm.to_csv() : cm.to_text());
    });
}

int tik_kmax_default(int k_true_hint) {
    return tik::kmax_default(k_true_hint > 0 ? std::optional<int>(k_true_hint) : std::nullopt);
}

tik_status tik_default_eta_grid(double* out, size_t cap, size_t* len) {
    return guard([&] {
        const auto g = tik::default_eta_grid();
        if (len) *len = g.size();
        if (out) std::copy_n(g.begin(), std::min(cap, g.size()), out);
    });
}

tik_status tik_jump_select(const tik_dataset* d, int kmax, const double* etas, size_t n_etas, const tik_config* c,
                           tik_jump_profile** out) {
    return guard([&] {
        require(d && out, "null argument");
        const auto cfg = to_run_config(c);
        std::vector<double> grid = etas ? std::vector<double>(etas, etas + n_etas) : tik::default_eta_grid();
        *out = new tik_jump_profile{tik::jump_selection(d->data.x, kmax, std::move(grid), cfg, c->n_starts_shared)};
    });
}

void tik_jump_profile_free(tik_jump_profile* j) { delete j; }
int tik_jump_selected_k(const tik_jump_profile* j) { return j ? j->profile.selected_k : 0; }
int tik_jump_fallback(const tik_jump_profile* j) { return j && j->profile.fallback ? 1 : 0; }
int tik_jump_kmax(const tik_jump_profile* j) { return j ? static_cast<int>(j->profile.k_values.size()) : 0; }
int tik_jump_longest_run_k(const tik_jump_profile* j) { return j ? j->profile.longest_run_k : 0; }
size_t tik_jump_longest_run_length(const tik_jump_profile* j) { return j ? j->profile.longest_run_length : 0; }

tik_status tik_jump_distortions(const tik_jump_profile* j, double* out, size_t len) {
    return guard([&] {
        require(j != nullptr, "null profile");
        copy_out(j->profile.distortions, out, len);
    });
}

tik_status tik_jump_table_csv(const tik_jump_profile* j, char** out) {
    return guard([&] {
        require(j && out, "null argument");
        *out = dup_string(j->profile.to_csv());
    });
}

tik_status tik_jump_distortions_csv(const tik_jump_profile* j, char** out) {
    return guard([&] {
        require(j && out, "null argument");
        *out = dup_string(j->profile.distortions_csv());
    });
}

tik_status tik_jump_svg(const tik_jump_profile* j, char** out) {
    return guard([&] {
        require(j && out, "null argument");
        *out = dup_string(j->profile.to_svg());
    });
}

tik_status tik_ihs_forward(double x, double lambda, double* out) {
    return guard([&] {
        require(out != nullptr, "null argument");
        *out = tik::ihs_forward(x, lambda);
    });
}

tik_status tik_ihs_inverse(double y, double lambda, double* out) {
    return guard([&] {
        require(out != nullptr, "null argument");
        *out = tik::ihs_inverse(y, lambda);
    });
}

tik_status tik_grid_parse(const char* spec, double* out, size_t cap, size_t* len) {
    return guard([&] {
        require(spec != nullptr, "null grid spec");
        const auto g = tik::LambdaGrid::parse(spec);
        if (len) *len = g.size();
        if (out) std::copy_n(g.values().begin(), std::min(cap, g.size()), out);
    });
}

tik_status tik_grid_default(double* out, size_t cap, size_t* len) {
    return guard([&] {
        const auto g = tik::LambdaGrid::default_grid();
        if (len) *len = g.size();
        if (out) std::copy_n(g.values().begin(), std::min(cap, g.size()), out);
    });
}

}  // extern "C"
