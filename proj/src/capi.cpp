/*
 * Copyright 2026 The repalign Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "repalign/repalign.h"

#include "repalign/align.hpp"
#include "repalign/hac.hpp"
#include "repalign/lasso.hpp"
#include "repalign/mi.hpp"
#include "repalign/report.hpp"
#include "repalign/spectral.hpp"
#include "repalign/stats.hpp"
#include "repalign/synth.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <new>

using namespace repalign;

struct repalign_acts {
  ActivationMatrix value;
};
struct repalign_matrix {
  MatrixD value;
};
struct repalign_assignment {
  Assignment value;
};
struct repalign_mapping {
  MappingModel value;
};
struct repalign_tree {
  ClusterTree value;
};
struct repalign_clustering {
  SpectralResult value;
};

namespace {

thread_local std::string last_error;

repalign_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::argument: return REPALIGN_ARGUMENT;
    case ErrorKind::numeric: return REPALIGN_NUMERIC;
    default: return REPALIGN_DATA;
  }
}

template <typename F>
repalign_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return REPALIGN_OK;
  } catch (const Error& e) {
    last_error = std::string(to_string(e.kind())) + ": " + e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return REPALIGN_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return REPALIGN_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::argument, std::string(what) + " is null");
}

template <typename Handle, typename T>
void emit(Handle** out, T&& value) {
  need(out, "output handle");
  *out = new Handle{std::forward<T>(value)};
}

}  // namespace

extern "C" {

const char* repalign_last_error(void) { return last_error.c_str(); }
const char* repalign_version(void) { return "0.1.0"; }

repalign_status repalign_acts_load(const char* path, repalign_acts** out) {
  return guarded([&] {
    need(path, "path");
    emit(out, load_activations(path));
  });
}

repalign_status repalign_acts_from_buffer(const char* layer, const char* net, size_t samples, size_t units,
                                          const float* data, repalign_acts** out) {
  return guarded([&] {
    need(data, "data");
    emit(out, ActivationMatrix::from_row_major(layer ? layer : "", net ? net : "", samples, units,
                                               {data, samples * units}));
  });
}

repalign_status repalign_acts_save(const repalign_acts* acts, const char* path) {
  return guarded([&] {
    need(acts, "acts");
    need(path, "path");
    const std::filesystem::path p(path);
    if (p.extension() == ".csv")
      write_activation_csv(p, acts->value);
    else
      write_actv(p, acts->value);
  });
}

repalign_status repalign_acts_subsample(const repalign_acts* acts, size_t n, uint64_t seed, repalign_acts** out) {
  return guarded([&] {
    need(acts, "acts");
    emit(out, subsample(acts->value, n, seed));
  });
}

size_t repalign_acts_samples(const repalign_acts* acts) { return acts ? acts->value.samples() : 0; }
size_t repalign_acts_units(const repalign_acts* acts) { return acts ? acts->value.units() : 0; }
const char* repalign_acts_net(const repalign_acts* acts) { return acts ? acts->value.net().c_str() : ""; }
const char* repalign_acts_layer(const repalign_acts* acts) { return acts ? acts->value.layer().c_str() : ""; }

repalign_status repalign_acts_copy(const repalign_acts* acts, float* out, size_t capacity) {
  return guarded([&] {
    need(acts, "acts");
    need(out, "out");
    const auto rm = acts->value.row_major();
    require(capacity >= rm.size(), ErrorKind::argument, "output buffer too small");
    std::memcpy(out, rm.data(), rm.size() * sizeof(float));
  });
}

void repalign_acts_free(repalign_acts* acts) { delete acts; }

repalign_status repalign_matrix_create(size_t rows, size_t cols, const double* data, repalign_matrix** out) {
  return guarded([&] {
    require(rows > 0 && cols > 0, ErrorKind::argument, "matrix must be non-empty");
    need(data, "data");
    MatrixD m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r * cols + c];
    require(m.allFinite(), ErrorKind::data, "matrix has non-finite entries");
    emit(out, std::move(m));
  });
}

size_t repalign_matrix_rows(const repalign_matrix* m) { return m ? static_cast<size_t>(m->value.rows()) : 0; }
size_t repalign_matrix_cols(const repalign_matrix* m) { return m ? static_cast<size_t>(m->value.cols()) : 0; }

double repalign_matrix_get(const repalign_matrix* m, size_t row, size_t col) {
  if (!m || row >= repalign_matrix_rows(m) || col >= repalign_matrix_cols(m)) return 0.0;
  return m->value(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
}

repalign_status repalign_matrix_copy(const repalign_matrix* m, double* out, size_t capacity) {
  return guarded([&] {
    need(m, "matrix");
    need(out, "out");
    const size_t rows = repalign_matrix_rows(m), cols = repalign_matrix_cols(m);
    require(capacity >= rows * cols, ErrorKind::argument, "output buffer too small");
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c) out[r * cols + c] = repalign_matrix_get(m, r, c);
  });
}

repalign_status repalign_matrix_save(const repalign_matrix* m, const char* path, const char* row_net,
                                     const char* col_net) {
  return guarded([&] {
    need(m, "matrix");
    need(path, "path");
    const std::string rn = row_net ? row_net : "A", cn = col_net ? col_net : "B";
    const std::filesystem::path p(path);
    if (p.extension() == ".csv") {
      std::ofstream f(p, std::ios::binary | std::ios::trunc);
      require(static_cast<bool>(f), ErrorKind::io, "cannot write " + p.string());
      f << matrix_csv(m->value, rn, cn);
    } else {
      write_matrix_actv(p, m->value, "corr:" + rn + ":" + cn, "matrix");
    }
  });
}

repalign_status repalign_matrix_load(const char* path, repalign_matrix** out) {
  return guarded([&] {
    need(path, "path");
    emit(out, read_matrix(path));
  });
}

void repalign_matrix_free(repalign_matrix* m) { delete m; }

repalign_status repalign_layer_stats(const repalign_acts* acts, double* mean, double* std, size_t* dead_count) {
  return guarded([&] {
    need(acts, "acts");
    const LayerStats s = layer_stats(acts->value);
    if (mean) std::copy(s.mean.begin(), s.mean.end(), mean);
    if (std) std::copy(s.std.begin(), s.std.end(), std);
    if (dead_count) *dead_count = s.dead_units.size();
  });
}

repalign_status repalign_corr_within(const repalign_acts* acts, unsigned workers, repalign_matrix** out) {
  return guarded([&] {
    need(acts, "acts");
    emit(out, corr_within(acts->value, workers).values);
  });
}

repalign_status repalign_corr_between(const repalign_acts* a, const repalign_acts* b, unsigned workers,
                                      repalign_matrix** out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    emit(out, corr_between(a->value, b->value, workers).values);
  });
}

repalign_status repalign_mi_between(const repalign_acts* a, const repalign_acts* b, size_t samples, uint64_t seed,
                                    unsigned workers, repalign_matrix** out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    MIOptions opts;
    if (samples) opts.samples = samples;
    opts.seed = seed;
    opts.workers = workers;
    emit(out, mi_between(a->value, b->value, opts).values);
  });
}

repalign_status repalign_semi_match(const repalign_matrix* sim, repalign_assignment** out) {
  return guarded([&] {
    need(sim, "similarity");
    emit(out, semi_match(sim->value));
  });
}

repalign_status repalign_match(const repalign_matrix* sim, repalign_assignment** out) {
  return guarded([&] {
    need(sim, "similarity");
    emit(out, match(sim->value));
  });
}

size_t repalign_assignment_size(const repalign_assignment* a) { return a ? a->value.pairs.size() : 0; }
size_t repalign_assignment_col(const repalign_assignment* a, size_t row) {
  return a && row < a->value.pairs.size() ? a->value.pairs[row].col : 0;
}
double repalign_assignment_score(const repalign_assignment* a, size_t row) {
  return a && row < a->value.pairs.size() ? a->value.pairs[row].score : 0.0;
}
double repalign_assignment_mean(const repalign_assignment* a) { return a ? a->value.mean() : 0.0; }

repalign_status repalign_apply_permutation(const repalign_matrix* sim, const repalign_assignment* full,
                                           repalign_matrix** out) {
  return guarded([&] {
    need(sim, "similarity");
    need(full, "assignment");
    emit(out, apply_permutation(sim->value, full->value));
  });
}

repalign_status repalign_unmatched_fraction(const repalign_matrix* sim, double threshold, double* out) {
  return guarded([&] {
    need(sim, "similarity");
    need(out, "out");
    *out = unmatched_fraction(sim->value, threshold);
  });
}

void repalign_assignment_free(repalign_assignment* a) { delete a; }

repalign_status repalign_fit_mapping(const repalign_acts* source, const repalign_acts* target, double decay,
                                     double tol, size_t max_iter, repalign_mapping** out) {
  return guarded([&] {
    need(source, "source");
    need(target, "target");
    LassoOptions opts;
    opts.decay = decay;
    if (tol > 0) opts.tol = tol;
    if (max_iter > 0) opts.max_iter = max_iter;
    emit(out, fit_mapping(normalize(source->value), normalize(target->value), opts));
  });
}

double repalign_mapping_loss(const repalign_mapping* m) { return m ? m->value.loss : 0.0; }
double repalign_mapping_nnz_per_target(const repalign_mapping* m) { return m ? m->value.nnz_per_target : 0.0; }
double repalign_mapping_kkt_residual(const repalign_mapping* m) { return m ? m->value.report.kkt_residual : 0.0; }
int repalign_mapping_converged(const repalign_mapping* m) { return m && m->value.report.converged ? 1 : 0; }

repalign_status repalign_mapping_weights(const repalign_mapping* m, repalign_matrix** out) {
  return guarded([&] {
    need(m, "mapping");
    emit(out, m->value.weights);
  });
}

void repalign_mapping_free(repalign_mapping* m) { delete m; }

repalign_status repalign_hac(const repalign_matrix* weights, int keep_sign, repalign_tree** out) {
  return guarded([&] {
    need(weights, "weights");
    emit(out, agglomerate(build_block(weights->value, keep_sign != 0)));
  });
}

size_t repalign_tree_merges(const repalign_tree* t) { return t ? t->value.merges() : 0; }

repalign_status repalign_tree_merge(const repalign_tree* t, size_t step, size_t* left, size_t* right,
                                    double* weight) {
  return guarded([&] {
    need(t, "tree");
    require(step < t->value.merges(), ErrorKind::argument, "merge step out of range");
    const ClusterNode& n = t->value.nodes[t->value.leaves + step];
    if (left) *left = n.left;
    if (right) *right = n.right;
    if (weight) *weight = n.weight;
  });
}

repalign_status repalign_tree_leaf_order(const repalign_tree* t, size_t* out, size_t capacity) {
  return guarded([&] {
    need(t, "tree");
    need(out, "out");
    const auto order = t->value.leaf_order();
    require(capacity >= order.size(), ErrorKind::argument, "output buffer too small");
    std::copy(order.begin(), order.end(), out);
  });
}

void repalign_tree_free(repalign_tree* t) { delete t; }

repalign_status repalign_spectral(const repalign_matrix* within_a, const repalign_matrix* within_b,
                                  const repalign_matrix* between, double tau, size_t k, uint64_t seed,
                                  repalign_clustering** out) {
  return guarded([&] {
    need(within_a, "within_a");
    need(within_b, "within_b");
    need(between, "between");
    SpectralOptions opts;
    opts.k = k;
    opts.seed = seed;
    emit(out, spectral_cluster(combined_matrix(within_a->value, within_b->value, between->value, tau), opts));
  });
}

size_t repalign_clustering_size(const repalign_clustering* c) { return c ? c->value.labels.size() : 0; }
size_t repalign_clustering_label(const repalign_clustering* c, size_t vertex) {
  return c && vertex < c->value.labels.size() ? c->value.labels[vertex] : 0;
}
double repalign_clustering_eigenvalue(const repalign_clustering* c, size_t index) {
  return c && index < c->value.eigenvalues.size() ? c->value.eigenvalues[index] : 0.0;
}
void repalign_clustering_free(repalign_clustering* c) { delete c; }

double repalign_adjusted_rand_index(const size_t* a, const size_t* b, size_t n) {
  if (!a || !b) return 0.0;
  return adjusted_rand_index({a, a + n}, {b, b + n});
}

repalign_status repalign_top_activating(const repalign_acts* acts, size_t unit, size_t k, size_t* samples,
                                        float* values) {
  return guarded([&] {
    need(acts, "acts");
    const auto top = top_activating_samples(acts->value, unit, k);
    for (size_t i = 0; i < top.size(); ++i) {
      if (samples) samples[i] = top[i].sample;
      if (values) values[i] = top[i].value;
    }
  });
}

repalign_status repalign_generate_fixture(const char* spec_json, repalign_acts** net_a, repalign_acts** net_b,
                                          char** truth_json) {
  return guarded([&] {
    nlohmann::json j = nlohmann::json::object();
    if (spec_json && *spec_json) {
      try {
        j = nlohmann::json::parse(spec_json);
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::argument, std::string("bad fixture spec: ") + e.what());
      }
    }
    const RunConfig cfg = RunConfig::from_json({{"fixture", j}});
    Fixture fx = generate(cfg.fixture);
    if (truth_json) {
      const std::string s = fx.truth.to_json().dump();
      *truth_json = static_cast<char*>(std::malloc(s.size() + 1));
      require(*truth_json != nullptr, ErrorKind::numeric, "out of memory");
      std::memcpy(*truth_json, s.c_str(), s.size() + 1);
    }
    if (net_a) *net_a = new repalign_acts{std::move(fx.net_a)};
    if (net_b) *net_b = new repalign_acts{std::move(fx.net_b)};
  });
}

void repalign_string_free(char* s) { std::free(s); }

repalign_status repalign_run(const char* command, const char* config_json, int* exit_code) {
  return guarded([&] {
    need(command, "command");
    nlohmann::json j = nlohmann::json::object();
    if (config_json && *config_json) {
      try {
        j = nlohmann::json::parse(config_json);
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::argument, std::string("bad config: ") + e.what());
      }
    }
    const int code = run_command(command, RunConfig::from_json(j), std::cout);
    std::cout.flush();
    if (exit_code) *exit_code = code;
  });
}

}  // extern "C"
