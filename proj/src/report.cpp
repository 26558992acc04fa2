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

#include "repalign/report.hpp"

#include "repalign/align.hpp"
#include "repalign/hac.hpp"
#include "repalign/lasso.hpp"
#include "repalign/mi.hpp"
#include "repalign/spectral.hpp"
#include "repalign/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace repalign {

namespace fs = std::filesystem;
using nlohmann::json;

int run_selftest(const RunConfig& cfg, std::ostream& log);  // selftest.cpp

namespace {

// Collects every file a command writes, relative to the output root.
class OutputSink {
 public:
  explicit OutputSink(fs::path root) : root_(std::move(root)) {}

  void write(const fs::path& rel, const std::string& content) {
    const fs::path full = root_ / rel;
    fs::create_directories(full.parent_path());
    std::ofstream f(full, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::io, "cannot write " + full.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) fail(ErrorKind::io, "short write to " + full.string());
    files_.push_back({rel.generic_string(), digest_hex(content)});
  }
  void write_json(const fs::path& rel, const json& j) { write(rel, j.dump(2) + "\n"); }
  void write_matrix(const fs::path& rel_stem, const MatrixD& m, const std::string& row_net,
                    const std::string& col_net, const std::string& tag, const std::string& kind,
                    const std::string& format) {
    if (format == "json") {
      json rows = json::array();
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
      }
      write_json(fs::path(rel_stem.string() + ".json"),
                 {{"tag", tag}, {"kind", kind}, {"rows_net", row_net}, {"cols_net", col_net}, {"values", rows}});
    } else {
      write(fs::path(rel_stem.string() + ".csv"), matrix_csv(m, row_net, col_net));
    }
    const fs::path bin = root_ / fs::path(rel_stem.string() + ".actv");
    write_matrix_actv(bin, m, tag, kind);
    std::ifstream in(bin, std::ios::binary);
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    files_.push_back({fs::path(rel_stem.string() + ".actv").generic_string(), digest_hex(bytes)});
  }

  const fs::path& root() const { return root_; }
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

 private:
  fs::path root_;
  std::vector<std::pair<std::string, std::string>> files_;
};

// Tabular output in CSV or JSON (array of row objects).
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void add(std::vector<json> row) { rows_.push_back(std::move(row)); }

  std::string render(const std::string& format) const {
    if (format == "json") {
      json out = json::array();
      for (const auto& row : rows_) {
        json obj = json::object();
        for (std::size_t c = 0; c < columns_.size(); ++c) obj[columns_[c]] = row[c];
        out.push_back(obj);
      }
      return out.dump(2) + "\n";
    }
    std::string s;
    for (std::size_t c = 0; c < columns_.size(); ++c) s += (c ? "," : "") + columns_[c];
    s += "\n";
    for (const auto& row : rows_) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) s += ",";
        const json& v = row[c];
        if (v.is_number_float())
          s += format_double(v.get<double>());
        else if (v.is_string())
          s += v.get<std::string>();
        else
          s += v.dump();
      }
      s += "\n";
    }
    return s;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<json>> rows_;
};

std::string ext(const std::string& format) { return format == "json" ? ".json" : ".csv"; }

std::uint64_t stream_id(const std::string& key) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t stage_seed(const RunConfig& cfg, const std::string& key) {
  return Rng::derive(cfg.seed, stream_id(key));
}

std::string decay_label(double d) { return format_double(d); }

// ---------------------------------------------------------------------------
// Inputs

struct LayerInputs {
  std::string layer;
  std::vector<ActivationMatrix> nets;
};

LayerInputs load_layer(const RunConfig& cfg, const std::string& layer_hint) {
  LayerInputs in;
  if (!cfg.acts.empty()) {
    for (const auto& p : cfg.acts) in.nets.push_back(load_activations(p));
    in.layer = in.nets.front().layer();
    for (std::size_t i = 1; i < in.nets.size(); ++i)
      require(in.nets[i].units() == in.nets[0].units() || cfg.acts.size() == 1, ErrorKind::data,
              "activation files differ in width");
    return in;
  }
  require(!cfg.catalog.empty(), ErrorKind::argument, "need --catalog or --acts");
  const auto cat = LayerCatalog::load(cfg.catalog);
  in.layer = !layer_hint.empty() ? layer_hint : cfg.layer;
  if (in.layer.empty()) {
    const auto layers = cat.layers();
    require(layers.size() == 1, ErrorKind::argument, "catalog has several layers; pass --layer");
    in.layer = layers.front();
  }
  const auto nets = cfg.nets.empty() ? cat.nets() : cfg.nets;
  for (const auto& n : nets) in.nets.push_back(cat.load(n, in.layer));
  return in;
}

const ActivationMatrix& net_at(const LayerInputs& in, std::size_t i, const char* command) {
  require(in.nets.size() > i, ErrorKind::argument,
          std::string(command) + " needs " + std::to_string(i + 1) + " nets");
  return in.nets[i];
}

// ---------------------------------------------------------------------------
// Stages

void stage_stats(OutputSink& out, const fs::path& dir, const ActivationMatrix& acts,
                 const RunConfig& cfg) {
  const auto st = layer_stats(acts);
  Table t({"unit", "mean", "std", "dead"});
  for (std::size_t i = 0; i < st.units(); ++i) t.add({i, st.mean[i], st.std[i], st.is_dead(i) ? 1 : 0});
  out.write(dir / ("stats_" + acts.net() + ext(cfg.format)), t.render(cfg.format));
}

void stage_means(OutputSink& out, const fs::path& dir, const std::vector<ActivationMatrix>& nets,
                 const RunConfig& cfg) {
  std::vector<std::string> names;
  std::vector<LayerStats> stats;
  for (const auto& a : nets) {
    names.push_back(a.net());
    stats.push_back(layer_stats(a));
  }
  const auto spectra = sorted_mean_spectrum(names, stats);
  std::vector<std::string> cols{"rank"};
  for (const auto& s : spectra) cols.push_back(s.net);
  Table t(cols);
  for (std::size_t r = 0; r < stats.front().units(); ++r) {
    std::vector<json> row{r};
    for (const auto& s : spectra) row.push_back(s.sorted_means[r]);
    t.add(row);
  }
  out.write(dir / ("means" + ext(cfg.format)), t.render(cfg.format));
  json ratios = json::object();
  for (const auto& s : spectra)
    ratios[s.net] = {{"max", s.sorted_means.front()},
                     {"min", s.sorted_means.back()},
                     {"max_min_ratio", std::isfinite(s.max_min_ratio) ? json(s.max_min_ratio) : json("inf")}};
  out.write_json(dir / "means_summary.json", ratios);
}

void stage_topk(OutputSink& out, const fs::path& dir, const ActivationMatrix& acts,
                const RunConfig& cfg) {
  const std::size_t k = std::min(cfg.topk, acts.samples());
  Table t({"unit", "rank", "sample", "value"});
  std::vector<std::size_t> units;
  if (cfg.unit >= 0) {
    require(static_cast<std::size_t>(cfg.unit) < acts.units(), ErrorKind::argument, "unit out of range");
    units.push_back(static_cast<std::size_t>(cfg.unit));
  } else {
    units.resize(acts.units());
    std::iota(units.begin(), units.end(), 0);
  }
  for (std::size_t u : units) {
    const auto top = top_activating_samples(acts, u, k);
    for (std::size_t r = 0; r < top.size(); ++r)
      t.add({u, r, top[r].sample, static_cast<double>(top[r].value)});
  }
  out.write(dir / ("topk_" + acts.net() + ext(cfg.format)), t.render(cfg.format));
}

struct CorrSet {
  CorrMatrix within_a, within_b, between;
};

CorrSet stage_corr(OutputSink& out, const fs::path& dir, const ActivationMatrix& a,
                   const ActivationMatrix& b, const RunConfig& cfg) {
  CorrSet c{corr_within(a, cfg.workers), corr_within(b, cfg.workers), corr_between(a, b, cfg.workers)};
  out.write_matrix(dir / ("corr_within_" + a.net()), c.within_a.values, a.net(), a.net(),
                   "corr:" + a.net() + ":" + a.net(), "within", cfg.format);
  out.write_matrix(dir / ("corr_within_" + b.net()), c.within_b.values, b.net(), b.net(),
                   "corr:" + b.net() + ":" + b.net(), "within", cfg.format);
  out.write_matrix(dir / "corr_between", c.between.values, a.net(), b.net(),
                   "corr:" + a.net() + ":" + b.net(), "between", cfg.format);
  return c;
}

MatrixD stage_mi(OutputSink& out, const fs::path& dir, const ActivationMatrix& a,
                 const ActivationMatrix& b, const RunConfig& cfg, bool within) {
  MIOptions opts;
  opts.samples = cfg.mi_samples;
  opts.seed = stage_seed(cfg, "mi:" + a.layer());
  opts.workers = cfg.workers;
  const double unit = cfg.bits ? 1.0 / std::log(2.0) : 1.0;
  const std::string kind = cfg.bits ? "mi_bits" : "mi";
  MIMatrix m = mi_between(a, b, opts);
  m.values *= unit;
  out.write_matrix(dir / "mi_between", m.values, a.net(), b.net(), "mi:" + a.net() + ":" + b.net(),
                   kind, cfg.format);
  if (within) {
    for (const auto* x : {&a, &b}) {
      MIMatrix w = mi_within(*x, opts);
      w.values *= unit;
      out.write_matrix(dir / ("mi_within_" + x->net()), w.values, x->net(), x->net(),
                       "mi:" + x->net() + ":" + x->net(), kind, cfg.format);
    }
  }
  return m.values;
}

json stage_match(OutputSink& out, const fs::path& dir, const MatrixD& sim, const std::string& layer,
                 const std::string& metric, const std::string& net_a, const std::string& net_b,
                 const RunConfig& cfg, LayerAssignments* keep = nullptr) {
  const Assignment semi = semi_match(sim);
  const Assignment full = match(sim);
  for (const auto* as : {&semi, &full}) {
    Table t({"i", "j", "score", "kind"});
    for (const auto& p : as->pairs)
      t.add({p.row, p.col, p.score, as->kind == AssignmentKind::semi ? "semi" : "full"});
    out.write(dir / ((as->kind == AssignmentKind::semi ? "assignment_semi" : "assignment_full") + ext(cfg.format)),
              t.render(cfg.format));
  }
  Table curves({"rank", "unit", "semi", "full"});
  for (const auto& p : match_curves(sim)) curves.add({p.rank, p.unit, p.semi, p.full});
  out.write(dir / ("curves" + ext(cfg.format)), curves.render(cfg.format));
  out.write_matrix(dir / "permuted", apply_permutation(sim, full), net_a, net_b,
                   metric + ":" + net_a + ":" + net_b + ":permuted", "permuted", cfg.format);
  const auto summary = layer_summary({{layer, semi, full}}).front();
  json j = {{"layer", layer},
            {"metric", metric},
            {"nets", {net_a, net_b}},
            {"units", sim.rows()},
            {"total_semi", semi.total()},
            {"total_full", full.total()},
            {"mean_semi", summary.mean_semi},
            {"mean_full", summary.mean_full},
            {"frac_same", summary.frac_same},
            {"threshold", cfg.threshold},
            {"unmatched_fraction", unmatched_fraction(full, cfg.threshold)}};
  out.write_json(dir / "summary.json", j);
  if (keep) *keep = {layer, semi, full};
  return j;
}

struct LassoOutcome {
  NormalizedLayer source, target;
  SweepResult sweep;
};

LassoOutcome stage_lasso(OutputSink& out, const fs::path& dir, const ActivationMatrix& a,
                         const ActivationMatrix& b, const RunConfig& cfg) {
  LassoOutcome r{normalize(a, cfg.norm_dims), normalize(b, cfg.norm_dims), {}};
  LassoOptions opts;
  opts.tol = cfg.lasso_tol;
  opts.max_iter = cfg.lasso_max_iter;
  opts.weight_eps = cfg.weight_eps;
  opts.workers = cfg.workers;
  r.sweep = decay_sweep(r.source, r.target, cfg.decays, opts);
  Table t({"decay", "loss", "objective", "nnz_per_target", "kkt_residual", "sweeps"});
  for (const auto& row : r.sweep.table)
    t.add({row.decay, row.loss, row.objective, row.nnz_per_target, row.kkt_residual, row.sweeps});
  out.write(dir / ("sweep" + ext(cfg.format)), t.render(cfg.format));
  json sets = json::array();
  for (const auto& m : r.sweep.models) {
    const std::string label = decay_label(m.decay);
    out.write_matrix(dir / ("weights_" + label), m.weights, b.net(), a.net(),
                     "lasso:" + a.net() + ":" + b.net(), "weights", cfg.format);
    json targets = json::array();
    const auto ps = predictor_sets(m, cfg.predictors);
    for (std::size_t tgt = 0; tgt < ps.size(); ++tgt) {
      json srcs = json::array();
      for (const auto& p : ps[tgt]) srcs.push_back({{"source", p.source}, {"weight", p.weight}});
      targets.push_back({{"target", tgt}, {"predictors", srcs}});
    }
    sets.push_back({{"decay", m.decay}, {"loss", m.loss}, {"nnz_per_target", m.nnz_per_target},
                    {"kkt_residual", m.report.kkt_residual}, {"converged", m.report.converged},
                    {"targets", targets}});
  }
  out.write_json(dir / "predictors.json", sets);
  return r;
}

json tree_json(const ClusterTree& tree, const BlockMatrix& b, std::size_t id) {
  const auto& node = tree.nodes[id];
  if (node.leaf)
    return {{"id", id}, {"net", b.net_of(id)}, {"unit", id % b.s}};
  return {{"id", id},
          {"weight", node.weight},
          {"step", node.step},
          {"size", node.size},
          {"children", {tree_json(tree, b, node.left), tree_json(tree, b, node.right)}}};
}

void stage_hac(OutputSink& out, const fs::path& dir, const MatrixD& weights, const RunConfig& cfg) {
  const BlockMatrix b = build_block(weights, cfg.signed_weights);
  const ClusterTree tree = agglomerate(b);
  const TreeOrdered ordered = tree_order_matrix(b, tree);
  Table merges({"step", "node", "left", "right", "weight", "size"});
  for (std::size_t k = tree.leaves; k < tree.nodes.size(); ++k) {
    const auto& n = tree.nodes[k];
    merges.add({n.step, n.id, n.left, n.right, n.weight, n.size});
  }
  out.write(dir / ("merges" + ext(cfg.format)), merges.render(cfg.format));
  // Iterative depth is fine here: tree depth is bounded by 2s.
  out.write_json(dir / "tree.json", {{"units_per_net", b.s},
                                     {"merges", tree.merges()},
                                     {"root", tree_json(tree, b, tree.root().id)}});
  Table order({"position", "index", "net", "unit"});
  for (std::size_t p = 0; p < ordered.order.size(); ++p)
    order.add({p, ordered.order[p], ordered.diag_net[p], ordered.order[p] % b.s});
  out.write(dir / ("order" + ext(cfg.format)), order.render(cfg.format));
  Table seg({"node", "start", "end", "depth"});
  for (const auto& s : ordered.segments) seg.add({s.node, s.start, s.end, s.depth});
  out.write(dir / ("segments" + ext(cfg.format)), seg.render(cfg.format));
  out.write_matrix(dir / "permuted", ordered.matrix, "AB", "AB", "hac:block", "permuted", cfg.format);
}

std::size_t spectral_k(const RunConfig& cfg, const std::string& layer) {
  auto it = cfg.k_per_layer.find(layer);
  const std::size_t k = it != cfg.k_per_layer.end() ? it->second : cfg.k;
  require(k >= 2, ErrorKind::argument, "spectral clustering needs an explicit --k >= 2");
  return k;
}

json hierarchy_json(const HierarchicalClustering& h, std::size_t idx) {
  const auto& n = h.nodes[idx];
  json j = {{"members", n.members}, {"level", n.level}, {"guarded", n.guarded}};
  if (!n.children.empty()) {
    json kids = json::array();
    for (auto c : n.children) kids.push_back(hierarchy_json(h, c));
    j["children"] = kids;
  }
  return j;
}

void stage_spectral(OutputSink& out, const fs::path& dir, const CorrSet& c, const std::string& layer,
                    const RunConfig& cfg) {
  const CombinedSimilarity sim = combined_matrix(c.within_a.values, c.within_b.values, c.between.values, cfg.tau);
  SpectralOptions opts;
  opts.k = spectral_k(cfg, layer);
  opts.seed = stage_seed(cfg, "spectral:" + layer);
  opts.restarts = cfg.restarts;
  const SpectralResult res = spectral_cluster(sim, opts);
  const HierarchicalClustering h =
      refine_hierarchical(res, sim.adjacency, sim.units, cfg.alpha, stage_seed(cfg, "refine:" + layer));

  Table clusters({"vertex", "net", "unit", "cluster", "leaf_cluster", "level"});
  for (std::size_t v = 0; v < sim.size(); ++v)
    clusters.add({v, sim.net_of(v) == 0 ? c.between.rows_net : c.between.cols_net, v % sim.units,
                  res.labels[v], h.leaf_labels[v], h.leaf_level[v]});
  out.write(dir / ("clusters" + ext(cfg.format)), clusters.render(cfg.format));

  Table eig({"index", "eigenvalue"});
  for (std::size_t i = 0; i < res.eigenvalues.size(); ++i) eig.add({i, res.eigenvalues[i]});
  out.write(dir / ("eigenvalues" + ext(cfg.format)), eig.render(cfg.format));

  struct Row {
    std::size_t cluster;
    ClusterMetrics m;
  };
  std::vector<Row> rows;
  for (std::size_t leaf = 0; leaf < h.leaves.size(); ++leaf)
    rows.push_back({leaf, cluster_metrics(h.nodes[h.leaves[leaf]].members, c.between.values,
                                          c.within_a.values, c.within_b.values, cfg.layer_norm_metric)});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& x, const Row& y) { return x.m.between_sim > y.m.between_sim; });
  Table metrics({"rank", "cluster", "members_a", "members_b", "between_sim", "within_sim"});
  for (std::size_t r = 0; r < rows.size(); ++r)
    metrics.add({r, rows[r].cluster, rows[r].m.members_a, rows[r].m.members_b, rows[r].m.between_sim,
                 rows[r].m.within_sim});
  out.write(dir / ("metrics" + ext(cfg.format)), metrics.render(cfg.format));

  json roots = json::array();
  for (auto r : h.roots) roots.push_back(hierarchy_json(h, r));
  out.write_json(dir / "hierarchy.json", {{"bound", h.bound}, {"clusters", roots}});
  out.write_json(dir / "summary.json", {{"layer", layer},
                                        {"tau", cfg.tau},
                                        {"k", opts.k},
                                        {"clusters_used", res.k},
                                        {"leaf_clusters", h.leaves.size()},
                                        {"alpha", cfg.alpha},
                                        {"inertia", res.inertia},
                                        {"eigengap_suggested_k", res.suggested_k}});
}

bool mi_enabled(const RunConfig& cfg, std::size_t units) {
  if (cfg.mi == "on") return true;
  if (cfg.mi == "off") return false;
  require(cfg.mi == "auto", ErrorKind::argument, "mi mode must be auto, on or off");
  return units <= cfg.mi_auto_max_units;
}

MatrixD weights_for_hac(const RunConfig& cfg, const ActivationMatrix& a, const ActivationMatrix& b) {
  if (!cfg.weights.empty()) return read_matrix(cfg.weights);
  LassoOptions opts;
  opts.decay = cfg.decay;
  opts.tol = cfg.lasso_tol;
  opts.max_iter = cfg.lasso_max_iter;
  opts.weight_eps = cfg.weight_eps;
  opts.workers = cfg.workers;
  return fit_mapping(normalize(a, cfg.norm_dims), normalize(b, cfg.norm_dims), opts).weights;
}

// ---------------------------------------------------------------------------
// Pipeline

void write_manifest(OutputSink& out, const RunConfig& cfg, const std::vector<fs::path>& inputs) {
  json in = json::array();
  std::string hash_input = cfg.to_json().dump();
  for (const auto& p : inputs) {
    std::ifstream f(p, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot read input " + p.string());
    const std::string bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    const std::string d = digest_hex(bytes);
    in.push_back({{"path", p.generic_string()}, {"digest", d}});
    hash_input += "\n" + p.generic_string() + ":" + d;
  }
  json files = json::array();
  auto listed = out.files();
  std::sort(listed.begin(), listed.end());
  for (const auto& [path, d] : listed) files.push_back({{"path", path}, {"digest", d}});
  json manifest = {{"tool", "repalign"},
                   {"config", cfg.to_json()},
                   {"config_hash", digest_hex(hash_input)},
                   {"seed", cfg.seed},
                   {"inputs", in},
                   {"outputs", files}};
  out.write_json("manifest.json", manifest);
}

int run_pipeline(const RunConfig& cfg, std::ostream& log) {
  require(!cfg.catalog.empty(), ErrorKind::argument, "pipeline needs a catalog");
  const auto cat = LayerCatalog::load(cfg.catalog);
  const auto nets = cfg.nets.empty() ? cat.nets() : cfg.nets;
  require(nets.size() >= 2, ErrorKind::data, "pipeline needs at least two nets");
  const auto layers = !cfg.layers.empty() ? cfg.layers
                      : !cfg.layer.empty() ? std::vector<std::string>{cfg.layer}
                                           : cat.layers();
  OutputSink out(cfg.out_dir);
  std::vector<fs::path> inputs;
  std::map<std::string, std::vector<LayerAssignments>> by_pair;

  for (const auto& layer : layers) {
    std::vector<ActivationMatrix> acts;
    for (const auto& n : nets) {
      inputs.push_back(cat.find(n, layer).path);
      acts.push_back(cat.load(n, layer));
    }
    const fs::path ldir = layer;
    for (const auto& a : acts) {
      stage_stats(out, ldir, a, cfg);
      stage_topk(out, ldir, a, cfg);
    }
    stage_means(out, ldir, acts, cfg);
    for (std::size_t i = 0; i < acts.size(); ++i)
      for (std::size_t j = i + 1; j < acts.size(); ++j) {
        const auto& a = acts[i];
        const auto& b = acts[j];
        const std::string pair = a.net() + "__" + b.net();
        const fs::path pdir = ldir / pair;
        log << "[pipeline] " << layer << " " << a.net() << " vs " << b.net() << "\n";
        const CorrSet c = stage_corr(out, pdir, a, b, cfg);
        LayerAssignments kept;
        stage_match(out, pdir / "match_corr", c.between.values, layer, "corr", a.net(), b.net(), cfg, &kept);
        by_pair[pair].push_back(kept);
        if (mi_enabled(cfg, a.units())) {
          const MatrixD mi = stage_mi(out, pdir, a, b, cfg, false);
          stage_match(out, pdir / "match_mi", mi, layer, "mi", a.net(), b.net(), cfg);
        }
        const auto lasso = stage_lasso(out, pdir / "lasso", a, b, cfg);
        LassoOptions opts;
        opts.decay = cfg.decay;
        opts.tol = cfg.lasso_tol;
        opts.max_iter = cfg.lasso_max_iter;
        opts.weight_eps = cfg.weight_eps;
        opts.workers = cfg.workers;
        const auto hit = std::find(cfg.decays.begin(), cfg.decays.end(), cfg.decay);
        const MatrixD w = hit != cfg.decays.end()
                              ? lasso.sweep.models[static_cast<std::size_t>(hit - cfg.decays.begin())].weights
                              : fit_mapping(lasso.source, lasso.target, opts).weights;
        stage_hac(out, pdir / "hac", w, cfg);
        stage_spectral(out, pdir / "spectral", c, layer, cfg);
      }
  }
  for (const auto& [pair, assigns] : by_pair) {
    Table t({"layer", "mean_semi", "mean_full", "frac_same"});
    for (const auto& r : layer_summary(assigns)) t.add({r.layer, r.mean_semi, r.mean_full, r.frac_same});
    out.write("summary_" + pair + ext(cfg.format), t.render(cfg.format));
  }
  write_manifest(out, cfg, inputs);
  log << "[pipeline] wrote " << out.files().size() << " files to " << cfg.out_dir << "\n";
  return 0;
}

int run_gen_fixture(const RunConfig& cfg, std::ostream& log) {
  const Fixture fx = generate(cfg.fixture);
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  const fs::path pa = dir / (fx.net_a.net() + "_" + fx.net_a.layer() + ".actv");
  const fs::path pb = dir / (fx.net_b.net() + "_" + fx.net_b.layer() + ".actv");
  write_actv(pa, fx.net_a);
  write_actv(pb, fx.net_b);
  json truth = fx.truth.to_json();
  truth["spec"] = RunConfig(cfg).to_json()["fixture"];
  std::ofstream(dir / "truth.json") << truth.dump(2) << "\n";
  LayerCatalog::from_entries({{fx.net_a.net(), fx.net_a.layer(), pa, 0, 0},
                              {fx.net_b.net(), fx.net_b.layer(), pb, 0, 0}})
      .save(dir / "catalog.json");
  log << "[gen-fixture] " << to_string(cfg.fixture.scenario) << " U=" << cfg.fixture.units
      << " M=" << cfg.fixture.samples << " -> " << dir.string() << "\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<TopSample> top_activating_samples(const ActivationMatrix& acts, std::size_t unit, std::size_t k) {
  require(unit < acts.units(), ErrorKind::argument, "unit " + std::to_string(unit) + " out of range");
  require(k >= 1 && k <= acts.samples(), ErrorKind::argument, "k must be in [1, samples]");
  const auto col = acts.column(unit);
  std::vector<std::size_t> idx(col.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return col[a] > col[b] || (col[a] == col[b] && a < b); });
  std::vector<TopSample> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back({idx[i], col[idx[i]]});
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string matrix_csv(const MatrixD& m, const std::string& row_net, const std::string& col_net) {
  std::string s;
  for (Eigen::Index c = 0; c < m.cols(); ++c) s += "," + col_net + ":" + std::to_string(c);
  s += "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    s += row_net + ":" + std::to_string(r);
    for (Eigen::Index c = 0; c < m.cols(); ++c) s += "," + format_double(m(r, c));
    s += "\n";
  }
  return s;
}

void write_matrix_actv(const fs::path& path, const MatrixD& m, const std::string& tag, const std::string& kind) {
  std::vector<float> data(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      data[static_cast<std::size_t>(r * m.cols() + c)] = static_cast<float>(m(r, c));
  write_actv_raw(path, tag, kind, static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), data);
}

MatrixD read_matrix(const fs::path& path) {
  if (path.extension() == ".csv") {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');  // row label
      while (std::getline(ss, cell, ',')) {
        double v = 0;
        auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc()) fail(ErrorKind::format, path.string() + ": bad number '" + cell + "'");
        row.push_back(v);
      }
      require(rows.empty() || row.size() == rows.front().size(), ErrorKind::format,
              path.string() + ": ragged matrix CSV");
      rows.push_back(std::move(row));
    }
    require(!rows.empty(), ErrorKind::format, path.string() + ": empty matrix CSV");
    MatrixD m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
  }
  const RawActv raw = read_actv_raw(path);
  MatrixD m(static_cast<Eigen::Index>(raw.rows), static_cast<Eigen::Index>(raw.cols));
  for (std::uint64_t r = 0; r < raw.rows; ++r)
    for (std::uint64_t c = 0; c < raw.cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = raw.data[r * raw.cols + c];
  require(m.allFinite(), ErrorKind::data, path.string() + ": non-finite matrix entry");
  return m;
}

std::string digest_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[h & 0xf];
    h >>= 4;
  }
  buf[16] = 0;
  return buf;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(field);
  };
  try {
    get("catalog", c.catalog);
    get("acts", c.acts);
    get("layer", c.layer);
    get("layers", c.layers);
    get("nets", c.nets);
    get("metric", c.metric);
    get("tau", c.tau);
    get("k", c.k);
    get("k_per_layer", c.k_per_layer);
    get("alpha", c.alpha);
    get("decays", c.decays);
    get("decay", c.decay);
    get("seed", c.seed);
    get("out_dir", c.out_dir);
    get("format", c.format);
    get("workers", c.workers);
    get("threshold", c.threshold);
    get("unit", c.unit);
    get("topk", c.topk);
    get("predictors", c.predictors);
    get("mi_samples", c.mi_samples);
    get("mi", c.mi);
    get("mi_auto_max_units", c.mi_auto_max_units);
    get("bits", c.bits);
    get("signed_weights", c.signed_weights);
    get("layer_norm_metric", c.layer_norm_metric);
    get("restarts", c.restarts);
    get("lasso_tol", c.lasso_tol);
    get("lasso_max_iter", c.lasso_max_iter);
    get("weight_eps", c.weight_eps);
    get("norm_dims", c.norm_dims);
    get("matrix", c.matrix);
    get("weights", c.weights);
    if (j.contains("fixture")) {
      const json& f = j.at("fixture");
      auto fget = [&](const char* key, auto& field) {
        if (f.contains(key) && !f.at(key).is_null()) f.at(key).get_to(field);
      };
      fget("units", c.fixture.units);
      fget("samples", c.fixture.samples);
      fget("seed", c.fixture.seed);
      if (f.contains("scenario")) c.fixture.scenario = scenario_from_string(f.at("scenario").get<std::string>());
      fget("noise_sigma", c.fixture.noise_sigma);
      fget("noise_spread", c.fixture.noise_spread);
      fget("block_size", c.fixture.block_size);
      fget("frac_unique", c.fixture.frac_unique);
      fget("cluster_sizes", c.fixture.cluster_sizes);
      fget("cluster_strength", c.fixture.cluster_strength);
      fget("nnz_per_row", c.fixture.nnz_per_row);
      fget("layer", c.fixture.layer);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::argument, std::string("bad config: ") + e.what());
  }
  require(c.format == "csv" || c.format == "json", ErrorKind::argument, "format must be csv or json");
  require(c.metric == "corr" || c.metric == "mi", ErrorKind::argument, "metric must be corr or mi");
  require(c.tau >= 0.0, ErrorKind::argument, "tau must be non-negative");
  require(c.alpha > 0.0, ErrorKind::argument, "alpha must be positive");
  for (double d : c.decays) require(d >= 0.0, ErrorKind::argument, "decays must be non-negative");
  return c;
}

json RunConfig::to_json() const {
  return {{"catalog", catalog},
          {"acts", acts},
          {"layer", layer},
          {"layers", layers},
          {"nets", nets},
          {"metric", metric},
          {"tau", tau},
          {"k", k},
          {"k_per_layer", k_per_layer},
          {"alpha", alpha},
          {"decays", decays},
          {"decay", decay},
          {"seed", seed},
          {"format", format},
          {"threshold", threshold},
          {"unit", unit},
          {"topk", topk},
          {"predictors", predictors},
          {"mi_samples", mi_samples},
          {"mi", mi},
          {"mi_auto_max_units", mi_auto_max_units},
          {"bits", bits},
          {"signed_weights", signed_weights},
          {"layer_norm_metric", layer_norm_metric},
          {"restarts", restarts},
          {"lasso_tol", lasso_tol},
          {"lasso_max_iter", lasso_max_iter},
          {"weight_eps", weight_eps},
          {"norm_dims", norm_dims},
          {"matrix", matrix},
          {"weights", weights},
          {"fixture",
           {{"units", fixture.units},
            {"samples", fixture.samples},
            {"seed", fixture.seed},
            {"scenario", to_string(fixture.scenario)},
            {"noise_sigma", fixture.noise_sigma},
            {"noise_spread", fixture.noise_spread},
            {"block_size", fixture.block_size},
            {"frac_unique", fixture.frac_unique},
            {"cluster_sizes", fixture.cluster_sizes},
            {"cluster_strength", fixture.cluster_strength},
            {"nnz_per_row", fixture.nnz_per_row},
            {"layer", fixture.layer}}}};
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"stats", "corr",  "mi",   "match",    "lasso",    "hac",
                                              "spectral", "means", "topk", "pipeline", "selftest", "gen-fixture"};
  return names;
}

int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log) {
  if (command == "pipeline") return run_pipeline(cfg, log);
  if (command == "selftest") return run_selftest(cfg, log);
  if (command == "gen-fixture") return run_gen_fixture(cfg, log);

  OutputSink out(cfg.out_dir);
  if (command == "match" && !cfg.matrix.empty()) {
    const MatrixD sim = read_matrix(cfg.matrix);
    const json s = stage_match(out, "", sim, cfg.layer, cfg.metric, "A", "B", cfg);
    log << "[match] mean_full=" << format_double(s["mean_full"].get<double>())
        << " unmatched=" << format_double(s["unmatched_fraction"].get<double>()) << "\n";
    return 0;
  }
  if (command == "hac" && !cfg.weights.empty()) {
    stage_hac(out, "", read_matrix(cfg.weights), cfg);
    log << "[hac] wrote tree to " << cfg.out_dir << "\n";
    return 0;
  }

  const LayerInputs in = load_layer(cfg, "");
  if (command == "stats") {
    for (const auto& a : in.nets) stage_stats(out, "", a, cfg);
  } else if (command == "means") {
    stage_means(out, "", in.nets, cfg);
  } else if (command == "topk") {
    for (const auto& a : in.nets) stage_topk(out, "", a, cfg);
  } else if (command == "corr") {
    stage_corr(out, "", net_at(in, 0, "corr"), net_at(in, 1, "corr"), cfg);
  } else if (command == "mi") {
    stage_mi(out, "", net_at(in, 0, "mi"), net_at(in, 1, "mi"), cfg, true);
  } else if (command == "match") {
    const auto& a = net_at(in, 0, "match");
    const auto& b = net_at(in, 1, "match");
    MatrixD sim;
    if (cfg.metric == "mi") {
      MIOptions opts;
      opts.samples = cfg.mi_samples;
      opts.seed = stage_seed(cfg, "mi:" + a.layer());
      opts.workers = cfg.workers;
      sim = mi_between(a, b, opts).values;
    } else {
      sim = corr_between(a, b, cfg.workers).values;
    }
    const json s = stage_match(out, "", sim, in.layer, cfg.metric, a.net(), b.net(), cfg);
    log << "[match] " << cfg.metric << " mean_semi=" << format_double(s["mean_semi"].get<double>())
        << " mean_full=" << format_double(s["mean_full"].get<double>())
        << " unmatched=" << format_double(s["unmatched_fraction"].get<double>()) << "\n";
  } else if (command == "lasso") {
    const auto r = stage_lasso(out, "", net_at(in, 0, "lasso"), net_at(in, 1, "lasso"), cfg);
    for (const auto& row : r.sweep.table)
      log << "[lasso] decay=" << format_double(row.decay) << " loss=" << format_double(row.loss)
          << " nnz=" << format_double(row.nnz_per_target) << "\n";
  } else if (command == "hac") {
    stage_hac(out, "", weights_for_hac(cfg, net_at(in, 0, "hac"), net_at(in, 1, "hac")), cfg);
  } else if (command == "spectral") {
    const auto& a = net_at(in, 0, "spectral");
    const auto& b = net_at(in, 1, "spectral");
    require(a.units() == b.units(), ErrorKind::data, "spectral clustering needs equal layer widths");
    const CorrSet c{corr_within(a, cfg.workers), corr_within(b, cfg.workers), corr_between(a, b, cfg.workers)};
    stage_spectral(out, "", c, in.layer, cfg);
  } else {
    fail(ErrorKind::argument, "unknown command '" + command + "'");
  }
  log << "[" << command << "] wrote " << out.files().size() << " files to " << cfg.out_dir << "\n";
  return 0;
}

}  // namespace repalign
