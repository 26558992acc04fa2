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

// Command-line front end. Parses flags into a JSON config and hands it to
// the C API; exit codes follow repalign_status.

#include "repalign/repalign.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using nlohmann::json;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

template <typename T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"repalign: compare unit-level representations of two networks"};
  app.require_subcommand(1);

  std::optional<std::string> catalog, layer, nets, metric, decays, out_dir, format, weights, matrix, mi, acts,
      config_path, scenario, cluster_sizes, layers;
  std::optional<double> tau, alpha, decay, threshold, noise, noise_spread, frac_unique, norm_dims, lasso_tol,
      cluster_strength;
  std::optional<std::size_t> k, mi_samples, restarts, units, samples, block_size, nnz, predictors, lasso_max_iter;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<long> unit;
  bool bits = false, signed_w = false, layer_norm = false;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"stats", "per-unit mean, std and dead units"},
      {"corr", "within- and between-net correlation matrices"},
      {"mi", "binned mutual information matrices"},
      {"match", "semi and full matching of units"},
      {"lasso", "sparse linear mapping over a decay sweep"},
      {"hac", "agglomerative clustering of the mapping block matrix"},
      {"spectral", "spectral clustering of the thresholded combined similarity"},
      {"means", "sorted mean-activation spectra"},
      {"topk", "top activating samples per unit"},
      {"pipeline", "every stage for all layers and net pairs, with a manifest"},
      {"selftest", "built-in consistency checks"},
      {"gen-fixture", "write a synthetic activation pair with ground truth"}};

  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file; flags override it");
    sub->add_option("--catalog", catalog, "catalog JSON: array of {net, layer, path}");
    sub->add_option("--acts", acts, "comma-separated activation files (instead of --catalog)");
    sub->add_option("--layer", layer, "layer name");
    sub->add_option("--layers", layers, "pipeline: comma-separated layers");
    sub->add_option("--nets", nets, "comma-separated nets, e.g. A,B");
    sub->add_option("--metric", metric, "similarity for matching")->check(CLI::IsMember({"corr", "mi"}));
    sub->add_option("--tau", tau, "adjacency threshold");
    sub->add_option("--k", k, "number of spectral clusters");
    sub->add_option("--alpha", alpha, "refinement size fraction");
    sub->add_option("--decays", decays, "comma-separated decay sweep");
    sub->add_option("--decay", decay, "decay of the mapping used for clustering");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--workers", workers, "worker threads (0 = all cores)");
    sub->add_option("--threshold", threshold, "unmatched-score threshold");
    sub->add_option("--unit", unit, "topk: single unit");
    sub->add_option("--topk", predictors, "lasso: predictors kept per target");
    sub->add_option("--weights", weights, "hac: cached weight matrix");
    sub->add_option("--matrix", matrix, "match: cached similarity matrix");
    sub->add_option("--mi-samples", mi_samples, "rows drawn for MI");
    sub->add_option("--mi", mi, "pipeline MI stage")->check(CLI::IsMember({"auto", "on", "off"}));
    sub->add_option("--restarts", restarts, "k-means restarts");
    sub->add_option("--lasso-tol", lasso_tol, "optimality tolerance");
    sub->add_option("--lasso-max-iter", lasso_max_iter, "sweeps per target");
    sub->add_option("--norm-dims", norm_dims, "normalization dimension (0 = units)");
    sub->add_flag("--bits", bits, "report MI in bits");
    sub->add_flag("--signed", signed_w, "hac: keep weight signs");
    sub->add_flag("--layer-norm-metric", layer_norm, "spectral: divide metrics by units^2");
    sub->add_option("--scenario", scenario, "fixture scenario")
        ->check(CLI::IsMember({"permuted", "rotated_blocks", "mixed", "planted_clusters", "sparse_linear"}));
    sub->add_option("--units", units, "fixture units per net");
    sub->add_option("--samples", samples, "fixture samples");
    sub->add_option("--noise", noise, "fixture relative noise");
    sub->add_option("--noise-spread", noise_spread, "fixture per-unit noise spread");
    sub->add_option("--block-size", block_size, "fixture rotation block size");
    sub->add_option("--frac-unique", frac_unique, "fixture fraction of unmatched units");
    sub->add_option("--cluster-sizes", cluster_sizes, "fixture cluster sizes, comma-separated");
    sub->add_option("--cluster-strength", cluster_strength, "fixture latent variance share");
    sub->add_option("--nnz", nnz, "fixture non-zeros per target");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  json cfg = json::object();
  if (config_path) {
    std::ifstream f(*config_path);
    if (!f) {
      std::cerr << "error: cannot open config " << *config_path << "\n";
      return 2;
    }
    try {
      cfg = json::parse(f);
    } catch (const json::exception& e) {
      std::cerr << "error: bad config: " << e.what() << "\n";
      return 2;
    }
  }
  try {
    put(cfg, "catalog", catalog);
    if (acts) cfg["acts"] = split_list(*acts);
    put(cfg, "layer", layer);
    if (layers) cfg["layers"] = split_list(*layers);
    if (nets) cfg["nets"] = split_list(*nets);
    put(cfg, "metric", metric);
    put(cfg, "tau", tau);
    put(cfg, "k", k);
    put(cfg, "alpha", alpha);
    if (decays) {
      std::vector<double> ds;
      for (const auto& s : split_list(*decays)) ds.push_back(std::stod(s));
      cfg["decays"] = ds;
    }
    put(cfg, "decay", decay);
    put(cfg, "seed", seed);
    put(cfg, "out_dir", out_dir);
    put(cfg, "format", format);
    put(cfg, "workers", workers);
    put(cfg, "threshold", threshold);
    put(cfg, "unit", unit);
    put(cfg, "predictors", predictors);
    put(cfg, "weights", weights);
    put(cfg, "matrix", matrix);
    put(cfg, "mi_samples", mi_samples);
    put(cfg, "mi", mi);
    put(cfg, "restarts", restarts);
    put(cfg, "lasso_tol", lasso_tol);
    put(cfg, "lasso_max_iter", lasso_max_iter);
    put(cfg, "norm_dims", norm_dims);
    if (bits) cfg["bits"] = true;
    if (signed_w) cfg["signed_weights"] = true;
    if (layer_norm) cfg["layer_norm_metric"] = true;
    if (command == "topk" && k) cfg["topk"] = *k;

    json& fx = cfg["fixture"];
    if (fx.is_null()) fx = json::object();
    put(fx, "scenario", scenario);
    put(fx, "units", units);
    put(fx, "samples", samples);
    put(fx, "noise_sigma", noise);
    put(fx, "noise_spread", noise_spread);
    put(fx, "block_size", block_size);
    put(fx, "frac_unique", frac_unique);
    put(fx, "cluster_strength", cluster_strength);
    put(fx, "nnz_per_row", nnz);
    if (seed && !fx.contains("seed")) fx["seed"] = *seed;
    if (cluster_sizes) {
      std::vector<std::size_t> cs;
      for (const auto& s : split_list(*cluster_sizes)) cs.push_back(std::stoul(s));
      fx["cluster_sizes"] = cs;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: bad list value: " << e.what() << "\n";
    return 2;
  }

  int exit_code = 0;
  const repalign_status st = repalign_run(command.c_str(), cfg.dump().c_str(), &exit_code);
  if (st != REPALIGN_OK) {
    std::cerr << "error: " << repalign_last_error() << "\n";
    return static_cast<int>(st);
  }
  return exit_code;
}
