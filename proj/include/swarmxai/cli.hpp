#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "swarmxai/bundle.hpp"
#include "swarmxai/evaluation.hpp"
#include "swarmxai/pipeline.hpp"
#include "swarmxai/server.hpp"

namespace swarmxai {

namespace cli_detail {

inline Hyperparameters parse_hyper(const std::vector<std::string>& pairs) {
  Hyperparameters hp;
  for (const auto& p : pairs) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--hp", "expected key=value, got '" + p + "'");
    const auto v = detail::parse_double(p.substr(eq + 1));
    if (!v) throw CLI::ValidationError("--hp", "value of '" + p + "' is not a number");
    hp[p.substr(0, eq)] = *v;
  }
  return hp;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<ClassId> parse_classes(const std::string& spec, const Dataset& ds) {
  if (spec == "all") return {};
  std::vector<ClassId> out;
  for (const auto& item : split_list(spec)) {
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), item);
    if (it != ds.class_names.end()) {
      out.push_back(static_cast<ClassId>(it - ds.class_names.begin()));
      continue;
    }
    const auto v = detail::parse_double(item);
    if (!v || *v < 0 || *v >= static_cast<double>(ds.n_classes()) || *v != std::floor(*v)) {
      throw Error("unknown class '" + item + "'");
    }
    out.push_back(static_cast<ClassId>(*v));
  }
  return out;
}

template <typename T>
std::vector<T> parse_number_list(const std::string& s, const char* what) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) {
    const auto v = detail::parse_double(item);
    if (!v) throw Error(std::string("bad value '") + item + "' in " + what);
    out.push_back(static_cast<T>(*v));
  }
  if (out.empty()) throw Error(std::string("empty list for ") + what);
  return out;
}

inline void print_rank(const ExplanationBundle& b, std::ostream& out) {
  std::size_t width = 7;
  for (const auto& n : b.dataset.feature_names) width = std::max(width, n.size());
  for (const auto& ce : b.classes) {
    out << "class " << ce.class_id << " (" << b.dataset.class_names.at(static_cast<std::size_t>(ce.class_id))
        << ")\n";
    out << "  " << std::left << std::setw(5) << "rank" << std::setw(static_cast<int>(width) + 2) << "feature"
        << std::right << std::setw(10) << "sigma_w" << std::setw(10) << "sigma_s" << std::setw(12) << "importance"
        << std::setw(13) << "best_weight" << '\n';
    std::size_t rank = 1;
    for (const auto& fx : ce.features) {
      out << "  " << std::left << std::setw(5) << rank++ << std::setw(static_cast<int>(width) + 2)
          << b.dataset.feature_names.at(fx.feature_index) << std::right << std::fixed << std::setprecision(5)
          << std::setw(10) << fx.sigma_w << std::setw(10) << fx.sigma_s << std::setw(12) << fx.importance
          << std::setw(13) << fx.best_weight << '\n';
      out.unsetf(std::ios::fixed);
    }
    out << '\n';
  }
}

// Swarm knobs shared by explain and evaluate.
struct SwarmFlags {
  SwarmConfig swarm;
  double epsilon = 0.25;
  double gamma = 0.2;
  double test_fraction = 0.3;
  Metric metric = Metric::accuracy;
  std::string metric_name = "accuracy";

  void add(CLI::App& app) {
    app.add_option("--particles", swarm.n_particles, "Swarm size")->capture_default_str();
    app.add_option("--iterations", swarm.iterations, "Swarm iterations")->capture_default_str();
    app.add_option("--vmin", swarm.v_min, "Lower bound of initial velocities")->capture_default_str();
    app.add_option("--vmax", swarm.v_max, "Upper bound of initial velocities")->capture_default_str();
    app.add_option("--chi", swarm.chi, "Constriction coefficient")->capture_default_str();
    app.add_option("--phi-max", swarm.phi_max, "Upper bound of acceleration draws")->capture_default_str();
    app.add_option("--ring-k", swarm.k, "Ring neighbourhood half-width")->capture_default_str();
    app.add_option("--wmax", swarm.w_max, "Largest perturbation weight")->capture_default_str();
    app.add_option("--epsilon", epsilon, "Confusion window width")->capture_default_str();
    app.add_option("--gamma", gamma, "Summary window width")->capture_default_str();
    app.add_option("--test-fraction", test_fraction, "Held-out fraction per class")->capture_default_str();
    app.add_option("--metric", metric_name, "Performance metric")
        ->check(CLI::IsMember({"accuracy", "f1", "macro_f1"}))
        ->capture_default_str();
  }

  void finish() { metric = parse_metric(metric_name); }
};

}  // namespace cli_detail

/// Runs the CLI. `argv[0]` is the program name.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Particle-swarm perturbation explanations for classifiers"};
  app.require_subcommand(1);

  // explain
  auto* explain = app.add_subcommand("explain", "Explain a classifier on a CSV dataset and write a bundle");
  std::string data_path;
  std::string label_column;
  std::string model_name = "tree";
  std::vector<std::string> hp_pairs;
  std::string classes_spec = "all";
  std::uint64_t seed = 0;
  std::string out_path = "bundle.json";
  std::string remote_cmd;
  double remote_timeout = 30.0;
  double shift_epsilon = 1.0;
  bool no_shift = false;
  std::size_t bins = 20;
  std::string histogram_rows = "test";
  std::string similarity_mode = "class_rows";
  std::string sigma_source = "personal_bests";
  std::string window_rows = "all";
  bool no_traces = false;
  bool timing = false;
  cli_detail::SwarmFlags sflags;
  explain->add_option("data", data_path, "CSV file")->required()->check(CLI::ExistingFile);
  explain->add_option("--label-column", label_column, "Label column name (default: last column)");
  explain->add_option("--model", model_name, "knn | nb | tree")->capture_default_str()
      ->check(CLI::IsMember({"knn", "nb", "gaussian_nb", "tree", "decision_tree"}));
  explain->add_option("--hp", hp_pairs, "Model hyperparameter key=value (repeatable)");
  explain->add_option("--classes", classes_spec, "'all' or comma-separated class ids/names")->capture_default_str();
  explain->add_option("--seed", seed, "Master seed")->capture_default_str();
  explain->add_option("--out", out_path, "Bundle path")->capture_default_str();
  explain->add_option("--remote", remote_cmd, "Shell command of an external model worker");
  explain->add_option("--remote-timeout", remote_timeout, "Seconds per remote request")->capture_default_str();
  explain->add_option("--shift-epsilon", shift_epsilon, "Shift added to zero-containing columns")
      ->capture_default_str();
  explain->add_flag("--no-shift", no_shift, "Do not shift zero-containing columns");
  explain->add_option("--bins", bins, "Histogram bins")->capture_default_str();
  explain->add_option("--histogram-rows", histogram_rows, "test | train")
      ->check(CLI::IsMember({"test", "train"}))->capture_default_str();
  explain->add_option("--similarity", similarity_mode, "class_rows | whole_column")
      ->check(CLI::IsMember({"class_rows", "whole_column"}))->capture_default_str();
  explain->add_option("--sigma-source", sigma_source, "personal_bests | final_positions")
      ->check(CLI::IsMember({"personal_bests", "final_positions"}))->capture_default_str();
  explain->add_option("--window-rows", window_rows, "all | class_only")
      ->check(CLI::IsMember({"all", "class_only"}))->capture_default_str();
  explain->add_flag("--no-traces", no_traces, "Omit swarm traces from the bundle");
  explain->add_flag("--timing", timing, "Record wall-clock time (bundle no longer byte-reproducible)");
  sflags.add(*explain);

  // rank
  auto* rank = app.add_subcommand("rank", "Print per-class importance tables from a bundle");
  std::string bundle_path;
  rank->add_option("bundle", bundle_path, "Bundle path")->required()->check(CLI::ExistingFile);

  // verify
  auto* verify = app.add_subcommand("verify", "Check a bundle's checksum and re-derive its values from the traces");
  verify->add_option("bundle", bundle_path, "Bundle path")->required()->check(CLI::ExistingFile);

  // serve
  auto* serve = app.add_subcommand("serve", "Serve a bundle and the viewer over HTTP");
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string assets;
  serve->add_option("bundle", bundle_path, "Bundle path")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--assets", assets, "Viewer asset directory");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Keep Absolute evaluation tools");
  evaluate->require_subcommand(1);
  std::size_t folds = 5;
  std::string orderings_spec = "swarm,anova,random";
  std::string results_path;
  auto* keep = evaluate->add_subcommand("keep-absolute", "Score feature orderings by Keep Absolute AUC");
  keep->add_option("data", data_path, "CSV file")->required()->check(CLI::ExistingFile);
  keep->add_option("--label-column", label_column, "Label column name (default: last column)");
  keep->add_option("--model", model_name, "knn | nb | tree")->capture_default_str()
      ->check(CLI::IsMember({"knn", "nb", "gaussian_nb", "tree", "decision_tree"}));
  keep->add_option("--hp", hp_pairs, "Model hyperparameter key=value (repeatable)");
  keep->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
  keep->add_option("--orderings", orderings_spec, "Comma list of swarm, anova, random, file:<path>")
      ->capture_default_str();
  keep->add_option("--seed", seed, "Seed")->capture_default_str();
  keep->add_option("--out", results_path, "Results JSON path (default: stdout table only)");
  cli_detail::SwarmFlags kflags;
  kflags.add(*keep);

  auto* sweep = evaluate->add_subcommand("sweep", "Keep Absolute AUC of the swarm ordering over a parameter grid");
  std::string particles_grid = "5,10,20";
  std::string iterations_grid = "15,30,60";
  std::vector<std::string> velocity_grid{"-1:1"};
  std::size_t repeats = 1;
  sweep->add_option("data", data_path, "CSV file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--label-column", label_column, "Label column name (default: last column)");
  sweep->add_option("--model", model_name, "knn | nb | tree")->capture_default_str()
      ->check(CLI::IsMember({"knn", "nb", "gaussian_nb", "tree", "decision_tree"}));
  sweep->add_option("--hp", hp_pairs, "Model hyperparameter key=value (repeatable)");
  sweep->add_option("--particles-grid", particles_grid, "Comma list of swarm sizes")->capture_default_str();
  sweep->add_option("--iterations-grid", iterations_grid, "Comma list of iteration counts")->capture_default_str();
  sweep->add_option("--velocity-grid", velocity_grid, "vmin:vmax pairs (repeatable)")->capture_default_str();
  sweep->add_option("--repeats", repeats, "Seeds per grid point")->capture_default_str();
  sweep->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
  sweep->add_option("--seed", seed, "Seed")->capture_default_str();
  sweep->add_option("--out", results_path, "Results JSON path");
  cli_detail::SwarmFlags wflags;
  wflags.add(*sweep);

  auto* ranking = evaluate->add_subcommand("ranking", "Rank methods across datasets from an AUC table");
  std::string table_path;
  ranking->add_option("table", table_path,
                      R"(JSON {"datasets":[...],"methods":[...],"values":[[...]],"higher_is_better":true,"ties":"average"})")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (explain->parsed()) {
      sflags.finish();
      const Dataset ds = load_csv(data_path, label_column);
      PipelineOptions opt;
      opt.source = data_path;
      if (!remote_cmd.empty()) {
        opt.model_kind = ModelKind::remote;
        opt.remote_command = remote_cmd;
        opt.remote_timeout = std::chrono::milliseconds(static_cast<long>(remote_timeout * 1000));
      } else {
        opt.model_kind = parse_model_kind(model_name);
        opt.hyperparameters = cli_detail::parse_hyper(hp_pairs);
      }
      opt.classes = cli_detail::parse_classes(classes_spec, ds);
      opt.swarm = sflags.swarm;
      opt.epsilon = sflags.epsilon;
      opt.gamma = sflags.gamma;
      opt.metric = sflags.metric;
      opt.seed = seed;
      opt.test_fraction = sflags.test_fraction;
      opt.shift_zeros = !no_shift;
      opt.shift_epsilon = shift_epsilon;
      opt.histogram_bins = bins;
      opt.histogram_from_train = histogram_rows == "train";
      opt.whole_column_similarity = similarity_mode == "whole_column";
      opt.sigma_source = sigma_source == "final_positions" ? SigmaSource::final_positions : SigmaSource::personal_bests;
      opt.window_rows = window_rows == "class_only" ? WindowRows::class_only : WindowRows::all;
      opt.keep_traces = !no_traces;
      opt.record_timing = timing;
      const auto bundle = run_pipeline(ds, opt);
      write_bundle(bundle, out_path);
      err << "wrote " << out_path << " (" << bundle.classes.size() << " classes, " << ds.n_features()
          << " features)\n";
      return 0;
    }

    if (rank->parsed()) {
      std::vector<std::string> warnings;
      const auto b = read_bundle(bundle_path, warnings);
      for (const auto& w : warnings) err << "warning: " << w << '\n';
      cli_detail::print_rank(b, out);
      return 0;
    }

    if (verify->parsed()) {
      std::vector<std::string> warnings;
      const auto b = read_bundle(bundle_path, warnings);
      auto problems = verify_bundle(b);
      for (const auto& w : warnings) err << "warning: " << w << '\n';
      for (const auto& p : problems) err << "mismatch: " << p << '\n';
      if (!b.config.traces) out << "bundle has no traces; derived values not checked\n";
      const bool ok = warnings.empty() && problems.empty();
      out << (ok ? "ok" : "FAILED") << '\n';
      return ok ? 0 : 2;
    }

    if (serve->parsed()) {
      BundleServer server(bundle_path, assets, &err);
      const int bound = server.bind(host, port);
      err << "serving " << bundle_path << " on http://" << host << ':' << bound << "/\n";
      server.listen();
      return 0;
    }

    if (keep->parsed()) {
      kflags.finish();
      const Dataset ds = load_csv(data_path, label_column);
      const auto kind = parse_model_kind(model_name);
      const auto hp = cli_detail::parse_hyper(hp_pairs);
      SweepSettings s;
      s.base = kflags.swarm;
      s.folds = folds;
      s.test_fraction = kflags.test_fraction;
      s.epsilon = kflags.epsilon;
      s.metric = kflags.metric;
      const auto [shifted, report] = shift_zero_features(ds, 1.0);
      std::vector<KeepAbsoluteResult> results;
      for (const auto& name : cli_detail::split_list(orderings_spec)) {
        FeatureOrdering ordering;
        if (name == "swarm") {
          ordering = swarm_ordering(shifted, kind, hp, kflags.swarm, s, seed);
        } else if (name == "anova") {
          ordering = anova_f_ordering(ds);
        } else if (name == "random") {
          ordering = random_ordering(ds.n_features(), seed);
        } else if (name.rfind("file:", 0) == 0) {
          ordering = load_ordering(name.substr(5));
        } else {
          err << "error: unknown ordering '" << name << "'\n";
          return 1;
        }
        results.push_back(keep_absolute(ds, kind, hp, ordering, folds, kflags.metric, seed, worker_threads()));
      }
      out << std::left << std::setw(16) << "method" << std::right << std::setw(10) << "auc" << "  order\n";
      for (const auto& r : results) {
        out << std::left << std::setw(16) << r.method_name << std::right << std::fixed << std::setprecision(4)
            << std::setw(10) << r.auc << "  ";
        out.unsetf(std::ios::fixed);
        for (std::size_t i = 0; i < r.order.size(); ++i) out << (i ? "," : "") << r.order[i];
        out << '\n';
      }
      if (!results_path.empty()) {
        nlohmann::json j = {{"dataset", data_path}, {"model", to_string(kind)}, {"seed", seed},
                            {"results", nlohmann::json::array()}};
        for (const auto& r : results) j["results"].push_back(to_json(r));
        std::ofstream f(results_path);
        if (!f) throw Error("cannot write '" + results_path + "'");
        f << j.dump(2) << '\n';
      }
      return 0;
    }

    if (sweep->parsed()) {
      wflags.finish();
      const Dataset ds = shift_zero_features(load_csv(data_path, label_column), 1.0).first;
      SweepGrid grid;
      grid.n_particles = cli_detail::parse_number_list<std::size_t>(particles_grid, "--particles-grid");
      grid.iterations = cli_detail::parse_number_list<std::size_t>(iterations_grid, "--iterations-grid");
      grid.velocity_bounds.clear();
      for (const auto& v : velocity_grid) {
        const auto colon = v.find(':');
        const auto lo = colon == std::string::npos ? std::nullopt : detail::parse_double(v.substr(0, colon));
        const auto hi = colon == std::string::npos ? std::nullopt : detail::parse_double(v.substr(colon + 1));
        if (!lo || !hi) {
          err << "error: --velocity-grid expects vmin:vmax, got '" << v << "'\n";
          return 1;
        }
        grid.velocity_bounds.emplace_back(*lo, *hi);
      }
      SweepSettings s;
      s.base = wflags.swarm;
      s.folds = folds;
      s.repeats = repeats;
      s.test_fraction = wflags.test_fraction;
      s.epsilon = wflags.epsilon;
      s.metric = wflags.metric;
      const auto kind = parse_model_kind(model_name);
      const auto points = parameter_sweep(ds, kind, cli_detail::parse_hyper(hp_pairs), grid, s, seed);
      nlohmann::json j = nlohmann::json::array();
      out << std::setw(10) << "particles" << std::setw(11) << "iterations" << std::setw(14) << "velocity"
          << std::setw(9) << "mean" << std::setw(9) << "min" << std::setw(9) << "max" << '\n';
      for (const auto& p : points) {
        std::ostringstream vel;
        vel << p.config.v_min << ':' << p.config.v_max;
        out << std::setw(10) << p.config.n_particles << std::setw(11) << p.config.iterations << std::setw(14)
            << vel.str() << std::fixed << std::setprecision(4) << std::setw(9) << p.mean << std::setw(9) << p.min
            << std::setw(9) << p.max << '\n';
        out.unsetf(std::ios::fixed);
        j.push_back({{"config", detail::swarm_to_json(p.config)},
                     {"aucs", p.aucs},
                     {"mean", p.mean},
                     {"min", p.min},
                     {"max", p.max}});
      }
      if (!results_path.empty()) {
        std::ofstream f(results_path);
        if (!f) throw Error("cannot write '" + results_path + "'");
        f << j.dump(2) << '\n';
      }
      return 0;
    }

    if (ranking->parsed()) {
      std::ifstream f(table_path);
      auto j = nlohmann::json::parse(f, nullptr, false);
      if (j.is_discarded()) throw Error("'" + table_path + "' is not valid JSON");
      RankOptions ro;
      ro.higher_is_better = j.value("higher_is_better", true);
      ro.ties = j.value("ties", std::string("average")) == "min" ? TieRule::min : TieRule::average;
      const auto t = ranking_table(j.at("datasets").get<std::vector<std::string>>(),
                                   j.at("methods").get<std::vector<std::string>>(),
                                   j.at("values").get<std::vector<std::vector<double>>>(), ro);
      std::size_t width = 8;
      for (const auto& m : t.methods) width = std::max(width, m.size() + 2);
      out << std::left << std::setw(static_cast<int>(width)) << "method";
      for (const auto& d : t.datasets) out << std::right << std::setw(std::max<int>(8, static_cast<int>(d.size()) + 2)) << d;
      out << std::setw(14) << "mean_rank" << std::setw(8) << "sd" << '\n';
      for (std::size_t m = 0; m < t.methods.size(); ++m) {
        out << std::left << std::setw(static_cast<int>(width)) << t.methods[m] << std::right;
        for (std::size_t d = 0; d < t.datasets.size(); ++d) {
          out << std::setw(std::max<int>(8, static_cast<int>(t.datasets[d].size()) + 2)) << t.ranks[d][m];
        }
        out << std::fixed << std::setprecision(2) << std::setw(14) << t.mean_rank[m] << std::setw(8) << t.stddev[m]
            << '\n';
        out.unsetf(std::ios::fixed);
      }
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace swarmxai
