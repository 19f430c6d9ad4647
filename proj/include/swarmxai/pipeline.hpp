#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "swarmxai/bundle.hpp"
#include "swarmxai/dataset.hpp"
#include "swarmxai/explainer.hpp"
#include "swarmxai/models.hpp"
#include "swarmxai/remote_model.hpp"
#include "swarmxai/similarity.hpp"

namespace swarmxai {

/// Everything an end-to-end explanation run needs besides the data.
struct PipelineOptions {
  std::string source;  // recorded in the bundle only
  ModelKind model_kind = ModelKind::decision_tree;
  Hyperparameters hyperparameters;
  std::string remote_command;  // run through /bin/sh -c when model_kind is remote
  std::chrono::milliseconds remote_timeout{30000};
  std::vector<ClassId> classes;  // empty: all classes
  SwarmConfig swarm;
  double epsilon = 0.25;
  double gamma = 0.2;
  Metric metric = Metric::accuracy;
  std::uint64_t seed = 0;
  double test_fraction = 0.3;
  bool shift_zeros = true;
  double shift_epsilon = 1.0;
  std::size_t histogram_bins = 20;
  bool histogram_from_train = false;
  bool whole_column_similarity = false;
  SigmaSource sigma_source = SigmaSource::personal_bests;
  WindowRows window_rows = WindowRows::all;
  bool keep_traces = true;
  bool record_timing = false;
  unsigned threads = 0;
};

/// Seed for class c's explanation, derived from the run seed.
inline std::uint64_t class_seed(std::uint64_t seed, ClassId c) { return derive_seed(seed, static_cast<std::uint64_t>(c)); }

/// Split, (shift,) train, explain the requested classes, compute similarity
/// and histograms, and assemble the bundle.
inline ExplanationBundle run_pipeline(const Dataset& ds, const PipelineOptions& opt) {
  const auto started = std::chrono::steady_clock::now();
  opt.swarm.validate();

  const auto split = stratified_split(ds, opt.test_fraction, opt.seed);
  PreprocessReport report{{}, opt.shift_epsilon};
  if (opt.shift_zeros) report = shift_zero_features(ds, opt.shift_epsilon).second;
  const Dataset train_set = apply_shift(split.train, report);
  const Dataset test_set = apply_shift(split.test, report);

  TrainedModel model;
  ModelMeta model_meta;
  model_meta.kind = to_string(opt.model_kind);
  if (opt.model_kind == ModelKind::remote) {
    if (opt.remote_command.empty()) throw Error("remote model requested without a command");
    model_meta.command = {"/bin/sh", "-c", opt.remote_command};
    auto remote = RemoteModel::spawn(model_meta.command, opt.remote_timeout);
    if (remote->n_features() != ds.n_features() || remote->n_classes() != ds.n_classes()) {
      throw Error("remote model reports " + std::to_string(remote->n_classes()) + " classes / " +
                  std::to_string(remote->n_features()) + " features; data has " + std::to_string(ds.n_classes()) +
                  " / " + std::to_string(ds.n_features()));
    }
    model = remote;
  } else {
    model = train(opt.model_kind, train_set, opt.hyperparameters, opt.seed);
    model_meta.hyperparameters = opt.hyperparameters;
  }
  const Labels base = model->predict(test_set.features);
  model_meta.baseline_accuracy = score(Metric::accuracy, test_set.labels, base);
  model_meta.baseline_macro_f1 = score(Metric::macro_f1, test_set.labels, base);

  std::vector<ClassId> classes = opt.classes;
  if (classes.empty()) {
    for (std::size_t c = 0; c < ds.n_classes(); ++c) classes.push_back(static_cast<ClassId>(c));
  }
  ExplainOptions eopt;
  eopt.sigma_source = opt.sigma_source;
  eopt.window_rows = opt.window_rows;
  eopt.threads = opt.threads;
  std::vector<ClassExplanation> explanations;
  for (ClassId c : classes) {
    explanations.push_back(
        explain_class(model, test_set, c, opt.swarm, opt.epsilon, opt.metric, class_seed(opt.seed, c), eopt));
  }

  std::optional<SimilarityMatrix> similarity;
  if (explanations.size() == ds.n_classes()) {
    similarity = opt.whole_column_similarity
                     ? similarity_matrix_whole_column(model, test_set, explanations, opt.metric, opt.swarm.w_max)
                     : similarity_matrix(explanations, ds.n_classes(), opt.swarm.w_max);
  }

  // distributions are shown on unshifted values
  const Dataset& hist_src = opt.histogram_from_train ? split.train : split.test;
  std::vector<Histogram> histograms;
  for (std::size_t f = 0; f < ds.n_features(); ++f) {
    histograms.push_back(histogram(hist_src, f, std::nullopt, opt.histogram_bins));
    for (std::size_t c = 0; c < ds.n_classes(); ++c) {
      histograms.push_back(histogram(hist_src, f, static_cast<ClassId>(c), opt.histogram_bins));
    }
  }

  BundleInputs in;
  in.dataset.source = opt.source;
  in.dataset.feature_names = ds.feature_names;
  in.dataset.class_names = ds.class_names;
  in.dataset.n_rows = ds.n_rows();
  in.dataset.n_train = split.train.n_rows();
  in.dataset.n_test = split.test.n_rows();
  in.dataset.test_class_counts = split.test.class_counts();
  in.dataset.preprocessing = report;
  in.model = std::move(model_meta);
  in.config.swarm = opt.swarm;
  in.config.epsilon = opt.epsilon;
  in.config.gamma = opt.gamma;
  in.config.seed = opt.seed;
  in.config.metric = opt.metric;
  in.config.test_fraction = opt.test_fraction;
  in.config.sigma_source = opt.sigma_source == SigmaSource::personal_bests ? "personal_bests" : "final_positions";
  in.config.window_rows = opt.window_rows == WindowRows::all ? "all" : "class_only";
  in.config.similarity_mode = opt.whole_column_similarity ? "whole_column" : "class_rows";
  in.config.histogram_bins = opt.histogram_bins;
  in.config.histogram_rows = opt.histogram_from_train ? "train" : "test";
  in.config.traces = opt.keep_traces;
  in.classes = std::move(explanations);
  in.histograms = std::move(histograms);
  in.similarity = std::move(similarity);

  std::size_t calls = 0;
  std::size_t evaluations = 0;
  for (const auto& ce : in.classes) {
    for (const auto& fx : ce.features) {
      calls += fx.model_calls;
      evaluations += fx.trace.records.size();
    }
  }
  in.timing = {{"model_calls", calls}, {"fitness_evaluations", evaluations}};
  if (opt.record_timing) {
    in.timing["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  return build_bundle(std::move(in));
}

}  // namespace swarmxai
