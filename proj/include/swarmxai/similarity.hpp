#pragma once

#include <numeric>
#include <vector>

#include "swarmxai/explainer.hpp"

namespace swarmxai {

/// Directed class-confusion scores; entry (a, b) is the confusion from a to b.
/// The diagonal is stored as 0.
struct SimilarityMatrix {
  std::size_t n_classes = 0;
  std::vector<double> values;  // row-major n_classes x n_classes

  double operator()(std::size_t a, std::size_t b) const { return values[a * n_classes + b]; }
  double& operator()(std::size_t a, std::size_t b) { return values[a * n_classes + b]; }
  friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;
};

/// Confusion toward `target` accumulated over swarm weights, each weighted by
/// its distance below w_max so small perturbations count most.
/// `target_counts[j]` is how many of `rows` test rows were predicted as the
/// target at `weights[j]`.
inline double similarity_from_counts(std::span<const double> weights, std::span<const std::size_t> target_counts,
                                     std::size_t rows, double w_max) {
  if (weights.size() != target_counts.size()) throw Error("similarity: weights and counts differ in length");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] > w_max) throw Error("similarity: trace weight exceeds w_max");
    const double lever = w_max - weights[j];
    num += lever * static_cast<double>(target_counts[j]);
    den += lever * static_cast<double>(rows);
  }
  return den > 0.0 ? num / den : 0.0;
}

/// Per-feature similarity from the class of interest of `ctx` toward `target`,
/// over every weight in the trace. With the class-rows scope only rows of the
/// class of interest are counted; the whole-column scope counts every row.
inline double similarity_feature(const PerturbationContext& ctx, ClassId target, const SwarmTrace& trace,
                                 double w_max) {
  if (target == ctx.class_of_interest()) throw Error("similarity: source and target class are equal");
  if (target < 0 || static_cast<std::size_t>(target) >= ctx.n_classes()) {
    throw Error("similarity: target class out of range");
  }
  const bool all_rows = ctx.scope() == PerturbationScope::whole_column;
  const auto& truth = ctx.test_labels();
  std::vector<double> weights;
  std::vector<std::size_t> counts;
  for (const auto& rec : trace.records) {
    const auto& y = ctx.predictions(rec.weight);
    std::size_t n = 0;
    for (std::size_t r = 0; r < y.size(); ++r) {
      if (y[r] == target && (all_rows || truth[r] == ctx.class_of_interest())) ++n;
    }
    weights.push_back(rec.weight);
    counts.push_back(n);
  }
  return similarity_from_counts(weights, counts, all_rows ? ctx.n_rows() : ctx.class_row_count(), w_max);
}

inline double similarity_class_pair(std::span<const double> per_feature) {
  if (per_feature.empty()) throw Error("similarity: no features");
  return std::accumulate(per_feature.begin(), per_feature.end(), 0.0) / static_cast<double>(per_feature.size());
}

/// Per-feature similarity recomputed from the class-row counts stored in an
/// explanation.
inline double similarity_feature(const FeatureExplanation& fx, ClassId target, double w_max) {
  if (target == fx.class_id) throw Error("similarity: source and target class are equal");
  if (fx.class_prediction_counts.size() != fx.trace.records.size() || fx.class_prediction_counts.empty()) {
    throw Error("similarity: explanation carries no per-record prediction counts");
  }
  const auto& first = fx.class_prediction_counts.front();
  const std::size_t rows = std::accumulate(first.begin(), first.end(), std::size_t{0});
  std::vector<double> weights;
  std::vector<std::size_t> counts;
  for (std::size_t j = 0; j < fx.trace.records.size(); ++j) {
    weights.push_back(fx.trace.records[j].weight);
    counts.push_back(fx.class_prediction_counts[j].at(static_cast<std::size_t>(target)));
  }
  return similarity_from_counts(weights, counts, rows, w_max);
}

/// Full matrix from stored class explanations.
inline SimilarityMatrix similarity_matrix(std::span<const ClassExplanation> explanations, std::size_t n_classes,
                                          double w_max) {
  SimilarityMatrix sm{n_classes, std::vector<double>(n_classes * n_classes, 0.0)};
  std::vector<const ClassExplanation*> by_class(n_classes, nullptr);
  for (const auto& ce : explanations) {
    if (ce.class_id < 0 || static_cast<std::size_t>(ce.class_id) >= n_classes) {
      throw Error("similarity: class id out of range");
    }
    by_class[static_cast<std::size_t>(ce.class_id)] = &ce;
  }
  for (std::size_t a = 0; a < n_classes; ++a) {
    if (!by_class[a]) throw Error("similarity: missing explanation for class " + std::to_string(a));
    // features are summed in index order so the mean is order-stable
    std::vector<const FeatureExplanation*> feats;
    for (const auto& fx : by_class[a]->features) feats.push_back(&fx);
    std::sort(feats.begin(), feats.end(),
              [](const auto* x, const auto* y) { return x->feature_index < y->feature_index; });
    for (std::size_t b = 0; b < n_classes; ++b) {
      if (a == b) continue;
      std::vector<double> per_feature;
      for (const auto* fx : feats) {
        per_feature.push_back(similarity_feature(*fx, static_cast<ClassId>(b), w_max));
      }
      sm(a, b) = similarity_class_pair(per_feature);
    }
  }
  return sm;
}

/// Variant that multiplies the whole feature column (every test row) at each
/// trace weight instead of only the source-class rows. Needs the model.
inline SimilarityMatrix similarity_matrix_whole_column(const TrainedModel& model, const Dataset& test,
                                                       std::span<const ClassExplanation> explanations,
                                                       Metric metric, double w_max) {
  const std::size_t k = test.n_classes();
  SimilarityMatrix sm{k, std::vector<double>(k * k, 0.0)};
  std::vector<bool> seen(k, false);
  for (const auto& ce : explanations) {
    const auto a = static_cast<std::size_t>(ce.class_id);
    seen.at(a) = true;
    std::vector<const FeatureExplanation*> feats;
    for (const auto& fx : ce.features) feats.push_back(&fx);
    std::sort(feats.begin(), feats.end(),
              [](const auto* x, const auto* y) { return x->feature_index < y->feature_index; });
    std::vector<PerturbationContext> ctxs;
    for (const auto* fx : feats) {
      ctxs.emplace_back(model, test, ce.class_id, fx->feature_index, metric, PerturbationScope::whole_column);
    }
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) continue;
      std::vector<double> per_feature;
      for (std::size_t i = 0; i < feats.size(); ++i) {
        per_feature.push_back(similarity_feature(ctxs[i], static_cast<ClassId>(b), feats[i]->trace, w_max));
      }
      sm(a, b) = similarity_class_pair(per_feature);
    }
  }
  for (std::size_t a = 0; a < k; ++a) {
    if (!seen[a]) throw Error("similarity: missing explanation for class " + std::to_string(a));
  }
  return sm;
}

}  // namespace swarmxai
