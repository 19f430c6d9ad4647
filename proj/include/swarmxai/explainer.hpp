#pragma once

#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <vector>

#include "swarmxai/common.hpp"
#include "swarmxai/dataset.hpp"
#include "swarmxai/models.hpp"
#include "swarmxai/pso.hpp"

namespace swarmxai {

/// Which test rows a perturbation multiplies.
enum class PerturbationScope {
  class_rows,   // only rows of the class of interest (the default everywhere)
  whole_column  // every row; used by the literal similarity variant
};

/// A model, a test set and the (class, feature) pair being perturbed.
///
/// Predictions are memoised per weight, so the swarm, the score summaries, the
/// confusion windows and the similarity counts all reuse a single model call
/// per distinct weight. Copies share the cache.
class PerturbationContext {
 public:
  PerturbationContext(TrainedModel model, const Dataset& test, ClassId class_of_interest, std::size_t feature,
                      Metric metric, PerturbationScope scope = PerturbationScope::class_rows)
      : model_(std::move(model)),
        features_(std::make_shared<const Matrix>(test.features)),
        labels_(std::make_shared<const Labels>(test.labels)),
        n_classes_(test.n_classes()),
        class_(class_of_interest),
        feature_(feature),
        metric_(metric),
        scope_(scope),
        cache_(std::make_shared<Cache>()) {
    if (!model_) throw Error("perturbation context: null model");
    if (feature_ >= test.n_features()) throw Error("perturbation context: feature index out of range");
    if (class_ < 0 || static_cast<std::size_t>(class_) >= n_classes_) {
      throw Error("perturbation context: class id out of range");
    }
    for (ClassId y : test.labels) {
      if (y == class_) {
        ++class_rows_;
      }
    }
    if (class_rows_ == 0) {
      throw Error("perturbation context: class '" + test.class_names[static_cast<std::size_t>(class_)] +
                  "' has no test rows");
    }
  }

  const Model& model() const noexcept { return *model_; }
  const Matrix& test_features() const noexcept { return *features_; }
  const Labels& test_labels() const noexcept { return *labels_; }
  std::size_t n_rows() const noexcept { return labels_->size(); }
  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t class_row_count() const noexcept { return class_rows_; }
  ClassId class_of_interest() const noexcept { return class_; }
  std::size_t feature_index() const noexcept { return feature_; }
  Metric metric() const noexcept { return metric_; }
  PerturbationScope scope() const noexcept { return scope_; }

  /// Test matrix with the feature column multiplied by w on the rows in scope.
  Matrix perturbed_matrix(double w) const {
    Matrix X = *features_;
    for (std::size_t r = 0; r < X.rows(); ++r) {
      if (scope_ == PerturbationScope::whole_column || (*labels_)[r] == class_) X(r, feature_) *= w;
    }
    return X;
  }

  /// Model predictions on the perturbed test set (memoised).
  const Labels& predictions(double w) const {
    {
      std::lock_guard lock(cache_->mu);
      if (auto it = cache_->by_weight.find(w); it != cache_->by_weight.end()) return it->second;
    }
    Labels y = model_->predict(perturbed_matrix(w));
    ++cache_->model_calls;
    std::lock_guard lock(cache_->mu);
    // std::map nodes are stable, so the reference outlives the lock
    return cache_->by_weight.try_emplace(w, std::move(y)).first->second;
  }

  std::size_t model_calls() const noexcept { return cache_->model_calls.load(); }

 private:
  struct Cache {
    std::mutex mu;
    std::map<double, Labels> by_weight;
    std::atomic<std::size_t> model_calls{0};
  };

  TrainedModel model_;
  std::shared_ptr<const Matrix> features_;
  std::shared_ptr<const Labels> labels_;
  std::size_t n_classes_;
  ClassId class_;
  std::size_t feature_;
  Metric metric_;
  PerturbationScope scope_;
  std::size_t class_rows_ = 0;
  std::shared_ptr<Cache> cache_;
};

inline Labels perturbed_predict(const PerturbationContext& ctx, double w) { return ctx.predictions(w); }

/// Performance score of the model with the perturbation applied.
inline double perturbed_score(const PerturbationContext& ctx, double w) {
  return score(ctx.metric(), ctx.test_labels(), ctx.predictions(w));
}

/// Fitness maximised by the swarm: the drop from a perfect score.
inline double fitness_h(const PerturbationContext& ctx, double w) { return std::abs(1.0 - perturbed_score(ctx, w)); }

// ---------------------------------------------------------------------------

struct ConfusionWindow {
  double w_lo = 0.0;
  double w_hi = 0.0;
  std::vector<double> class_proportions;  // empty when no weight fell inside
  double mean_score = 0.0;
  std::size_t n_weights = 0;

  bool empty() const noexcept { return n_weights == 0; }
  friend bool operator==(const ConfusionWindow&, const ConfusionWindow&) = default;
};

/// Number of fixed-width windows covering [lo, hi].
inline std::size_t window_count(double lo, double hi, double width) {
  if (!(width > 0.0)) throw Error("window width must be positive");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9)));
}

/// Window holding w; the closing edge hi belongs to the last window.
inline std::size_t window_index(double w, double lo, double width, std::size_t count) {
  const double pos = std::floor((w - lo) / width);
  if (pos <= 0.0) return 0;
  return std::min(count - 1, static_cast<std::size_t>(pos));
}

/// Confusion windows from per-weight class counts.
///
/// `counts[j][c]` is how many of `rows` test rows were predicted as class c
/// at `weights[j]`, and `scores[j]` the matching performance score. Each
/// window averages the per-weight class fractions of the weights inside it.
inline std::vector<ConfusionWindow> confusion_windows_from_counts(
    std::span<const double> weights, std::span<const double> scores,
    const std::vector<std::vector<std::size_t>>& counts, std::size_t rows, std::size_t n_classes,
    double epsilon, double w_min, double w_max) {
  if (weights.size() != counts.size() || weights.size() != scores.size()) {
    throw Error("confusion windows: weights, scores and counts differ in length");
  }
  const std::size_t n = window_count(w_min, w_max, epsilon);
  std::vector<ConfusionWindow> out(n);
  std::vector<std::vector<double>> sums(n, std::vector<double>(n_classes, 0.0));
  std::vector<double> score_sums(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].w_lo = w_min + epsilon * static_cast<double>(i);
    out[i].w_hi = out[i].w_lo + epsilon;
  }
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const std::size_t i = window_index(weights[j], w_min, epsilon, n);
    for (std::size_t c = 0; c < n_classes; ++c) {
      sums[i][c] += static_cast<double>(counts[j][c]) / static_cast<double>(rows);
    }
    score_sums[i] += scores[j];
    ++out[i].n_weights;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (out[i].n_weights == 0) continue;
    const auto k = static_cast<double>(out[i].n_weights);
    out[i].class_proportions.resize(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) out[i].class_proportions[c] = sums[i][c] / k;
    out[i].mean_score = score_sums[i] / k;
  }
  return out;
}

/// Which test rows the confusion proportions are computed over.
enum class WindowRows { all, class_only };

/// Per-record predicted-class histogram over the chosen rows.
inline std::vector<std::vector<std::size_t>> prediction_counts(const PerturbationContext& ctx,
                                                              const SwarmTrace& trace,
                                                              WindowRows rows = WindowRows::all) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(trace.records.size());
  const auto& truth = ctx.test_labels();
  for (const auto& rec : trace.records) {
    const auto& y = ctx.predictions(rec.weight);
    std::vector<std::size_t> c(ctx.n_classes(), 0);
    for (std::size_t r = 0; r < y.size(); ++r) {
      if (rows == WindowRows::all || truth[r] == ctx.class_of_interest()) ++c[static_cast<std::size_t>(y[r])];
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<ConfusionWindow> confusion_windows(const PerturbationContext& ctx, const SwarmTrace& trace,
                                                      double epsilon, double w_min, double w_max,
                                                      WindowRows rows = WindowRows::all) {
  std::vector<double> weights;
  std::vector<double> scores;
  for (const auto& rec : trace.records) {
    weights.push_back(rec.weight);
    scores.push_back(1.0 - rec.fitness);
  }
  const std::size_t n_rows = rows == WindowRows::all ? ctx.n_rows() : ctx.class_row_count();
  return confusion_windows_from_counts(weights, scores, prediction_counts(ctx, trace, rows), n_rows,
                                       ctx.n_classes(), epsilon, w_min, w_max);
}

// ---------------------------------------------------------------------------

/// Best record of a trace under the selection rule; earliest record wins a
/// full tie. A trace that never lowers performance yields (1, 0).
inline Candidate best_weight(const SwarmTrace& trace) {
  if (trace.records.empty()) throw Error("best_weight: empty trace");
  Candidate best{trace.records.front().fitness, trace.records.front().weight};
  for (const auto& rec : trace.records) {
    const Candidate c{rec.fitness, rec.weight};
    const bool tie = std::abs(c.fitness - best.fitness) <= kFitnessTolerance;
    if (c.fitness > best.fitness + kFitnessTolerance ||
        (tie && std::abs(1.0 - c.weight) < std::abs(1.0 - best.weight))) {
      best = c;
    }
  }
  if (best.fitness == 0.0) return {0.0, 1.0};
  return best;
}

struct SigmaPair {
  double sigma_w = 0.0;
  double sigma_s = 0.0;
};

inline constexpr double kSigmaGroupTolerance = 1e-9;

/// Importance per feature, in input order.
///
/// Features whose sigma_s agree (within 1e-9, chained after sorting) form a
/// group; within a group sigma_w is normalised by the group maximum so the
/// smaller mean perturbation ranks higher, while sigma_s * x_max separates the
/// groups.
inline std::vector<double> importance_scores(std::span<const SigmaPair> sigmas, double x_max) {
  if (!(x_max > 0.0)) throw Error("importance: x_max must be positive");
  for (const auto& s : sigmas) {
    if (s.sigma_w < 0.0 || s.sigma_s < 0.0) throw Error("importance: negative sigma");
  }
  std::vector<std::size_t> order(sigmas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigmas[a].sigma_s < sigmas[b].sigma_s; });

  std::vector<double> out(sigmas.size(), 0.0);
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start + 1;
    while (end < order.size() &&
           sigmas[order[end]].sigma_s - sigmas[order[end - 1]].sigma_s <= kSigmaGroupTolerance) {
      ++end;
    }
    double group_max = 0.0;
    for (std::size_t i = start; i < end; ++i) group_max = std::max(group_max, sigmas[order[i]].sigma_w);
    for (std::size_t i = start; i < end; ++i) {
      const auto& s = sigmas[order[i]];
      const double ratio = group_max > 0.0 ? s.sigma_w / group_max : 0.0;
      out[order[i]] = s.sigma_s * (x_max - ratio / x_max);
    }
    start = end;
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Which swarm positions feed sigma_w / sigma_s.
enum class SigmaSource { personal_bests, final_positions };

struct ExplainOptions {
  SigmaSource sigma_source = SigmaSource::personal_bests;
  WindowRows window_rows = WindowRows::all;
  unsigned threads = 0;  // 0: SWARM_XAI_THREADS or hardware concurrency
};

struct FeatureExplanation {
  ClassId class_id = 0;
  std::size_t feature_index = 0;
  double sigma_w = 0.0;
  double sigma_s = 0.0;
  double importance = 0.0;
  double best_weight = 1.0;
  double best_fitness = 0.0;
  double baseline_score = 0.0;
  std::uint64_t seed = 0;
  SwarmTrace trace;
  // Whole-test-set predicted-class counts for each trace record.
  std::vector<std::vector<std::size_t>> prediction_counts;
  // Same, restricted to rows of the class of interest.
  std::vector<std::vector<std::size_t>> class_prediction_counts;
  std::vector<ConfusionWindow> confusion_windows;
  std::size_t model_calls = 0;

  friend bool operator==(const FeatureExplanation&, const FeatureExplanation&) = default;
};

struct ClassExplanation {
  ClassId class_id = 0;
  std::uint64_t seed = 0;
  std::vector<FeatureExplanation> features;  // descending importance

  friend bool operator==(const ClassExplanation&, const ClassExplanation&) = default;
};

/// sigma_w and sigma_s over a set of swarm positions, given their fitness.
/// With fitness = 1 - score, |score(w) - score(1)| = |fitness(w) - fitness(1)|,
/// which keeps the result reproducible from a stored trace.
inline SigmaPair sigma_from_fitness(std::span<const double> weights, std::span<const double> fitness,
                                    double baseline_fitness) {
  if (weights.size() != fitness.size()) throw Error("sigma: weights and fitness differ in length");
  SigmaPair s;
  if (weights.empty()) return s;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    s.sigma_w += std::abs(weights[j] - 1.0);
    s.sigma_s += std::abs(fitness[j] - baseline_fitness);
  }
  s.sigma_w /= static_cast<double>(weights.size());
  s.sigma_s /= static_cast<double>(weights.size());
  return s;
}

/// Sigma pair from a trace's personal bests.
inline SigmaPair sigma_from_personal_bests(const SwarmTrace& trace) {
  std::vector<double> w;
  std::vector<double> f;
  for (const auto& pb : trace.personal_bests) {
    w.push_back(pb.weight);
    f.push_back(pb.fitness);
  }
  return sigma_from_fitness(w, f, trace.baseline_fitness);
}

inline FeatureExplanation explain_feature(const PerturbationContext& ctx, const SwarmConfig& config,
                                          double epsilon, std::uint64_t seed, const ExplainOptions& opts = {}) {
  config.validate();
  if (!(epsilon > 0.0)) throw Error("explain_feature: epsilon must be positive");

  FeatureExplanation fx;
  fx.class_id = ctx.class_of_interest();
  fx.feature_index = ctx.feature_index();
  fx.seed = seed;
  fx.trace = run_pso(config, [&](double w) { return fitness_h(ctx, w); }, seed);
  fx.baseline_score = perturbed_score(ctx, 1.0);

  SigmaPair sig;
  if (opts.sigma_source == SigmaSource::personal_bests) {
    sig = sigma_from_personal_bests(fx.trace);
  } else {
    std::vector<double> fit;
    for (double w : fx.trace.final_positions) fit.push_back(fitness_h(ctx, w));
    sig = sigma_from_fitness(fx.trace.final_positions, fit, fx.trace.baseline_fitness);
  }
  fx.sigma_w = sig.sigma_w;
  fx.sigma_s = sig.sigma_s;
  fx.importance = importance_scores(std::span(&sig, 1), config.w_max).front();

  const Candidate best = best_weight(fx.trace);
  fx.best_weight = best.weight;
  fx.best_fitness = best.fitness;
  fx.prediction_counts = prediction_counts(ctx, fx.trace, WindowRows::all);
  fx.class_prediction_counts = prediction_counts(ctx, fx.trace, WindowRows::class_only);
  fx.confusion_windows = confusion_windows(ctx, fx.trace, epsilon, config.w_min, config.w_max, opts.window_rows);
  fx.model_calls = ctx.model_calls();
  return fx;
}

/// Orders features by descending importance, ties by ascending feature index.
inline void sort_by_importance(std::vector<FeatureExplanation>& features) {
  std::stable_sort(features.begin(), features.end(), [](const auto& a, const auto& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.feature_index < b.feature_index;
  });
}

/// Explains every feature for one class. Feature f runs with seed ^ f; runs may
/// execute concurrently and are merged in feature order.
inline ClassExplanation explain_class(const TrainedModel& model, const Dataset& test, ClassId class_id,
                                      const SwarmConfig& config, double epsilon, Metric metric,
                                      std::uint64_t seed, const ExplainOptions& opts = {}) {
  config.validate();
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= test.n_classes()) {
    throw Error("explain_class: class id " + std::to_string(class_id) + " out of range");
  }
  const std::size_t m = test.n_features();
  std::vector<FeatureExplanation> features(m);
  const unsigned threads = opts.threads ? opts.threads : worker_threads();
  parallel_for(m, threads, [&](std::size_t f) {
    PerturbationContext ctx(model, test, class_id, f, metric);
    features[f] = explain_feature(ctx, config, epsilon, seed ^ static_cast<std::uint64_t>(f), opts);
  });

  std::vector<SigmaPair> sigmas;
  for (const auto& fx : features) sigmas.push_back({fx.sigma_w, fx.sigma_s});
  const auto importance = importance_scores(sigmas, config.w_max);
  for (std::size_t f = 0; f < m; ++f) features[f].importance = importance[f];
  sort_by_importance(features);
  return ClassExplanation{class_id, seed, std::move(features)};
}

}  // namespace swarmxai
