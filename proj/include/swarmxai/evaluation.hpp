#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarmxai/dataset.hpp"
#include "swarmxai/explainer.hpp"
#include "swarmxai/models.hpp"

namespace swarmxai {

/// Feature indices, most important first.
struct FeatureOrdering {
  std::string method_name;
  std::vector<std::size_t> order;
  friend bool operator==(const FeatureOrdering&, const FeatureOrdering&) = default;
};

inline void validate_ordering(const FeatureOrdering& o, std::size_t m) {
  if (o.order.size() != m) {
    throw Error("ordering '" + o.method_name + "' has " + std::to_string(o.order.size()) + " entries, expected " +
                std::to_string(m));
  }
  std::vector<bool> seen(m, false);
  for (std::size_t f : o.order) {
    if (f >= m || seen[f]) throw Error("ordering '" + o.method_name + "' is not a permutation");
    seen[f] = true;
  }
}

namespace detail {

inline std::vector<std::size_t> argsort_descending(const std::vector<double>& score) {
  std::vector<std::size_t> idx(score.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return idx;
}

}  // namespace detail

/// Global ordering from per-class swarm explanations: mean importance across
/// classes, descending, ties by feature index.
inline FeatureOrdering swarm_global_ordering(std::span<const ClassExplanation> classes) {
  if (classes.empty()) throw Error("swarm ordering needs at least one class explanation");
  std::size_t m = classes.front().features.size();
  std::vector<double> total(m, 0.0);
  for (const auto& ce : classes) {
    if (ce.features.size() != m) throw Error("class explanations disagree on feature count");
    for (const auto& fx : ce.features) total.at(fx.feature_index) += fx.importance;
  }
  for (double& t : total) t /= static_cast<double>(classes.size());
  return {"swarm", detail::argsort_descending(total)};
}

/// One-way ANOVA F ratio per feature.
inline std::vector<double> anova_f_scores(const Dataset& ds) {
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 2) throw Error("anova: class '" + ds.class_names[c] + "' needs at least 2 rows");
  }
  const std::size_t k = ds.n_classes();
  const auto n = static_cast<double>(ds.n_rows());
  if (ds.n_rows() <= k) throw Error("anova: need more rows than classes");
  std::vector<double> f_scores(ds.n_features());
  for (std::size_t j = 0; j < ds.n_features(); ++j) {
    std::vector<double> sum(k, 0.0);
    double grand = 0.0;
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
      sum[static_cast<std::size_t>(ds.labels[r])] += ds.features(r, j);
      grand += ds.features(r, j);
    }
    grand /= n;
    double ssb = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double mean = sum[c] / static_cast<double>(counts[c]);
      ssb += static_cast<double>(counts[c]) * (mean - grand) * (mean - grand);
    }
    double ssw = 0.0;
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
      const auto c = static_cast<std::size_t>(ds.labels[r]);
      const double d = ds.features(r, j) - sum[c] / static_cast<double>(counts[c]);
      ssw += d * d;
    }
    const double msb = ssb / static_cast<double>(k - 1);
    const double msw = ssw / (n - static_cast<double>(k));
    // relative cutoffs absorb rounding noise on constant or class-constant columns
    const double scale = std::max(1.0, grand * grand) * n;
    if (ssb <= 1e-12 * scale) {
      f_scores[j] = 0.0;
    } else if (ssw <= 1e-12 * scale) {
      f_scores[j] = std::numeric_limits<double>::infinity();
    } else {
      f_scores[j] = msb / msw;
    }
  }
  return f_scores;
}

inline FeatureOrdering anova_f_ordering(const Dataset& ds) {
  return {"anova", detail::argsort_descending(anova_f_scores(ds))};
}

inline FeatureOrdering random_ordering(std::size_t m, std::uint64_t seed) {
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  return {"random", std::move(order)};
}

// ---------------------------------------------------------------------------

/// Trapezoidal area under a unit-spaced curve, normalised by its length.
inline double keep_absolute_auc(std::span<const double> scores) {
  if (scores.empty()) throw Error("auc: empty curve");
  if (scores.size() == 1) return scores.front();
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < scores.size(); ++i) area += (scores[i] + scores[i + 1]) / 2.0;
  return area / static_cast<double>(scores.size() - 1);
}

struct KeepAbsoluteResult {
  std::string method_name;
  std::vector<double> scores;  // scores[k-1]: mean CV score with the top-k features
  double auc = 0.0;
  std::size_t folds = 0;
  Metric metric = Metric::accuracy;
  std::vector<std::size_t> order;
};

/// Mean stratified k-fold CV score of a built-in model trained on the feature
/// prefix ordering[0..k) for every k. Every prefix uses the same folds.
inline KeepAbsoluteResult keep_absolute(const Dataset& ds, ModelKind kind, const Hyperparameters& hp,
                                        const FeatureOrdering& ordering, std::size_t folds, Metric metric,
                                        std::uint64_t seed, unsigned threads = 1) {
  validate_ordering(ordering, ds.n_features());
  const auto fold_of = stratified_folds(ds, folds, seed);
  const std::size_t m = ds.n_features();

  std::vector<std::vector<std::size_t>> train_rows(folds);
  std::vector<std::vector<std::size_t>> test_rows(folds);
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    for (std::size_t f = 0; f < folds; ++f) (fold_of[r] == f ? test_rows : train_rows)[f].push_back(r);
  }

  KeepAbsoluteResult res;
  res.method_name = ordering.method_name;
  res.folds = folds;
  res.metric = metric;
  res.order = ordering.order;
  res.scores.assign(m, 0.0);
  std::vector<double> fold_scores(m * folds, 0.0);
  parallel_for(m * folds, threads, [&](std::size_t task) {
    const std::size_t k = task / folds + 1;
    const std::size_t f = task % folds;
    const std::vector<std::size_t> cols(ordering.order.begin(), ordering.order.begin() + static_cast<std::ptrdiff_t>(k));
    const Dataset reduced = ds.with_features(cols);
    const Dataset tr = reduced.subset(train_rows[f]);
    const Dataset te = reduced.subset(test_rows[f]);
    const auto model = train(kind, tr, hp, seed);
    fold_scores[task] = score(metric, te.labels, model->predict(te.features));
  });
  for (std::size_t k = 0; k < m; ++k) {
    double s = 0.0;
    for (std::size_t f = 0; f < folds; ++f) s += fold_scores[k * folds + f];
    res.scores[k] = s / static_cast<double>(folds);
  }
  res.auc = keep_absolute_auc(res.scores);
  return res;
}

// ---------------------------------------------------------------------------

enum class TieRule {
  average,  // tied entries share the mean of their positions (1.5, 1.5, 3)
  min       // tied entries share the best position (1, 1, 3)
};

struct RankOptions {
  bool higher_is_better = true;
  TieRule ties = TieRule::average;
  double tolerance = 1e-9;
};

struct RankingTable {
  std::vector<std::string> datasets;
  std::vector<std::string> methods;
  std::vector<std::vector<double>> values;  // [dataset][method]
  std::vector<std::vector<double>> ranks;   // [dataset][method], 1 = best
  std::vector<double> mean_rank;            // per method
  std::vector<double> stddev;               // per method, sample (n - 1)
};

inline std::vector<double> rank_values(std::span<const double> values, const RankOptions& opt = {}) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto before = [&](std::size_t a, std::size_t b) {
    return opt.higher_is_better ? values[a] > values[b] : values[a] < values[b];
  };
  std::stable_sort(idx.begin(), idx.end(), before);
  std::vector<double> ranks(n, 0.0);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && std::abs(values[idx[end]] - values[idx[start]]) <= opt.tolerance) ++end;
    const double r = opt.ties == TieRule::average ? (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0
                                                  : static_cast<double>(start + 1);
    for (std::size_t i = start; i < end; ++i) ranks[idx[i]] = r;
    start = end;
  }
  return ranks;
}

inline RankingTable ranking_table(std::vector<std::string> datasets, std::vector<std::string> methods,
                                  std::vector<std::vector<double>> values, const RankOptions& opt = {}) {
  if (values.size() != datasets.size()) throw Error("ranking: dataset count does not match value rows");
  if (datasets.empty() || methods.empty()) throw Error("ranking: empty table");
  for (const auto& row : values) {
    if (row.size() != methods.size()) throw Error("ranking: ragged input (every method needs every dataset)");
  }
  RankingTable t{std::move(datasets), std::move(methods), std::move(values), {}, {}, {}};
  for (const auto& row : t.values) t.ranks.push_back(rank_values(row, opt));
  const auto d = static_cast<double>(t.datasets.size());
  for (std::size_t m = 0; m < t.methods.size(); ++m) {
    double sum = 0.0;
    for (const auto& row : t.ranks) sum += row[m];
    const double mean = sum / d;
    double ss = 0.0;
    for (const auto& row : t.ranks) ss += (row[m] - mean) * (row[m] - mean);
    t.mean_rank.push_back(mean);
    t.stddev.push_back(t.datasets.size() > 1 ? std::sqrt(ss / (d - 1.0)) : 0.0);
  }
  return t;
}

// ---------------------------------------------------------------------------

struct SweepGrid {
  std::vector<std::size_t> n_particles{10};
  std::vector<std::size_t> iterations{30};
  std::vector<std::pair<double, double>> velocity_bounds{{-1.0, 1.0}};

  std::size_t size() const noexcept { return n_particles.size() * iterations.size() * velocity_bounds.size(); }
};

struct SweepSettings {
  SwarmConfig base;
  std::size_t folds = 5;
  std::size_t repeats = 1;
  double test_fraction = 0.3;
  double epsilon = 0.25;
  Metric metric = Metric::accuracy;
  unsigned threads = 0;
};

struct SweepPoint {
  SwarmConfig config;
  std::vector<double> aucs;  // one per repeat
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Swarm ordering from one explanation run: split, train on the training
/// part, explain every class on the test part, average importances.
inline FeatureOrdering swarm_ordering(const Dataset& ds, ModelKind kind, const Hyperparameters& hp,
                                      const SwarmConfig& config, const SweepSettings& s, std::uint64_t seed) {
  const auto split = stratified_split(ds, s.test_fraction, seed);
  const auto model = train(kind, split.train, hp, seed);
  std::vector<ClassExplanation> classes;
  ExplainOptions opts;
  opts.threads = s.threads;
  for (std::size_t c = 0; c < ds.n_classes(); ++c) {
    classes.push_back(explain_class(model, split.test, static_cast<ClassId>(c), config, s.epsilon, s.metric,
                                    derive_seed(seed, c), opts));
  }
  return swarm_global_ordering(classes);
}

/// One full pipeline run: swarm ordering, then Keep Absolute on all of `ds`.
inline KeepAbsoluteResult swarm_keep_absolute(const Dataset& ds, ModelKind kind, const Hyperparameters& hp,
                                              const SwarmConfig& config, const SweepSettings& s,
                                              std::uint64_t seed) {
  return keep_absolute(ds, kind, hp, swarm_ordering(ds, kind, hp, config, s, seed), s.folds, s.metric, seed,
                       s.threads ? s.threads : worker_threads());
}

/// Keep Absolute AUC of the swarm ordering over a grid of swarm settings,
/// each point repeated with seeds derived from `seed`.
inline std::vector<SweepPoint> parameter_sweep(const Dataset& ds, ModelKind kind, const Hyperparameters& hp,
                                               const SweepGrid& grid, const SweepSettings& s, std::uint64_t seed) {
  if (grid.size() == 0) throw Error("parameter sweep: empty grid");
  if (s.repeats < 1) throw Error("parameter sweep: repeats must be >= 1");
  std::vector<SweepPoint> points;
  for (auto np : grid.n_particles) {
    for (auto it : grid.iterations) {
      for (auto [vlo, vhi] : grid.velocity_bounds) {
        SweepPoint pt;
        pt.config = s.base;
        pt.config.n_particles = np;
        pt.config.iterations = it;
        pt.config.v_min = vlo;
        pt.config.v_max = vhi;
        pt.config.validate();
        for (std::size_t r = 0; r < s.repeats; ++r) {
          pt.aucs.push_back(swarm_keep_absolute(ds, kind, hp, pt.config, s, derive_seed(seed, r)).auc);
        }
        pt.mean = std::accumulate(pt.aucs.begin(), pt.aucs.end(), 0.0) / static_cast<double>(pt.aucs.size());
        pt.min = *std::min_element(pt.aucs.begin(), pt.aucs.end());
        pt.max = *std::max_element(pt.aucs.begin(), pt.aucs.end());
        points.push_back(std::move(pt));
      }
    }
  }
  return points;
}

// ---------------------------------------------------------------------------
// JSON interchange

inline nlohmann::json to_json(const FeatureOrdering& o) { return {{"method", o.method_name}, {"order", o.order}}; }

inline FeatureOrdering ordering_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("method") || !j.contains("order") || !j["method"].is_string() ||
      !j["order"].is_array()) {
    throw Error(R"(ordering JSON must look like {"method": str, "order": [int, ...]})");
  }
  FeatureOrdering o;
  o.method_name = j["method"].get<std::string>();
  for (const auto& v : j["order"]) {
    if (!v.is_number_unsigned()) throw Error("ordering JSON: order entries must be non-negative integers");
    o.order.push_back(v.get<std::size_t>());
  }
  return o;
}

inline FeatureOrdering load_ordering(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ordering file '" + path + "'");
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error("ordering file '" + path + "' is not valid JSON");
  return ordering_from_json(j);
}

inline nlohmann::json to_json(const KeepAbsoluteResult& r) {
  return {{"method", r.method_name}, {"scores", r.scores},          {"auc", r.auc},
          {"folds", r.folds},        {"metric", to_string(r.metric)}, {"order", r.order},
          {"auc_definition", "trapezoid over k=1..m divided by (m-1)"}};
}

}  // namespace swarmxai
