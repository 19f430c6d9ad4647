#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "swarmxai/common.hpp"
#include "swarmxai/dataset.hpp"

namespace swarmxai {

enum class ModelKind { knn, gaussian_nb, decision_tree, remote };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::knn: return "knn";
    case ModelKind::gaussian_nb: return "gaussian_nb";
    case ModelKind::decision_tree: return "decision_tree";
    case ModelKind::remote: return "remote";
  }
  return "unknown";
}

/// Accepts the canonical names plus the short CLI aliases (nb, tree).
inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "knn") return ModelKind::knn;
  if (s == "nb" || s == "gaussian_nb") return ModelKind::gaussian_nb;
  if (s == "tree" || s == "decision_tree") return ModelKind::decision_tree;
  if (s == "remote") return ModelKind::remote;
  throw Error("unknown model kind '" + s + "'");
}

using Hyperparameters = std::map<std::string, double>;

/// Predict-only classifier. Implementations must be pure in (state, input).
class Model {
 public:
  Model(std::size_t n_classes, std::size_t n_features) : n_classes_(n_classes), n_features_(n_features) {}
  virtual ~Model() = default;

  virtual ModelKind kind() const noexcept = 0;

  /// One label per row of X, each in [0, n_classes()).
  Labels predict(const Matrix& X) const {
    if (X.rows() > 0 && X.cols() != n_features_) {
      throw ModelError("predict: expected " + std::to_string(n_features_) + " columns, got " +
                       std::to_string(X.cols()));
    }
    if (X.rows() == 0) return {};
    return do_predict(X);
  }

  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t n_features() const noexcept { return n_features_; }

 protected:
  virtual Labels do_predict(const Matrix& X) const = 0;

 private:
  std::size_t n_classes_;
  std::size_t n_features_;
};

using TrainedModel = std::shared_ptr<const Model>;

namespace detail {

inline double hyper_or(const Hyperparameters& hp, const std::string& key, double fallback) {
  auto it = hp.find(key);
  return it == hp.end() ? fallback : it->second;
}

inline void reject_unknown(const Hyperparameters& hp, std::initializer_list<const char*> allowed,
                           const char* kind) {
  for (const auto& [key, _] : hp) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ModelError(std::string("unknown hyperparameter '") + key + "' for " + kind);
  }
}

// Lowest index wins ties.
inline ClassId argmax(const std::vector<double>& v) {
  return static_cast<ClassId>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

/// k-nearest neighbours under Euclidean distance. Equal distances prefer the
/// earlier training row; vote ties go to the lower class id.
class KnnModel final : public Model {
 public:
  KnnModel(const Dataset& train, std::size_t k)
      : Model(train.n_classes(), train.n_features()),
        k_(std::min(k, train.n_rows())),
        points_(train.features),
        labels_(train.labels) {}

  ModelKind kind() const noexcept override { return ModelKind::knn; }

 protected:
  Labels do_predict(const Matrix& X) const override {
    Labels out(X.rows());
    std::vector<std::pair<double, std::size_t>> dist(points_.rows());
    std::vector<double> votes(n_classes());
    for (std::size_t r = 0; r < X.rows(); ++r) {
      auto q = X.row(r);
      for (std::size_t i = 0; i < points_.rows(); ++i) {
        auto p = points_.row(i);
        double d = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) d += (q[j] - p[j]) * (q[j] - p[j]);
        dist[i] = {d, i};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
      std::fill(votes.begin(), votes.end(), 0.0);
      for (std::size_t i = 0; i < k_; ++i) votes[static_cast<std::size_t>(labels_[dist[i].second])] += 1.0;
      out[r] = detail::argmax(votes);
    }
    return out;
  }

 private:
  std::size_t k_;
  Matrix points_;
  Labels labels_;
};

/// Gaussian naive Bayes with a per-feature variance floor.
class GaussianNbModel final : public Model {
 public:
  GaussianNbModel(const Dataset& train, double var_floor)
      : Model(train.n_classes(), train.n_features()),
        means_(train.n_classes(), train.n_features()),
        vars_(train.n_classes(), train.n_features()),
        log_priors_(train.n_classes()) {
    const auto counts = train.class_counts();
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
      const auto c = static_cast<std::size_t>(train.labels[r]);
      for (std::size_t j = 0; j < n_features(); ++j) means_(c, j) += train.features(r, j);
    }
    for (std::size_t c = 0; c < n_classes(); ++c) {
      for (std::size_t j = 0; j < n_features(); ++j) {
        means_(c, j) = counts[c] ? means_(c, j) / static_cast<double>(counts[c]) : 0.0;
      }
    }
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
      const auto c = static_cast<std::size_t>(train.labels[r]);
      for (std::size_t j = 0; j < n_features(); ++j) {
        const double d = train.features(r, j) - means_(c, j);
        vars_(c, j) += d * d;
      }
    }
    for (std::size_t c = 0; c < n_classes(); ++c) {
      for (std::size_t j = 0; j < n_features(); ++j) {
        vars_(c, j) = std::max(counts[c] ? vars_(c, j) / static_cast<double>(counts[c]) : 0.0, var_floor);
      }
      log_priors_[c] = counts[c] ? std::log(static_cast<double>(counts[c]) / static_cast<double>(train.n_rows()))
                                 : -std::numeric_limits<double>::infinity();
    }
  }

  ModelKind kind() const noexcept override { return ModelKind::gaussian_nb; }

 protected:
  Labels do_predict(const Matrix& X) const override {
    constexpr double kLog2Pi = 1.8378770664093453;
    Labels out(X.rows());
    std::vector<double> post(n_classes());
    for (std::size_t r = 0; r < X.rows(); ++r) {
      for (std::size_t c = 0; c < n_classes(); ++c) {
        double lp = log_priors_[c];
        for (std::size_t j = 0; j < n_features(); ++j) {
          const double d = X(r, j) - means_(c, j);
          lp -= 0.5 * (kLog2Pi + std::log(vars_(c, j)) + d * d / vars_(c, j));
        }
        post[c] = lp;
      }
      out[r] = detail::argmax(post);
    }
    return out;
  }

 private:
  Matrix means_;
  Matrix vars_;
  std::vector<double> log_priors_;
};

/// CART classifier with Gini impurity. Split search visits features in
/// ascending index and thresholds in ascending value, keeping the first
/// strictly best candidate.
class DecisionTreeModel final : public Model {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    ClassId label = 0;
  };

  DecisionTreeModel(const Dataset& train, std::size_t max_depth, std::size_t min_samples_leaf)
      : Model(train.n_classes(), train.n_features()), min_leaf_(std::max<std::size_t>(1, min_samples_leaf)) {
    std::vector<std::size_t> rows(train.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    build(train, rows, max_depth);
  }

  ModelKind kind() const noexcept override { return ModelKind::decision_tree; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

 protected:
  Labels do_predict(const Matrix& X) const override {
    Labels out(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) {
      int n = 0;
      while (nodes_[n].feature >= 0) {
        n = X(r, static_cast<std::size_t>(nodes_[n].feature)) <= nodes_[n].threshold ? nodes_[n].left
                                                                                       : nodes_[n].right;
      }
      out[r] = nodes_[n].label;
    }
    return out;
  }

 private:
  static double gini(const std::vector<double>& counts, double total) {
    if (total <= 0.0) return 0.0;
    double s = 1.0;
    for (double c : counts) s -= (c / total) * (c / total);
    return s;
  }

  int build(const Dataset& ds, const std::vector<std::size_t>& rows, std::size_t depth_left) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::vector<double> counts(n_classes(), 0.0);
    for (std::size_t r : rows) counts[static_cast<std::size_t>(ds.labels[r])] += 1.0;
    nodes_[id].label = detail::argmax(counts);

    const double n = static_cast<double>(rows.size());
    const double parent = gini(counts, n);
    if (depth_left == 0 || parent <= 0.0 || rows.size() < 2 * min_leaf_) return id;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = parent - 1e-12;
    std::vector<std::size_t> order(rows);
    for (std::size_t f = 0; f < n_features(); ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ds.features(a, f) < ds.features(b, f);
      });
      std::vector<double> left(n_classes(), 0.0);
      std::vector<double> right = counts;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const auto c = static_cast<std::size_t>(ds.labels[order[i]]);
        left[c] += 1.0;
        right[c] -= 1.0;
        const double lo = ds.features(order[i], f);
        const double hi = ds.features(order[i + 1], f);
        if (lo == hi) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        if (i + 1 < min_leaf_ || order.size() - (i + 1) < min_leaf_) continue;
        const double impurity = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> l_rows;
    std::vector<std::size_t> r_rows;
    for (std::size_t r : rows) {
      (ds.features(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? l_rows : r_rows).push_back(r);
    }
    nodes_[id].feature = best_feature;
    nodes_[id].threshold = best_threshold;
    const int l = build(ds, l_rows, depth_left - 1);
    nodes_[id].left = l;
    const int r = build(ds, r_rows, depth_left - 1);
    nodes_[id].right = r;
    return id;
  }

  std::size_t min_leaf_;
  std::vector<Node> nodes_;
};

/// Trains a built-in model. Recognised hyperparameters:
///   knn: k (default 5); gaussian_nb: var_floor (1e-9);
///   decision_tree: max_depth (3), min_samples_leaf (1).
/// The built-ins are deterministic, so `seed` only matters for future
/// randomised learners; it is accepted for a uniform call signature.
inline TrainedModel train(ModelKind kind, const Dataset& train_set, const Hyperparameters& hp,
                          std::uint64_t seed = 0) {
  (void)seed;
  if (train_set.n_rows() == 0) throw ModelError("empty training set");
  std::size_t present = 0;
  for (auto c : train_set.class_counts()) present += c > 0 ? 1 : 0;
  if (present < 2) throw ModelError("training set contains a single class");

  switch (kind) {
    case ModelKind::knn: {
      detail::reject_unknown(hp, {"k"}, "knn");
      const double k = detail::hyper_or(hp, "k", 5);
      if (!(k >= 1) || k != std::floor(k)) throw ModelError("knn: k must be an integer >= 1");
      return std::make_shared<KnnModel>(train_set, static_cast<std::size_t>(k));
    }
    case ModelKind::gaussian_nb: {
      detail::reject_unknown(hp, {"var_floor"}, "gaussian_nb");
      const double floor = detail::hyper_or(hp, "var_floor", 1e-9);
      if (!(floor > 0)) throw ModelError("gaussian_nb: var_floor must be positive");
      return std::make_shared<GaussianNbModel>(train_set, floor);
    }
    case ModelKind::decision_tree: {
      detail::reject_unknown(hp, {"max_depth", "min_samples_leaf"}, "decision_tree");
      const double depth = detail::hyper_or(hp, "max_depth", 3);
      const double leaf = detail::hyper_or(hp, "min_samples_leaf", 1);
      if (!(depth >= 1) || depth != std::floor(depth)) {
        throw ModelError("decision_tree: max_depth must be an integer >= 1");
      }
      if (!(leaf >= 1) || leaf != std::floor(leaf)) {
        throw ModelError("decision_tree: min_samples_leaf must be an integer >= 1");
      }
      return std::make_shared<DecisionTreeModel>(train_set, static_cast<std::size_t>(depth),
                                                 static_cast<std::size_t>(leaf));
    }
    case ModelKind::remote:
      throw ModelError("remote models are attached with RemoteModel, not trained");
  }
  throw ModelError("unknown model kind");
}

// ---------------------------------------------------------------------------
// Metrics

enum class Metric { accuracy, macro_f1 };

inline std::string to_string(Metric m) { return m == Metric::accuracy ? "accuracy" : "macro_f1"; }

inline Metric parse_metric(const std::string& s) {
  if (s == "accuracy") return Metric::accuracy;
  if (s == "f1" || s == "macro_f1") return Metric::macro_f1;
  throw Error("unknown metric '" + s + "'");
}

/// Score in [0, 1]. Macro-F1 averages over classes present in y or y_hat.
inline double score(Metric metric, std::span<const ClassId> y, std::span<const ClassId> y_hat) {
  if (y.size() != y_hat.size()) {
    throw Error("score: length mismatch (" + std::to_string(y.size()) + " vs " +
                std::to_string(y_hat.size()) + ")");
  }
  if (y.empty()) throw Error("score: empty label vectors");

  if (metric == Metric::accuracy) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hits += y[i] == y_hat[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(y.size());
  }

  ClassId k = 0;
  for (std::size_t i = 0; i < y.size(); ++i) k = std::max({k, y[i], y_hat[i]});
  const auto n = static_cast<std::size_t>(k) + 1;
  std::vector<std::size_t> tp(n, 0), fp(n, 0), fn(n, 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == y_hat[i]) {
      ++tp[static_cast<std::size_t>(y[i])];
    } else {
      ++fn[static_cast<std::size_t>(y[i])];
      ++fp[static_cast<std::size_t>(y_hat[i])];
    }
  }
  double sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;
    sum += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
    ++classes;
  }
  return sum / static_cast<double>(classes);
}

}  // namespace swarmxai
