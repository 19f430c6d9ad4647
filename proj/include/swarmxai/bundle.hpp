#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarmxai/dataset.hpp"
#include "swarmxai/explainer.hpp"
#include "swarmxai/similarity.hpp"

namespace swarmxai {

inline constexpr int kSchemaMajor = 1;
inline constexpr int kSchemaMinor = 1;
inline const std::string kSchemaVersion = "1.1";

struct DatasetMeta {
  std::string source;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::size_t n_rows = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<std::size_t> test_class_counts;
  PreprocessReport preprocessing;
};

struct ModelMeta {
  std::string kind;
  Hyperparameters hyperparameters;
  std::vector<std::string> command;  // remote models only
  double baseline_accuracy = 0.0;
  double baseline_macro_f1 = 0.0;
};

struct RunConfig {
  SwarmConfig swarm;
  double epsilon = 0.25;
  double gamma = 0.2;
  std::uint64_t seed = 0;
  Metric metric = Metric::accuracy;
  double test_fraction = 0.3;
  std::string sigma_source = "personal_bests";
  std::string window_rows = "all";
  std::string similarity_mode = "class_rows";
  std::size_t histogram_bins = 20;
  std::string histogram_rows = "test";
  bool traces = true;
};

struct SummaryWindow {
  double w_lo = 0.0;
  double w_hi = 0.0;
  std::optional<double> mean_score;  // nullopt: no swarm weight fell inside
  std::size_t n_weights = 0;
  friend bool operator==(const SummaryWindow&, const SummaryWindow&) = default;
};

/// Mean score per gamma-wide weight window for one (class, feature) pair.
struct SummaryGrid {
  ClassId class_id = 0;
  std::size_t feature_index = 0;
  double gamma = 0.2;
  std::vector<SummaryWindow> windows;
  double best_weight = 1.0;
  double baseline_weight = 1.0;
  friend bool operator==(const SummaryGrid&, const SummaryGrid&) = default;
};

/// Self-contained record of one explanation run.
struct ExplanationBundle {
  std::string schema_version = kSchemaVersion;
  DatasetMeta dataset;
  ModelMeta model;
  RunConfig config;
  std::vector<ClassExplanation> classes;
  std::vector<std::vector<SummaryGrid>> summaries;  // aligned with classes[i].features[j]
  std::vector<Histogram> histograms;
  std::optional<SimilarityMatrix> similarity;  // present when every class was explained
  nlohmann::json timing = nlohmann::json::object();
  nlohmann::json unknown = nlohmann::json::object();  // fields from newer writers, kept verbatim
};

/// Summary grid from the trace: each window averages score = 1 - fitness
/// over the trace weights inside it.
inline SummaryGrid summary_grid(const FeatureExplanation& fx, double gamma, double w_min, double w_max) {
  SummaryGrid g;
  g.class_id = fx.class_id;
  g.feature_index = fx.feature_index;
  g.gamma = gamma;
  g.best_weight = fx.best_weight;
  const std::size_t n = window_count(w_min, w_max, gamma);
  g.windows.resize(n);
  std::vector<double> sums(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    g.windows[i].w_lo = w_min + gamma * static_cast<double>(i);
    g.windows[i].w_hi = g.windows[i].w_lo + gamma;
  }
  for (const auto& rec : fx.trace.records) {
    const std::size_t i = window_index(rec.weight, w_min, gamma, n);
    sums[i] += 1.0 - rec.fitness;
    ++g.windows[i].n_weights;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (g.windows[i].n_weights > 0) g.windows[i].mean_score = sums[i] / static_cast<double>(g.windows[i].n_weights);
  }
  return g;
}

struct BundleInputs {
  DatasetMeta dataset;
  ModelMeta model;
  RunConfig config;
  std::vector<ClassExplanation> classes;
  std::vector<Histogram> histograms;
  std::optional<SimilarityMatrix> similarity;
  nlohmann::json timing = nlohmann::json::object();
};

inline ExplanationBundle build_bundle(BundleInputs in) {
  if (in.classes.empty()) throw Error("bundle: no class explanations");
  const std::size_t m = in.dataset.feature_names.size();
  const std::size_t k = in.dataset.class_names.size();
  for (const auto& ce : in.classes) {
    if (ce.class_id < 0 || static_cast<std::size_t>(ce.class_id) >= k) throw Error("bundle: class id out of range");
    if (ce.features.size() != m) {
      throw Error("bundle: class " + std::to_string(ce.class_id) + " explains " + std::to_string(ce.features.size()) +
                  " of " + std::to_string(m) + " features");
    }
  }
  if (in.similarity && in.similarity->n_classes != k) throw Error("bundle: similarity matrix has wrong size");

  ExplanationBundle b;
  b.dataset = std::move(in.dataset);
  b.model = std::move(in.model);
  b.config = std::move(in.config);
  b.histograms = std::move(in.histograms);
  b.similarity = std::move(in.similarity);
  b.timing = std::move(in.timing);
  for (const auto& ce : in.classes) {
    std::vector<SummaryGrid> grids;
    for (const auto& fx : ce.features) {
      grids.push_back(summary_grid(fx, b.config.gamma, b.config.swarm.w_min, b.config.swarm.w_max));
    }
    b.summaries.push_back(std::move(grids));
  }
  b.classes = std::move(in.classes);
  if (!b.config.traces) {
    for (auto& ce : b.classes) {
      for (auto& fx : ce.features) {
        fx.trace.records.clear();
        fx.prediction_counts.clear();
        fx.class_prediction_counts.clear();
      }
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Serialisation

namespace detail {

using nlohmann::json;

// 64-bit FNV-1a; an integrity check against accidental edits, not tampering.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline json opt_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json swarm_to_json(const SwarmConfig& c) {
  return {{"n_particles", c.n_particles}, {"iterations", c.iterations}, {"v_min", c.v_min},
          {"v_max", c.v_max},             {"chi", c.chi},               {"phi_max", c.phi_max},
          {"k", c.k},                     {"w_min", c.w_min},           {"w_max", c.w_max}};
}

inline SwarmConfig swarm_from_json(const json& j) {
  SwarmConfig c;
  c.n_particles = j.value("n_particles", c.n_particles);
  c.iterations = j.value("iterations", c.iterations);
  c.v_min = j.value("v_min", c.v_min);
  c.v_max = j.value("v_max", c.v_max);
  c.chi = j.value("chi", c.chi);
  c.phi_max = j.value("phi_max", c.phi_max);
  c.k = j.value("k", c.k);
  c.w_min = j.value("w_min", c.w_min);
  c.w_max = j.value("w_max", c.w_max);
  return c;
}

inline json feature_to_json(const FeatureExplanation& fx, const SummaryGrid& grid, std::size_t n_classes) {
  json trace = {{"iteration", json::array()}, {"particle", json::array()},
                {"weight", json::array()},    {"fitness", json::array()}};
  for (const auto& r : fx.trace.records) {
    trace["iteration"].push_back(r.iteration);
    trace["particle"].push_back(r.particle);
    trace["weight"].push_back(r.weight);
    trace["fitness"].push_back(r.fitness);
  }
  json pb = {{"weight", json::array()}, {"fitness", json::array()}};
  for (const auto& p : fx.trace.personal_bests) {
    pb["weight"].push_back(p.weight);
    pb["fitness"].push_back(p.fitness);
  }
  auto flatten = [n_classes](const std::vector<std::vector<std::size_t>>& rows) {
    json out = json::array();
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < n_classes; ++c) out.push_back(row[c]);
    }
    return out;
  };
  json win = {{"w_lo", json::array()},
              {"w_hi", json::array()},
              {"n_weights", json::array()},
              {"mean_score", json::array()},
              {"class_proportions", json::array()}};
  for (const auto& w : fx.confusion_windows) {
    win["w_lo"].push_back(w.w_lo);
    win["w_hi"].push_back(w.w_hi);
    win["n_weights"].push_back(w.n_weights);
    win["mean_score"].push_back(w.empty() ? json(nullptr) : json(w.mean_score));
    win["class_proportions"].push_back(w.empty() ? json(nullptr) : json(w.class_proportions));
  }
  json sum = {{"gamma", grid.gamma},
              {"best_weight", grid.best_weight},
              {"baseline_weight", grid.baseline_weight},
              {"w_lo", json::array()},
              {"w_hi", json::array()},
              {"n_weights", json::array()},
              {"mean_score", json::array()}};
  for (const auto& w : grid.windows) {
    sum["w_lo"].push_back(w.w_lo);
    sum["w_hi"].push_back(w.w_hi);
    sum["n_weights"].push_back(w.n_weights);
    sum["mean_score"].push_back(opt_number(w.mean_score));
  }
  return {{"feature_index", fx.feature_index},
          {"sigma_w", fx.sigma_w},
          {"sigma_s", fx.sigma_s},
          {"importance", fx.importance},
          {"best_weight", fx.best_weight},
          {"best_fitness", fx.best_fitness},
          {"baseline_score", fx.baseline_score},
          {"seed", fx.seed},
          {"model_calls", fx.model_calls},
          {"baseline_fitness", fx.trace.baseline_fitness},
          {"trace", std::move(trace)},
          {"personal_bests", std::move(pb)},
          {"final_positions", fx.trace.final_positions},
          {"prediction_counts", flatten(fx.prediction_counts)},
          {"class_prediction_counts", flatten(fx.class_prediction_counts)},
          {"confusion_windows", std::move(win)},
          {"summary", std::move(sum)}};
}

template <typename T>
std::vector<T> vec(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return {};
  return j[key].get<std::vector<T>>();
}

inline std::pair<FeatureExplanation, SummaryGrid> feature_from_json(const json& j, ClassId class_id,
                                                                    std::size_t n_classes) {
  FeatureExplanation fx;
  fx.class_id = class_id;
  fx.feature_index = j.at("feature_index").get<std::size_t>();
  fx.sigma_w = j.at("sigma_w").get<double>();
  fx.sigma_s = j.at("sigma_s").get<double>();
  fx.importance = j.at("importance").get<double>();
  fx.best_weight = j.at("best_weight").get<double>();
  fx.best_fitness = j.at("best_fitness").get<double>();
  fx.baseline_score = j.value("baseline_score", 0.0);
  fx.seed = j.value("seed", std::uint64_t{0});
  fx.model_calls = j.value("model_calls", std::size_t{0});
  fx.trace.baseline_fitness = j.value("baseline_fitness", 1.0 - fx.baseline_score);

  if (j.contains("trace")) {
    const auto& t = j["trace"];
    const auto it = vec<std::size_t>(t, "iteration");
    const auto pa = vec<std::size_t>(t, "particle");
    const auto we = vec<double>(t, "weight");
    const auto fi = vec<double>(t, "fitness");
    if (pa.size() != it.size() || we.size() != it.size() || fi.size() != it.size()) {
      throw Error("bundle: trace columns differ in length");
    }
    for (std::size_t r = 0; r < it.size(); ++r) fx.trace.records.push_back({it[r], pa[r], we[r], fi[r]});
  }
  if (j.contains("personal_bests")) {
    const auto w = vec<double>(j["personal_bests"], "weight");
    const auto f = vec<double>(j["personal_bests"], "fitness");
    if (w.size() != f.size()) throw Error("bundle: personal best columns differ in length");
    for (std::size_t p = 0; p < w.size(); ++p) fx.trace.personal_bests.push_back({f[p], w[p]});
  }
  fx.trace.final_positions = vec<double>(j, "final_positions");

  auto unflatten = [&](const char* key, std::vector<std::vector<std::size_t>>& out) {
    const auto flat = vec<std::size_t>(j, key);
    if (flat.empty()) return;
    if (flat.size() != fx.trace.records.size() * n_classes) throw Error(std::string("bundle: ") + key + " size mismatch");
    for (std::size_t r = 0; r < fx.trace.records.size(); ++r) {
      out.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(r * n_classes),
                       flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_classes));
    }
  };
  unflatten("prediction_counts", fx.prediction_counts);
  unflatten("class_prediction_counts", fx.class_prediction_counts);
  if (j.contains("confusion_windows")) {
    const auto& w = j["confusion_windows"];
    const auto lo = vec<double>(w, "w_lo");
    const auto hi = vec<double>(w, "w_hi");
    const auto nw = vec<std::size_t>(w, "n_weights");
    const auto& ms = w.at("mean_score");
    const auto& cp = w.at("class_proportions");
    for (std::size_t i = 0; i < lo.size(); ++i) {
      ConfusionWindow cw;
      cw.w_lo = lo.at(i);
      cw.w_hi = hi.at(i);
      cw.n_weights = nw.at(i);
      if (!ms.at(i).is_null()) cw.mean_score = ms[i].get<double>();
      if (!cp.at(i).is_null()) cw.class_proportions = cp[i].get<std::vector<double>>();
      fx.confusion_windows.push_back(std::move(cw));
    }
  }

  SummaryGrid g;
  g.class_id = class_id;
  g.feature_index = fx.feature_index;
  if (j.contains("summary")) {
    const auto& s = j["summary"];
    g.gamma = s.value("gamma", g.gamma);
    g.best_weight = s.value("best_weight", fx.best_weight);
    g.baseline_weight = s.value("baseline_weight", 1.0);
    const auto lo = vec<double>(s, "w_lo");
    const auto hi = vec<double>(s, "w_hi");
    const auto nw = vec<std::size_t>(s, "n_weights");
    const auto& ms = s.at("mean_score");
    for (std::size_t i = 0; i < lo.size(); ++i) {
      SummaryWindow sw{lo[i], hi.at(i), std::nullopt, nw.at(i)};
      if (!ms.at(i).is_null()) sw.mean_score = ms[i].get<double>();
      g.windows.push_back(sw);
    }
  }
  return {std::move(fx), std::move(g)};
}

// Recursively lays `top` over `base`, merging objects and replacing anything else.
inline void overlay(json& base, const json& top) {
  if (base.is_object() && top.is_object()) {
    for (auto it = top.begin(); it != top.end(); ++it) overlay(base[it.key()], it.value());
  } else {
    base = top;
  }
}

inline std::pair<int, int> parse_version(const std::string& v) {
  int major = 0;
  int minor = 0;
  if (std::sscanf(v.c_str(), "%d.%d", &major, &minor) != 2) throw Error("bundle: bad schema_version '" + v + "'");
  return {major, minor};
}

}  // namespace detail

/// JSON document without the checksum field. Object keys are sorted, so the
/// serialisation is canonical.
inline nlohmann::json to_json(const ExplanationBundle& b) {
  using nlohmann::json;
  json hp = json::object();
  for (const auto& [key, v] : b.model.hyperparameters) hp[key] = v;

  json classes = json::array();
  for (std::size_t i = 0; i < b.classes.size(); ++i) {
    const auto& ce = b.classes[i];
    json feats = json::array();
    for (std::size_t f = 0; f < ce.features.size(); ++f) {
      feats.push_back(detail::feature_to_json(ce.features[f], b.summaries.at(i).at(f), b.dataset.class_names.size()));
    }
    classes.push_back({{"class_id", ce.class_id}, {"seed", ce.seed}, {"features", std::move(feats)}});
  }

  json hists = json::array();
  for (const auto& h : b.histograms) {
    hists.push_back({{"feature_index", h.feature_index},
                     {"class_id", h.class_id ? json(*h.class_id) : json("all")},
                     {"bin_edges", h.bin_edges},
                     {"counts", h.counts}});
  }

  json sim = nullptr;
  if (b.similarity) {
    json rows = json::array();
    for (std::size_t a = 0; a < b.similarity->n_classes; ++a) {
      json row = json::array();
      for (std::size_t c = 0; c < b.similarity->n_classes; ++c) row.push_back((*b.similarity)(a, c));
      rows.push_back(std::move(row));
    }
    sim = {{"n_classes", b.similarity->n_classes}, {"values", std::move(rows)}, {"mode", b.config.similarity_mode}};
  }

  json doc = b.unknown.is_object() ? b.unknown : json::object();
  detail::overlay(doc, json{
      {"schema_version", b.schema_version},
      {"dataset",
       {{"source", b.dataset.source},
        {"feature_names", b.dataset.feature_names},
        {"class_names", b.dataset.class_names},
        {"n_rows", b.dataset.n_rows},
        {"n_train", b.dataset.n_train},
        {"n_test", b.dataset.n_test},
        {"test_class_counts", b.dataset.test_class_counts},
        {"preprocessing",
         {{"epsilon", b.dataset.preprocessing.epsilon},
          {"shifted_features", b.dataset.preprocessing.shifted_features}}}}},
      {"model",
       {{"kind", b.model.kind},
        {"hyperparameters", std::move(hp)},
        {"command", b.model.command},
        {"baseline_scores", {{"accuracy", b.model.baseline_accuracy}, {"macro_f1", b.model.baseline_macro_f1}}}}},
      {"config",
       {{"swarm", detail::swarm_to_json(b.config.swarm)},
        {"epsilon", b.config.epsilon},
        {"gamma", b.config.gamma},
        {"seed", b.config.seed},
        {"metric", to_string(b.config.metric)},
        {"test_fraction", b.config.test_fraction},
        {"sigma_source", b.config.sigma_source},
        {"window_rows", b.config.window_rows},
        {"similarity_mode", b.config.similarity_mode},
        {"histogram_bins", b.config.histogram_bins},
        {"histogram_rows", b.config.histogram_rows},
        {"traces", b.config.traces}}},
      {"classes", std::move(classes)},
      {"histograms", std::move(hists)},
      {"similarity", std::move(sim)},
      {"timing", b.timing}});
  doc.erase("checksum");
  return doc;
}

/// Serialised bundle bytes: compact canonical JSON plus checksum and newline.
inline std::string dump_bundle(const ExplanationBundle& b) {
  auto doc = to_json(b);
  const std::string body = doc.dump();
  doc["checksum"] = "fnv1a64:" + detail::fnv1a_hex(body);
  return doc.dump() + "\n";
}

inline void write_bundle(const ExplanationBundle& b, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write bundle '" + path + "'");
  out << dump_bundle(b);
  if (!out) throw Error("failed writing bundle '" + path + "'");
}

/// Parses a bundle. Older minor versions read with defaults for newer
/// fields; a different major version is rejected. Checksum mismatches are
/// reported through `warnings`, not thrown.
inline ExplanationBundle parse_bundle(const std::string& text, std::vector<std::string>& warnings) {
  using nlohmann::json;
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error("bundle: malformed JSON");

  ExplanationBundle b;
  b.schema_version = doc.value("schema_version", std::string{});
  const auto [major, minor] = detail::parse_version(b.schema_version);
  if (major != kSchemaMajor) {
    throw Error("bundle: unsupported schema version " + b.schema_version + " (this reader handles " +
                std::to_string(kSchemaMajor) + ".x)");
  }
  if (minor > kSchemaMinor) {
    warnings.push_back("bundle schema " + b.schema_version + " is newer than " + kSchemaVersion +
                       "; unknown fields are preserved but not interpreted");
  }

  if (doc.contains("checksum")) {
    const std::string stored = doc["checksum"].is_string() ? doc["checksum"].get<std::string>() : "";
    json body = doc;
    body.erase("checksum");
    const std::string expected = "fnv1a64:" + detail::fnv1a_hex(body.dump());
    if (stored != expected) warnings.push_back("bundle integrity warning: checksum mismatch");
  } else {
    warnings.push_back("bundle integrity warning: no checksum present");
  }

  try {
    const auto& ds = doc.at("dataset");
    b.dataset.source = ds.value("source", std::string{});
    b.dataset.feature_names = ds.at("feature_names").get<std::vector<std::string>>();
    b.dataset.class_names = ds.at("class_names").get<std::vector<std::string>>();
    b.dataset.n_rows = ds.value("n_rows", std::size_t{0});
    b.dataset.n_train = ds.value("n_train", std::size_t{0});
    b.dataset.n_test = ds.value("n_test", std::size_t{0});
    b.dataset.test_class_counts = detail::vec<std::size_t>(ds, "test_class_counts");
    if (ds.contains("preprocessing")) {
      b.dataset.preprocessing.epsilon = ds["preprocessing"].value("epsilon", 1.0);
      b.dataset.preprocessing.shifted_features = detail::vec<std::size_t>(ds["preprocessing"], "shifted_features");
    }

    const auto& md = doc.at("model");
    b.model.kind = md.value("kind", std::string{});
    if (md.contains("hyperparameters")) {
      for (auto it = md["hyperparameters"].begin(); it != md["hyperparameters"].end(); ++it) {
        b.model.hyperparameters[it.key()] = it.value().get<double>();
      }
    }
    b.model.command = detail::vec<std::string>(md, "command");
    if (md.contains("baseline_scores")) {
      b.model.baseline_accuracy = md["baseline_scores"].value("accuracy", 0.0);
      b.model.baseline_macro_f1 = md["baseline_scores"].value("macro_f1", 0.0);
    }

    const auto& cf = doc.at("config");
    b.config.swarm = detail::swarm_from_json(cf.value("swarm", json::object()));
    b.config.epsilon = cf.value("epsilon", b.config.epsilon);
    b.config.gamma = cf.value("gamma", b.config.gamma);
    b.config.seed = cf.value("seed", b.config.seed);
    b.config.metric = parse_metric(cf.value("metric", std::string("accuracy")));
    b.config.test_fraction = cf.value("test_fraction", b.config.test_fraction);
    // introduced in 1.1
    b.config.sigma_source = cf.value("sigma_source", b.config.sigma_source);
    b.config.window_rows = cf.value("window_rows", b.config.window_rows);
    b.config.similarity_mode = cf.value("similarity_mode", b.config.similarity_mode);
    b.config.histogram_bins = cf.value("histogram_bins", b.config.histogram_bins);
    b.config.histogram_rows = cf.value("histogram_rows", b.config.histogram_rows);
    b.config.traces = cf.value("traces", b.config.traces);

    const std::size_t k = b.dataset.class_names.size();
    for (const auto& cj : doc.at("classes")) {
      ClassExplanation ce;
      ce.class_id = cj.at("class_id").get<ClassId>();
      ce.seed = cj.value("seed", std::uint64_t{0});
      std::vector<SummaryGrid> grids;
      for (const auto& fj : cj.at("features")) {
        auto [fx, grid] = detail::feature_from_json(fj, ce.class_id, k);
        if (grid.windows.empty()) grid = summary_grid(fx, b.config.gamma, b.config.swarm.w_min, b.config.swarm.w_max);
        ce.features.push_back(std::move(fx));
        grids.push_back(std::move(grid));
      }
      b.classes.push_back(std::move(ce));
      b.summaries.push_back(std::move(grids));
    }

    for (const auto& hj : doc.value("histograms", json::array())) {
      Histogram h;
      h.feature_index = hj.at("feature_index").get<std::size_t>();
      if (hj.contains("class_id") && hj["class_id"].is_number_integer()) h.class_id = hj["class_id"].get<ClassId>();
      h.bin_edges = hj.at("bin_edges").get<std::vector<double>>();
      h.counts = hj.at("counts").get<std::vector<std::size_t>>();
      b.histograms.push_back(std::move(h));
    }

    if (doc.contains("similarity") && doc["similarity"].is_object()) {
      const auto& sj = doc["similarity"];
      SimilarityMatrix sm;
      sm.n_classes = sj.at("n_classes").get<std::size_t>();
      for (const auto& row : sj.at("values")) {
        for (const auto& v : row) sm.values.push_back(v.get<double>());
      }
      if (sm.values.size() != sm.n_classes * sm.n_classes) throw Error("bundle: similarity matrix size mismatch");
      b.similarity = std::move(sm);
    }
    b.timing = doc.value("timing", json::object());
  } catch (const json::exception& e) {
    throw Error(std::string("bundle: malformed content: ") + e.what());
  }

  static const char* const kKnown[] = {"schema_version", "checksum",   "dataset",    "model", "config",
                                       "classes",        "histograms", "similarity", "timing"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (std::find(std::begin(kKnown), std::end(kKnown), it.key()) == std::end(kKnown)) {
      b.unknown[it.key()] = it.value();
    }
  }
  return b;
}

inline ExplanationBundle read_bundle(const std::string& path, std::vector<std::string>& warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open bundle '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bundle(ss.str(), warnings);
}

/// Reads a bundle and prints any warnings to stderr.
inline ExplanationBundle read_bundle(const std::string& path) {
  std::vector<std::string> warnings;
  auto b = read_bundle(path, warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << path << ": " << w << '\n';
  return b;
}

/// Re-derives best weights, sigmas, importances, confusion windows, summary
/// grids and the similarity matrix from the embedded traces and compares them
/// bit-for-bit with the stored values. Returns the mismatches found.
inline std::vector<std::string> verify_bundle(const ExplanationBundle& b) {
  std::vector<std::string> problems;
  if (!b.config.traces) return problems;
  const std::size_t k = b.dataset.class_names.size();
  const std::size_t rows = b.dataset.n_test;
  auto where = [](const FeatureExplanation& fx) {
    return "class " + std::to_string(fx.class_id) + " feature " + std::to_string(fx.feature_index) + ": ";
  };
  for (std::size_t i = 0; i < b.classes.size(); ++i) {
    const auto& ce = b.classes[i];
    std::vector<SigmaPair> sig;
    for (std::size_t f = 0; f < ce.features.size(); ++f) {
      const auto& fx = ce.features[f];
      const Candidate best = best_weight(fx.trace);
      if (best.weight != fx.best_weight || best.fitness != fx.best_fitness) {
        problems.push_back(where(fx) + "best weight does not match trace");
      }
      if (b.config.sigma_source == "personal_bests") {
        const SigmaPair s = sigma_from_personal_bests(fx.trace);
        if (s.sigma_w != fx.sigma_w || s.sigma_s != fx.sigma_s) {
          problems.push_back(where(fx) + "sigma values do not match personal bests");
        }
      }
      sig.push_back({fx.sigma_w, fx.sigma_s});
      if (b.config.window_rows == "all") {
        std::vector<double> w;
        std::vector<double> s;
        for (const auto& r : fx.trace.records) {
          w.push_back(r.weight);
          s.push_back(1.0 - r.fitness);
        }
        const auto windows = confusion_windows_from_counts(w, s, fx.prediction_counts, rows, k, b.config.epsilon,
                                                           b.config.swarm.w_min, b.config.swarm.w_max);
        if (windows != fx.confusion_windows) problems.push_back(where(fx) + "confusion windows do not match trace");
      }
      if (summary_grid(fx, b.config.gamma, b.config.swarm.w_min, b.config.swarm.w_max) != b.summaries.at(i).at(f)) {
        problems.push_back(where(fx) + "summary grid does not match trace");
      }
    }
    const auto imp = importance_scores(sig, b.config.swarm.w_max);
    for (std::size_t f = 0; f < ce.features.size(); ++f) {
      if (imp[f] != ce.features[f].importance) problems.push_back(where(ce.features[f]) + "importance mismatch");
    }
  }
  if (b.similarity && b.config.similarity_mode == "class_rows") {
    const auto sm = similarity_matrix(b.classes, k, b.config.swarm.w_max);
    if (sm != *b.similarity) problems.push_back("similarity matrix does not match traces");
  }
  return problems;
}

}  // namespace swarmxai
