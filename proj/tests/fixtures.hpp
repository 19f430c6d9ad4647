#pragma once

#include <functional>
#include <string>
#include <vector>

#include "swarmxai/dataset.hpp"
#include "swarmxai/models.hpp"

namespace fixtures {

using namespace swarmxai;

inline std::string data_path(const std::string& name) { return std::string(SWARMXAI_DATA_DIR) + "/" + name; }

inline Dataset iris() { return load_csv(data_path("iris.csv")); }

inline Dataset make(const std::vector<std::vector<double>>& rows, const Labels& labels,
                    std::vector<std::string> class_names = {}) {
  Dataset ds;
  ds.features = Matrix::from_rows(rows);
  ds.labels = labels;
  for (std::size_t f = 0; f < ds.features.cols(); ++f) ds.feature_names.push_back("f" + std::to_string(f));
  if (class_names.empty()) {
    ClassId top = 0;
    for (ClassId y : labels) top = std::max(top, y);
    for (ClassId c = 0; c <= top; ++c) class_names.push_back("c" + std::to_string(c));
  }
  ds.class_names = std::move(class_names);
  return ds;
}

/// Model defined by a per-row function.
class RowModel final : public Model {
 public:
  RowModel(std::size_t k, std::size_t m, std::function<ClassId(std::span<const double>)> fn)
      : Model(k, m), fn_(std::move(fn)) {}
  ModelKind kind() const noexcept override { return ModelKind::remote; }

 protected:
  Labels do_predict(const Matrix& X) const override {
    Labels y;
    for (std::size_t r = 0; r < X.rows(); ++r) y.push_back(fn_(X.row(r)));
    return y;
  }

 private:
  std::function<ClassId(std::span<const double>)> fn_;
};

inline TrainedModel row_model(std::size_t k, std::size_t m, std::function<ClassId(std::span<const double>)> fn) {
  return std::make_shared<RowModel>(k, m, std::move(fn));
}

}  // namespace fixtures
