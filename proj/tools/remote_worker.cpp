// Test worker speaking the remote-model line protocol on stdin/stdout.
//
//   remote_worker model <csv> [kind]         trains a built-in model on the CSV
//   remote_worker constant <K> <M> <label>   always predicts <label>
//   remote_worker bad-length <K> <M>         answers with one label too few
//   remote_worker silent <K> <M>             never answers predict requests
//   remote_worker exit <K> <M>               exits after the handshake

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "swarmxai/dataset.hpp"
#include "swarmxai/models.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: remote_worker <mode> ...\n";
    return 1;
  }
  const std::string mode = argv[1];
  std::size_t k = 0;
  std::size_t m = 0;
  int constant = 0;
  swarmxai::TrainedModel model;
  try {
    if (mode == "model") {
      if (argc < 3) throw swarmxai::Error("model mode needs a CSV path");
      const auto ds = swarmxai::load_csv(argv[2]);
      const auto kind = swarmxai::parse_model_kind(argc > 3 ? argv[3] : "tree");
      model = swarmxai::train(kind, ds, {}, 0);
      k = ds.n_classes();
      m = ds.n_features();
    } else {
      if (argc < 4) throw swarmxai::Error("mode needs <K> <M>");
      k = std::stoul(argv[2]);
      m = std::stoul(argv[3]);
      if (mode == "constant") constant = argc > 4 ? std::stoi(argv[4]) : 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "remote_worker: " << e.what() << '\n';
    return 2;
  }

  std::cout << "# remote_worker ready\n" << std::flush;
  std::string line;
  while (std::getline(std::cin, line)) {
    const json req = json::parse(line, nullptr, false);
    if (req.is_discarded()) {
      std::cerr << "remote_worker: bad request\n";
      return 3;
    }
    if (req.value("op", "") == "handshake") {
      std::cout << json{{"n_classes", k}, {"m_features", m}}.dump() << '\n' << std::flush;
      if (mode == "exit") return 0;
      continue;
    }
    const auto& X = req.at("X");
    std::vector<int> y;
    if (mode == "model") {
      std::vector<std::vector<double>> rows = X.get<std::vector<std::vector<double>>>();
      y = model->predict(swarmxai::Matrix::from_rows(rows));
    } else if (mode == "constant") {
      y.assign(X.size(), constant);
    } else if (mode == "bad-length") {
      y.assign(X.empty() ? 0 : X.size() - 1, 0);
    } else if (mode == "silent") {
      std::this_thread::sleep_for(std::chrono::hours(1));
    }
    std::cout << json{{"id", req.at("id")}, {"y", y}}.dump() << '\n' << std::flush;
  }
  return 0;
}
