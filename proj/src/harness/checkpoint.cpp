#include "vmr/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "vmr/tensor_io.hpp"

namespace vmr::harness {

namespace fs = std::filesystem;
using nlohmann::json;

void save_checkpoint(const fs::path& dir, const Checkpoint& ckpt) {
  fs::create_directories(dir / "tensors");
  json entries = json::array();
  for (const auto& [name, t] : ckpt.model.named_tensors()) {
    const std::string file = "tensors/" + name + ".vmrt";
    save_tensor(dir / file, t, DType::f64);
    entries.push_back({{"name", name}, {"file", file}, {"shape", t.shape()}, {"dtype", "f64"}});
  }
  const json manifest{{"format", "vmr-checkpoint"},
                      {"version", 1},
                      {"model", ckpt.model.config},
                      {"train", ckpt.train},
                      {"epoch", ckpt.epoch},
                      {"n_subjects", ckpt.n_subjects},
                      {"tensors", entries}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write checkpoint manifest in " + dir.string());
}

Checkpoint load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("no checkpoint manifest in " + dir.string());
  const json manifest = json::parse(in);
  if (manifest.value("format", "") != "vmr-checkpoint" || manifest.value("version", 0) != 1)
    throw std::runtime_error("unsupported checkpoint format in " + dir.string());

  Checkpoint ckpt;
  const auto model_cfg = manifest.at("model").get<ModelConfig>();
  ckpt.model = Model::init(model_cfg, 0);
  ckpt.train = manifest.at("train").get<TrainConfig>();
  ckpt.epoch = manifest.at("epoch").get<std::size_t>();
  ckpt.n_subjects = manifest.at("n_subjects").get<std::size_t>();

  auto params = ckpt.model.named_tensors();
  const auto& entries = manifest.at("tensors");
  if (entries.size() != params.size()) throw std::runtime_error("checkpoint: parameter count does not match config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = entries[i];
    if (e.at("name").get<std::string>() != params[i].first)
      throw std::runtime_error("checkpoint: expected parameter " + params[i].first);
    Tensor stored = load_tensor(dir / e.at("file").get<std::string>());
    if (stored.shape() != params[i].second.shape())
      throw std::runtime_error("checkpoint: shape mismatch for " + params[i].first);
    const auto v = stored.data();
    std::copy(v.begin(), v.end(), params[i].second.mutable_data().begin());
  }
  return ckpt;
}

}  // namespace vmr::harness
