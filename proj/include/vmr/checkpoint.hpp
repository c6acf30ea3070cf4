#pragma once

#include <filesystem>

#include "vmr/config.hpp"
#include "vmr/model.hpp"

namespace vmr::harness {

struct Checkpoint {
  Model model;
  TrainConfig train;
  std::size_t epoch = 0;
  std::size_t n_subjects = 0;  // size of the dataset the split was drawn from
};

// Directory with manifest.json (config plus name -> file, shape, dtype) and
// one f64 VMRT file per parameter.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace vmr::harness
