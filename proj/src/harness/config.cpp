#include "vmr/config.hpp"

#include <fstream>
#include <stdexcept>

#include "vmr/hazard.hpp"

namespace vmr::harness {

using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

bool is_fraction(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void SyntheticConfig::validate() const {
  require(n_subjects > 0, "data: n_subjects must be positive");
  require(is_fraction(positive_fraction), "data: positive_fraction must lie in [0, 1]");
  require(is_fraction(benign_probability), "data: benign_probability must lie in [0, 1]");
  require(is_fraction(missing_exam_probability), "data: missing_exam_probability must lie in [0, 1]");
  require(is_fraction(censoring_probability), "data: censoring_probability must lie in [0, 1]");
  require(image_size >= 8 && image_size % 8 == 0, "data: image_size must be a positive multiple of 8");
  require(timesteps == hazard::kYears, "data: timesteps must equal the 5-year horizon");
  require(lesion_base_sigma > 0.0 && lesion_growth_per_year >= 0.0, "data: lesion size parameters out of range");
  require(lesion_contrast >= 0.0 && noise_std >= 0.0, "data: contrast and noise must be non-negative");
  double total = 0.0;
  for (double w : density_weights) {
    require(w >= 0.0, "data: density weights must be non-negative");
    total += w;
  }
  require(total > 0.0, "data: density weights must not all be zero");
  for (double a : density_amplitude) require(a >= 0.0 && a <= 0.5, "data: density amplitude must lie in [0, 0.5]");
}

void ModelConfig::validate() const {
  require(fusion.feature_channels == encoder.out_channels(), "model: fusion input must match encoder channels");
  require(vmrnn.feature_dim == fusion.model_dim, "model: VMRNN feature size must match the fusion width");
  require(fusion.heads > 0 && fusion.model_dim % fusion.heads == 0, "model: fusion width must divide by heads");
  require(asym.window_side > 0, "model: asymmetry window must be positive");
  vmrnn.validate();
}

void TrainConfig::validate() const {
  require(lr >= 0.0 && weight_decay >= 0.0, "train: lr and weight_decay must be non-negative");
  require(epochs > 0 && batch_size > 0, "train: epochs and batch_size must be positive");
  require(clip_norm > 0.0, "train: clip_norm must be positive");
  require(is_fraction(val_fraction) && is_fraction(test_fraction) && val_fraction + test_fraction < 1.0,
          "train: split fractions must leave a training share");
}

void to_json(json& j, const SyntheticConfig& c) {
  j = json{{"n_subjects", c.n_subjects},
           {"positive_fraction", c.positive_fraction},
           {"image_size", c.image_size},
           {"timesteps", c.timesteps},
           {"lesion_base_sigma", c.lesion_base_sigma},
           {"lesion_growth_per_year", c.lesion_growth_per_year},
           {"lesion_contrast", c.lesion_contrast},
           {"density_weights", c.density_weights},
           {"density_amplitude", c.density_amplitude},
           {"benign_probability", c.benign_probability},
           {"missing_exam_probability", c.missing_exam_probability},
           {"censoring_probability", c.censoring_probability},
           {"noise_std", c.noise_std},
           {"seed", c.seed}};
}

void from_json(const json& j, SyntheticConfig& c) {
  read_opt(j, "n_subjects", c.n_subjects);
  read_opt(j, "positive_fraction", c.positive_fraction);
  read_opt(j, "image_size", c.image_size);
  read_opt(j, "timesteps", c.timesteps);
  read_opt(j, "lesion_base_sigma", c.lesion_base_sigma);
  read_opt(j, "lesion_growth_per_year", c.lesion_growth_per_year);
  read_opt(j, "lesion_contrast", c.lesion_contrast);
  read_opt(j, "density_weights", c.density_weights);
  read_opt(j, "density_amplitude", c.density_amplitude);
  read_opt(j, "benign_probability", c.benign_probability);
  read_opt(j, "missing_exam_probability", c.missing_exam_probability);
  read_opt(j, "censoring_probability", c.censoring_probability);
  read_opt(j, "noise_std", c.noise_std);
  read_opt(j, "seed", c.seed);
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"image_size", c.encoder.image_size},
           {"encoder_channels", c.encoder.stage_channels},
           {"fusion_dim", c.fusion.model_dim},
           {"fusion_heads", c.fusion.heads},
           {"fusion_ffn_hidden", c.fusion.ffn_hidden},
           {"vmrnn_channels", c.vmrnn.channels},
           {"vmrnn_height", c.vmrnn.height},
           {"vmrnn_width", c.vmrnn.width},
           {"state_dim", c.vmrnn.state_dim},
           {"asym_window", c.asym.window_side},
           {"asym_alpha", c.asym.alpha},
           {"use_vmr", c.use_vmr},
           {"use_asym", c.use_asym},
           {"freeze_encoder", c.freeze_encoder}};
}

void from_json(const json& j, ModelConfig& c) {
  read_opt(j, "image_size", c.encoder.image_size);
  read_opt(j, "encoder_channels", c.encoder.stage_channels);
  read_opt(j, "fusion_dim", c.fusion.model_dim);
  read_opt(j, "fusion_heads", c.fusion.heads);
  read_opt(j, "fusion_ffn_hidden", c.fusion.ffn_hidden);
  read_opt(j, "vmrnn_channels", c.vmrnn.channels);
  read_opt(j, "vmrnn_height", c.vmrnn.height);
  read_opt(j, "vmrnn_width", c.vmrnn.width);
  read_opt(j, "state_dim", c.vmrnn.state_dim);
  read_opt(j, "asym_window", c.asym.window_side);
  read_opt(j, "asym_alpha", c.asym.alpha);
  read_opt(j, "use_vmr", c.use_vmr);
  read_opt(j, "use_asym", c.use_asym);
  read_opt(j, "freeze_encoder", c.freeze_encoder);
  c.fusion.feature_channels = c.encoder.out_channels();
  c.vmrnn.feature_dim = c.fusion.model_dim;
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"lr", c.lr},
           {"weight_decay", c.weight_decay},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"clip_norm", c.clip_norm},
           {"val_fraction", c.val_fraction},
           {"test_fraction", c.test_fraction},
           {"seed", c.seed},
           {"threads", c.threads}};
}

void from_json(const json& j, TrainConfig& c) {
  read_opt(j, "lr", c.lr);
  read_opt(j, "weight_decay", c.weight_decay);
  read_opt(j, "epochs", c.epochs);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "clip_norm", c.clip_norm);
  read_opt(j, "val_fraction", c.val_fraction);
  read_opt(j, "test_fraction", c.test_fraction);
  read_opt(j, "seed", c.seed);
  read_opt(j, "threads", c.threads);
}

void to_json(json& j, const RunConfig& c) { j = json{{"data", c.data}, {"model", c.model}, {"train", c.train}}; }

void from_json(const json& j, RunConfig& c) {
  read_opt(j, "data", c.data);
  read_opt(j, "model", c.model);
  read_opt(j, "train", c.train);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  RunConfig c;
  try {
    c = json::parse(in).get<RunConfig>();
  } catch (const json::exception& e) {
    throw std::runtime_error("invalid config " + path.string() + ": " + e.what());
  }
  c.data.validate();
  c.model.validate();
  c.train.validate();
  return c;
}

}  // namespace vmr::harness
