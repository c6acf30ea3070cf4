#include "vmr/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "vmr/ops.hpp"

namespace vmr::harness {

namespace {

void append_prefixed(vmrnn::NamedTensors& out, const std::string& prefix, vmrnn::NamedTensors part) {
  for (auto& [name, t] : part) out.emplace_back(prefix + name, std::move(t));
}

constexpr std::array<std::pair<std::size_t, std::size_t>, 2> kPairs{{{0, 1}, {2, 3}}};
constexpr std::array<asym::ViewPair, 2> kPairKinds{asym::ViewPair::cc, asym::ViewPair::mlo};

}  // namespace

Model Model::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m;
  m.config = config;
  Rng enc_rng(derive_seed(seed, 1)), fusion_rng(derive_seed(seed, 2)), vmr_rng(derive_seed(seed, 3));
  m.encoder = encoder::EncoderParams::init(config.encoder, enc_rng);
  m.fusion = encoder::FusionParams::init(config.fusion, fusion_rng);
  m.vmrnn = vmrnn::BlockParams::init(config.vmrnn, vmr_rng);
  m.ahl = hazard::AhlParams::init(m.history_dim() + 1);
  return m;
}

std::size_t Model::history_dim() const {
  return config.use_vmr ? config.vmrnn.coarse_channels() : config.fusion.model_dim;
}

vmrnn::NamedTensors Model::named_tensors() const {
  vmrnn::NamedTensors out;
  append_prefixed(out, "encoder.", encoder.named_tensors());
  append_prefixed(out, "fusion.", fusion.named_tensors());
  append_prefixed(out, "vmrnn.", vmrnn.named_tensors());
  append_prefixed(out, "ahl.", ahl.named_tensors());
  return out;
}

std::vector<Tensor> Model::trainable() const {
  std::vector<Tensor> out;
  const auto take = [&](const vmrnn::NamedTensors& part) {
    for (const auto& nt : part) out.push_back(nt.second);
  };
  if (!config.freeze_encoder) take(encoder.named_tensors());
  take(fusion.named_tensors());
  if (config.use_vmr) take(vmrnn.named_tensors());
  take(ahl.named_tensors());
  return out;
}

void Model::assign_values(const Model& other) {
  auto dst = named_tensors();
  const auto src = other.named_tensors();
  if (dst.size() != src.size()) throw std::invalid_argument("assign_values: models differ in structure");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].first != src[i].first || dst[i].second.shape() != src[i].second.shape())
      throw std::invalid_argument("assign_values: mismatch at " + src[i].first);
    const auto v = src[i].second.data();
    std::copy(v.begin(), v.end(), dst[i].second.mutable_data().begin());
  }
}

Model Model::clone() const {
  Model m = init(config, 0);
  m.assign_values(*this);
  return m;
}

SubjectFeatures encode_subject(const Model& model, const Subject& subject) {
  std::optional<NoGradScope> frozen;
  if (model.config.freeze_encoder) frozen.emplace();
  SubjectFeatures out(subject.exams.size());
  for (std::size_t t = 0; t < subject.exams.size(); ++t) {
    const auto& exam = subject.exams[t];
    if (!exam.present) continue;
    ExamFeatures f;
    for (std::size_t v = 0; v < 4; ++v)
      f[v] = encoder::encode_view(exam.views[v], model.encoder, encoder::is_right(encoder::kViews[v]));
    out[t] = std::move(f);
  }
  return out;
}

SubjectOutput forward(const Model& model, const Subject& subject, const SubjectFeatures* features) {
  const auto& cfg = model.config;
  SubjectFeatures own;
  if (!features) {
    own = encode_subject(model, subject);
    features = &own;
  }
  if (features->size() != subject.exams.size()) throw std::invalid_argument("forward: feature/exam count mismatch");

  std::vector<vmrnn::StepInput> steps;
  Tensor last_fused;
  std::array<std::vector<asym::AsymmetryRecord>, 2> records;
  std::array<std::vector<Tensor>, 2> d_max;
  double gap = 0.0;
  for (std::size_t t = 0; t < subject.exams.size(); ++t) {
    const auto& exam = subject.exams[t];
    gap += exam.delta_t_years;
    vmrnn::StepInput step;
    step.present = exam.present;
    step.delta_t_years = gap;
    if (!exam.present) {
      step.fused = Tensor::zeros({cfg.fusion.model_dim});
      steps.push_back(std::move(step));
      continue;
    }
    gap = 0.0;
    const ExamFeatures& f = *(*features)[t];
    step.fused = encoder::fuse_views(std::span<const Tensor, 4>(f), model.fusion).fused;
    last_fused = step.fused;
    steps.push_back(std::move(step));
    if (cfg.use_asym)
      for (std::size_t p = 0; p < 2; ++p) {
        auto sad = asym::sad_compute(f[kPairs[p].first], f[kPairs[p].second], t, kPairKinds[p]);
        records[p].push_back(sad.record);
        d_max[p].push_back(sad.d_max);
      }
  }
  if (!last_fused.defined()) throw std::invalid_argument("forward: subject " + subject.id + " has no present exam");

  SubjectOutput out;
  Tensor history;
  if (cfg.use_vmr) {
    const auto block = vmrnn::vmrnn_block_forward(steps, model.vmrnn);
    history = hazard::pool_history(block.states);
  } else {
    history = last_fused;
  }

  if (cfg.use_asym) {
    std::array<Tensor, 2> per_pair;
    for (std::size_t p = 0; p < 2; ++p) {
      out.tracks[p] = asym::lat_track(records[p], cfg.asym);
      per_pair[p] = asym::fuse_asymmetry(d_max[p], out.tracks[p].persistent, cfg.asym.alpha);
    }
    out.r_aa = scale(add(per_pair[0], per_pair[1]), 0.5);
  } else {
    out.r_aa = Tensor::scalar(0.0);
  }
  out.risk = hazard::ahl_forward(hazard::risk_input(history, out.r_aa), model.ahl);
  return out;
}

}  // namespace vmr::harness
