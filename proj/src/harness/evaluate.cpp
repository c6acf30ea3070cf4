#include "vmr/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <numeric>
#include <stdexcept>

#include "vmr/random.hpp"

namespace vmr::harness {

SplitName parse_split(const std::string& name) {
  if (name == "train") return SplitName::train;
  if (name == "val") return SplitName::val;
  if (name == "test") return SplitName::test;
  if (name == "all") return SplitName::all;
  throw std::invalid_argument("unknown split '" + name + "' (train, val, test, all)");
}

Split split_subjects(std::size_t n, std::uint64_t seed, double val_fraction, double test_fraction) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 101));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  if (n_test + n_val >= n) throw std::invalid_argument("split: too few subjects for a training share");
  Split s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
               order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

std::vector<std::size_t> split_indices(const Split& split, SplitName which, std::size_t n) {
  switch (which) {
    case SplitName::train: return split.train;
    case SplitName::val: return split.val;
    case SplitName::test: return split.test;
    case SplitName::all: break;
  }
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

std::vector<Prediction> predict(const Model& model, const Dataset& data, std::span<const std::size_t> indices,
                                const std::vector<SubjectFeatures>* cache) {
  std::vector<Prediction> out(indices.size());
  std::vector<std::exception_ptr> errors(indices.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < indices.size(); ++i) {
    try {
      NoGradScope no_grad;
      const Subject& s = data.subjects.at(indices[i]);
      const auto result = forward(model, s, cache ? &cache->at(indices[i]) : nullptr);
      Prediction& p = out[i];
      p.subject_id = s.id;
      p.label = s.label;
      p.dense_area = s.dense_area;
      p.baseline = result.risk.baseline.item();
      p.r_aa = result.r_aa.item();
      for (std::size_t k = 0; k < hazard::kYears; ++k) {
        p.p[k] = result.risk.cumulative[k];
        p.hazards[k] = result.risk.hazards[k];
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<metrics::EvalRecord> to_records(std::span<const Prediction> predictions) {
  std::vector<metrics::EvalRecord> records;
  records.reserve(predictions.size());
  for (const auto& p : predictions) {
    metrics::EvalRecord r;
    r.subject_id = p.subject_id;
    r.risk = p.p;
    r.label = p.label;
    r.dense_area = p.dense_area;
    records.push_back(std::move(r));
  }
  metrics::assign_density_groups(records);
  return records;
}

std::size_t monotonicity_violations(std::span<const Prediction> predictions) {
  std::size_t n = 0;
  for (const auto& p : predictions)
    for (std::size_t k = 1; k < hazard::kYears; ++k) n += p.p[k] < p.p[k - 1];
  return n;
}

void write_predictions_csv(std::ostream& out, std::span<const Prediction> predictions) {
  out << "subject_id,P_1,P_2,P_3,P_4,P_5,B,H_0,H_1,H_2,H_3,H_4,r_AA,label_event_year,followup_years\n";
  char buf[40];
  const auto field = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out << buf;
  };
  for (const auto& p : predictions) {
    out << p.subject_id;
    for (double v : p.p) field(v);
    field(p.baseline);
    for (double v : p.hazards) field(v);
    field(p.r_aa);
    out << ',';
    if (p.label.event_year) out << *p.label.event_year;
    out << ',' << p.label.followup_years << '\n';
  }
}

std::string model_tag(const ModelConfig& config) {
  if (config.use_vmr && config.use_asym) return "VMRA";
  if (config.use_vmr) return "VMR";
  if (config.use_asym) return "A";
  return "base";
}

std::vector<AsymmetryRow> inspect_asymmetry(const Model& model, const Dataset& data,
                                            std::span<const std::size_t> indices) {
  std::vector<std::vector<AsymmetryRow>> per_subject(indices.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < indices.size(); ++i) {
    NoGradScope no_grad;
    const Subject& s = data.subjects.at(indices[i]);
    const auto features = encode_subject(model, s);
    std::array<std::vector<asym::AsymmetryRecord>, 2> records;
    for (std::size_t t = 0; t < features.size(); ++t) {
      if (!features[t]) continue;
      const auto& f = *features[t];
      records[0].push_back(asym::sad_compute(f[0], f[1], t, asym::ViewPair::cc).record);
      records[1].push_back(asym::sad_compute(f[2], f[3], t, asym::ViewPair::mlo).record);
    }
    std::array<asym::LongitudinalAsymmetry, 2> tracks{asym::lat_track(records[0], model.config.asym),
                                                      asym::lat_track(records[1], model.config.asym)};
    const double r_aa = 0.5 * (tracks[0].r_aa + tracks[1].r_aa);
    for (const auto& track : tracks)
      for (const auto& rec : track.records) per_subject[i].push_back({s.id, rec, track.persistent, r_aa});
  }
  std::vector<AsymmetryRow> rows;
  for (auto& part : per_subject) rows.insert(rows.end(), part.begin(), part.end());
  return rows;
}

void write_asymmetry_csv(std::ostream& out, std::span<const AsymmetryRow> rows) {
  out << "subject_id,t,view_pair,D_max,p_h,p_w,persistent,r_AA\n";
  char buf[80];
  for (const auto& r : rows) {
    out << r.subject_id << ',' << r.record.t << ',' << asym::to_string(r.record.view_pair) << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.record.d_max);
    out << buf << ',' << r.record.p_h << ',' << r.record.p_w << ',' << (r.persistent ? 1 : 0) << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.r_aa);
    out << buf << '\n';
  }
}

Evaluation evaluate(const Checkpoint& ckpt, const Dataset& data, SplitName split,
                    const metrics::BootstrapConfig& bootstrap) {
  if (data.image_size != ckpt.model.config.encoder.image_size)
    throw std::runtime_error("dataset/checkpoint mismatch: images are " + std::to_string(data.image_size) +
                             " px, the model expects " + std::to_string(ckpt.model.config.encoder.image_size));
  if (split != SplitName::all && data.subjects.size() != ckpt.n_subjects)
    throw std::runtime_error("dataset/checkpoint mismatch: the checkpoint was trained on " +
                             std::to_string(ckpt.n_subjects) + " subjects, the dataset has " +
                             std::to_string(data.subjects.size()) + "; use split 'all' for foreign data");
  const Split s = split_subjects(data.subjects.size(), ckpt.train.seed, ckpt.train.val_fraction,
                                 ckpt.train.test_fraction);
  const auto indices = split_indices(s, split, data.subjects.size());
  Evaluation ev;
  ev.predictions = predict(ckpt.model, data, indices);
  const auto records = to_records(ev.predictions);
  ev.report = metrics::stratified_report(records, model_tag(ckpt.model.config), bootstrap);
  return ev;
}

}  // namespace vmr::harness
