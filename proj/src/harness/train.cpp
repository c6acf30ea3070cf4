#include "vmr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <omp.h>

#include "vmr/random.hpp"

namespace vmr::harness {

double cosine_lr(double lr0, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0) return lr0;
  const double frac = static_cast<double>(std::min(step, total_steps)) / static_cast<double>(total_steps);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

double clip_global_norm(std::vector<std::vector<double>>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads)
      for (double& v : g) v *= s;
  }
  return norm;
}

AdamW::AdamW(std::vector<Tensor> params, double weight_decay, double beta1, double beta2, double eps)
    : params_(std::move(params)), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamW::step(const std::vector<std::vector<double>>& grads, double lr) {
  if (grads.size() != params_.size()) throw std::invalid_argument("AdamW: gradient count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i].mutable_data();
    const auto& g = grads[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      if (lr == 0.0) continue;
      w[j] -= lr * weight_decay_ * w[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

std::vector<SubjectFeatures> precompute_features(const Model& model, const Dataset& data) {
  std::vector<SubjectFeatures> out(data.subjects.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    NoGradScope no_grad;
    out[i] = encode_subject(model, data.subjects[i]);
  }
  return out;
}

double train_step(const Model& model, AdamW& optimizer, const Dataset& data, std::span<const std::size_t> batch,
                  std::span<const double> class_weights, double lr, double clip_norm,
                  const std::vector<SubjectFeatures>* cache, int threads) {
  const auto& params = optimizer.params();
  const std::size_t B = batch.size();
  std::vector<std::vector<std::vector<double>>> grads(B);
  std::vector<double> losses(B, 0.0);
  std::vector<std::exception_ptr> errors(B);
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
  for (std::size_t b = 0; b < B; ++b) {
    try {
      const Subject& s = data.subjects.at(batch[b]);
      Tape tape;
      TapeScope scope(tape);
      const auto out = forward(model, s, cache ? &cache->at(batch[b]) : nullptr);
      const Tensor loss = hazard::risk_loss(out.risk, s.label, class_weights);
      losses[b] = loss.item();
      const Gradients g = backward(loss, tape);
      grads[b].reserve(params.size());
      for (const auto& p : params) grads[b].push_back(g.get(p));
    } catch (const NumericError& e) {
      errors[b] = std::make_exception_ptr(
          TrainingDiverged("non-finite value for subject " + data.subjects.at(batch[b]).id + ": " + e.what()));
    } catch (...) {
      errors[b] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<std::vector<double>> total(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    total[i].assign(params[i].numel(), 0.0);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t j = 0; j < total[i].size(); ++j) total[i][j] += grads[b][i][j];
    for (double& v : total[i]) v /= static_cast<double>(B);
  }
  const double norm = clip_global_norm(total, clip_norm);
  if (!std::isfinite(norm)) throw TrainingDiverged("non-finite gradient norm");
  optimizer.step(total, lr);

  double mean_loss = 0.0;
  for (double l : losses) mean_loss += l;
  mean_loss /= static_cast<double>(B);
  if (!std::isfinite(mean_loss)) throw TrainingDiverged("non-finite training loss");
  return mean_loss;
}

TrainResult train(const ModelConfig& model_config, const TrainConfig& config, const Dataset& data,
                  const EpochObserver& observer) {
  config.validate();
  if (data.subjects.empty()) throw std::invalid_argument("train: empty dataset");
  if (data.image_size != model_config.encoder.image_size)
    throw std::invalid_argument("train: dataset image size does not match the model");

  TrainResult result;
  result.split = split_subjects(data.subjects.size(), config.seed, config.val_fraction, config.test_fraction);
  const auto& train_idx = result.split.train;

  std::vector<hazard::Label> train_labels;
  for (std::size_t i : train_idx) train_labels.push_back(data.subjects[i].label);
  const auto weights = hazard::class_weights(train_labels);

  Model model = Model::init(model_config, config.seed);
  AdamW optimizer(model.trainable(), config.weight_decay);
  std::vector<SubjectFeatures> cache;
  if (model_config.freeze_encoder) cache = precompute_features(model, data);
  const auto* cache_ptr = model_config.freeze_encoder ? &cache : nullptr;

  const std::size_t steps_per_epoch = (train_idx.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.epochs;
  std::size_t step = 0;
  double best_score = -1.0;
  result.best = model.clone();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    Rng rng(derive_seed(config.seed, 1000 + epoch));
    std::shuffle(order.begin(), order.end(), rng);

    EpochLog row;
    row.epoch = epoch;
    row.lr = cosine_lr(config.lr, step, total_steps);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const double lr = cosine_lr(config.lr, step, total_steps);
      double loss = 0.0;
      try {
        loss = train_step(model, optimizer, data, batch, weights, lr, config.clip_norm, cache_ptr, config.threads);
      } catch (const TrainingDiverged& e) {
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(step) + ": " + e.what());
      }
      loss_sum += loss * static_cast<double>(batch.size());
      ++step;
    }
    row.train_loss = loss_sum / static_cast<double>(order.size());

    const auto preds = predict(model, data, result.split.val, cache_ptr);
    row.monotonicity_violations = monotonicity_violations(preds);
    const auto records = to_records(preds);
    row.val_auc_1y = metrics::rocauc_year(records, 1);
    row.val_c_index = metrics::c_index(records);
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t k = 1; k <= hazard::kYears; ++k)
      if (auto a = metrics::rocauc_year(records, k)) {
        sum += *a;
        ++defined;
      }
    if (defined) row.val_mean_auc = sum / static_cast<double>(defined);
    const double score = row.val_mean_auc.value_or(0.0);
    if (score > best_score) {
      best_score = score;
      result.best.assign_values(model);
      result.best_epoch = epoch;
      row.best = true;
    }
    result.log.push_back(row);
    if (observer) observer(row, model);
  }
  return result;
}

void write_training_log(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,lr,train_loss,val_auc_1y,val_mean_auc,val_c_index,monotonicity_violations,best\n";
  char buf[40];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  const auto opt = [&](const std::optional<double>& v) {
    if (v) num(*v);
  };
  for (const auto& r : log) {
    out << r.epoch << ',';
    num(r.lr);
    out << ',';
    num(r.train_loss);
    out << ',';
    opt(r.val_auc_1y);
    out << ',';
    opt(r.val_mean_auc);
    out << ',';
    opt(r.val_c_index);
    out << ',' << r.monotonicity_violations << ',' << (r.best ? 1 : 0) << '\n';
  }
}

}  // namespace vmr::harness
