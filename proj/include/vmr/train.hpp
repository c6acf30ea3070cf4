#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "vmr/config.hpp"
#include "vmr/dataset.hpp"
#include "vmr/evaluate.hpp"
#include "vmr/model.hpp"

namespace vmr::harness {

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// lr0 * (1 + cos(pi * step / total)) / 2
double cosine_lr(double lr0, std::size_t step, std::size_t total_steps);

/// Scales all gradients so their joint L2 norm is at most max_norm; returns
/// the norm before scaling.
double clip_global_norm(std::vector<std::vector<double>>& grads, double max_norm);

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8);
  void step(const std::vector<std::vector<double>>& grads, double lr);
  std::size_t steps() const { return t_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double weight_decay_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

/// Encoder output for every subject, computed outside the tape.
std::vector<SubjectFeatures> precompute_features(const Model& model, const Dataset& data);

/// One optimizer step on a batch: per-subject tapes run in parallel and
/// their gradients are summed in batch order. Returns the mean loss.
double train_step(const Model& model, AdamW& optimizer, const Dataset& data, std::span<const std::size_t> batch,
                  std::span<const double> class_weights, double lr, double clip_norm,
                  const std::vector<SubjectFeatures>* cache = nullptr, int threads = 0);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;  // at the epoch's first step
  double train_loss = 0.0;
  std::optional<double> val_auc_1y;
  std::optional<double> val_mean_auc;
  std::optional<double> val_c_index;
  std::size_t monotonicity_violations = 0;
  bool best = false;
};

struct TrainResult {
  Model best;
  std::size_t best_epoch = 0;
  std::vector<EpochLog> log;
  Split split;
};

/// Called after every epoch with the current (not best) parameters.
using EpochObserver = std::function<void(const EpochLog&, const Model&)>;

TrainResult train(const ModelConfig& model_config, const TrainConfig& config, const Dataset& data,
                  const EpochObserver& observer = {});

void write_training_log(std::ostream& out, std::span<const EpochLog> log);

}  // namespace vmr::harness
