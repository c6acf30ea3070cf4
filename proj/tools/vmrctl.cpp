// vmrctl: data generation, training, evaluation and diagnostics.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "vmr/checkpoint.hpp"
#include "vmr/config.hpp"
#include "vmr/dataset.hpp"
#include "vmr/evaluate.hpp"
#include "vmr/scan_bench.hpp"
#include "vmr/train.hpp"

namespace fs = std::filesystem;
using namespace vmr::harness;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void cmd_gen_data(const fs::path& config_path, const fs::path& out_dir) {
  const RunConfig cfg = load_config(config_path);
  const Dataset data = gen_synthetic(cfg.data);
  write_dataset(data, out_dir);
  std::size_t positives = 0;
  for (const auto& s : data.subjects) positives += s.label.event_year.has_value();
  std::printf("wrote %zu subjects (%zu with events) to %s\n", data.subjects.size(), positives, out_dir.c_str());
}

void cmd_train(const fs::path& config_path, const fs::path& data_dir, const fs::path& out_dir) {
  const RunConfig cfg = load_config(config_path);
  const Dataset data = read_dataset(data_dir);
  fs::create_directories(out_dir);
  auto log_file = open_out(out_dir / "training_log.csv");
  std::vector<EpochLog> rows;
  const auto observer = [&](const EpochLog& row, const Model&) {
    rows.push_back(row);
    std::printf("epoch %2zu  lr %.3g  loss %.5f  val_auc_1y %s  val_mean_auc %s\n", row.epoch, row.lr,
                row.train_loss, row.val_auc_1y ? std::to_string(*row.val_auc_1y).c_str() : "-",
                row.val_mean_auc ? std::to_string(*row.val_mean_auc).c_str() : "-");
    std::fflush(stdout);
  };
  const TrainResult result = train(cfg.model, cfg.train, data, observer);
  write_training_log(log_file, result.log);
  save_checkpoint(out_dir, {result.best, cfg.train, result.best_epoch, data.subjects.size()});
  std::printf("best epoch %zu; checkpoint in %s\n", result.best_epoch, out_dir.c_str());
}

void cmd_eval(const fs::path& ckpt_dir, const fs::path& data_dir, const std::string& split,
              const fs::path& report, const fs::path& predictions, std::size_t bootstrap) {
  const Checkpoint ckpt = load_checkpoint(ckpt_dir);
  const Dataset data = read_dataset(data_dir);
  const Evaluation ev = evaluate(ckpt, data, parse_split(split), {bootstrap, ckpt.train.seed});
  auto report_out = open_out(report);
  vmr::metrics::write_report_csv(report_out, ev.report);
  const fs::path pred_path = predictions.empty() ? fs::path(report).replace_extension(".predictions.csv") : predictions;
  auto pred_out = open_out(pred_path);
  write_predictions_csv(pred_out, ev.predictions);
  for (const auto& row : ev.report)
    if (row.density_group == "overall")
      std::printf("%-8s year %zu  %s\n", row.metric.c_str(), row.year,
                  row.value ? std::to_string(*row.value).c_str() : "undefined");
}

void cmd_scan_bench(std::size_t lmax, const fs::path& csv, std::vector<int> threads) {
  BenchConfig cfg = default_bench(lmax);
  if (!threads.empty()) cfg.threads = std::move(threads);
  const auto rows = run_scan_bench(cfg);
  auto out = open_out(csv);
  write_bench_csv(out, rows);
  for (std::size_t C : cfg.channels)
    if (auto s = bench_speedup(rows, cfg.lengths.back(), C, 4))
      std::printf("L=%zu C=%zu speedup (>=4 threads): %.2fx\n", cfg.lengths.back(), C, *s);
}

void cmd_asym_inspect(const fs::path& ckpt_dir, const fs::path& data_dir, const std::string& split,
                      const fs::path& out_path) {
  const Checkpoint ckpt = load_checkpoint(ckpt_dir);
  const Dataset data = read_dataset(data_dir);
  std::vector<std::size_t> indices;
  if (parse_split(split) == SplitName::all || data.subjects.size() != ckpt.n_subjects) {
    indices = split_indices({}, SplitName::all, data.subjects.size());
  } else {
    const Split s = split_subjects(data.subjects.size(), ckpt.train.seed, ckpt.train.val_fraction,
                                   ckpt.train.test_fraction);
    indices = split_indices(s, parse_split(split), data.subjects.size());
  }
  auto out = open_out(out_path);
  write_asymmetry_csv(out, inspect_asymmetry(ckpt.model, data, indices));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Longitudinal breast cancer risk model: data, training and evaluation"};
  app.require_subcommand(1);

  fs::path config, out, data, ckpt, report, predictions, csv;
  std::string split = "test";
  std::size_t lmax = 4096, bootstrap = 1000;
  std::vector<int> threads;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic longitudinal dataset");
  gen->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory")->required();

  auto* tr = app.add_subcommand("train", "Train a model and keep the best validation checkpoint");
  tr->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  tr->add_option("--data", data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--out", out, "Checkpoint directory")->required();

  auto* ev = app.add_subcommand("eval", "Write predictions and a density-stratified metrics report");
  ev->add_option("--ckpt", ckpt, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--data", data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--split", split, "train, val, test or all")->capture_default_str();
  ev->add_option("--report", report, "Metrics CSV")->required();
  ev->add_option("--predictions", predictions, "Prediction CSV (default: next to the report)");
  ev->add_option("--bootstrap", bootstrap, "Bootstrap replicates for confidence intervals")->capture_default_str();

  auto* bench = app.add_subcommand("scan-bench", "Time sequential against chunked parallel scans");
  bench->add_option("--lmax", lmax, "Longest sequence")->capture_default_str();
  bench->add_option("--csv", csv, "Output CSV")->required();
  bench->add_option("--threads", threads, "Thread counts to sweep (default 1 2 4)");

  auto* inspect = app.add_subcommand("asym-inspect", "Dump per-exam asymmetry peaks and persistence");
  inspect->add_option("--ckpt", ckpt, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  inspect->add_option("--data", data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  inspect->add_option("--split", split, "train, val, test or all")->default_val("all");
  inspect->add_option("--out", out, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) cmd_gen_data(config, out);
    if (tr->parsed()) cmd_train(config, data, out);
    if (ev->parsed()) cmd_eval(ckpt, data, split, report, predictions, bootstrap);
    if (bench->parsed()) cmd_scan_bench(lmax, csv, threads);
    if (inspect->parsed()) cmd_asym_inspect(ckpt, data, split, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
