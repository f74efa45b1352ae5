// Pipeline driver: one binary, one subcommand per stage. All results go to
// standard output as a single JSON document; diagnostics go to standard error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcarep/checkpoint_io.hpp"
#include "lcarep/classifier.hpp"
#include "lcarep/config.hpp"
#include "lcarep/error.hpp"
#include "lcarep/lca.hpp"
#include "lcarep/pipeline.hpp"
#include "lcarep/pseudolabel.hpp"
#include "lcarep/synthetic.hpp"
#include "lcarep/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void emit(const ordered_json& j) { std::cout << j.dump() << "\n"; }

// Registers every RunConfig key as a dotted long option on `cmd`; file values
// are applied first, then single-key overrides in key order.
struct ConfigArgs {
  std::string config_file;
  std::vector<std::pair<std::string, CLI::Option*>> key_options;
  std::size_t threads = 0;  // 0: keep the configured value

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file,
                    "key = value config file (all keys optional)");
    for (const std::string& key : lcarep::RunConfig::known_keys())
      key_options.emplace_back(key, cmd->add_option("--" + key)
                                        ->description("override config key")
                                        ->expected(1));
    cmd->add_option("--threads", threads,
                    "worker threads (overrides train.threads)");
  }

  lcarep::RunConfig resolve() const {
    lcarep::RunConfig rc;
    if (!config_file.empty()) rc.load_file(config_file);
    for (const auto& [key, opt] : key_options)
      if (opt->count() > 0) rc.set(key, opt->results().back());
    if (threads > 0) rc.train.threads = threads;
    return rc;
  }
};

std::vector<std::int64_t> read_labels_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw lcarep::DatasetError("labels: cannot open file: " + path.string());
  std::vector<std::int64_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      std::size_t pos = 0;
      labels.push_back(std::stoll(line, &pos));
      if (pos != line.size()) throw std::invalid_argument(line);
    } catch (const std::logic_error&) {
      throw lcarep::DatasetError("labels: " + path.string() + ":" +
                                 std::to_string(line_no) +
                                 ": not an integer: '" + line + "'");
    }
  }
  return labels;
}

lcarep::Tensor read_embedding_matrix(const fs::path& path) {
  lcarep::Tensor t = lcarep::read_tnsr(path);
  if (t.rank() != 2)
    throw lcarep::FormatError("embeddings: " + path.string() +
                              ": expected a rank-2 tensor, got rank " +
                              std::to_string(t.rank()));
  return t;
}

void prepare_output_file(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

fs::path run_directory(const fs::path& checkpoint_path) {
  return checkpoint_path.has_parent_path() ? checkpoint_path.parent_path()
                                           : fs::path(".");
}

void write_history(const fs::path& dir,
                   const std::vector<lcarep::EpochMetrics>& history) {
  const fs::path path = dir / "metrics.jsonl";
  std::ofstream(path, std::ios::trunc);  // one fresh log per run
  for (const auto& m : history) lcarep::append_metrics(path, m);
}

ordered_json train_summary(const fs::path& ckpt_path,
                           const lcarep::TrainResult& r) {
  ordered_json j;
  j["checkpoint"] = ckpt_path.string();
  j["epochs"] = r.history.size();
  if (r.history.empty()) {
    j["first_epoch_loss"] = nullptr;
    j["final_epoch_loss"] = nullptr;
    j["final_mean_pos_dist"] = nullptr;
    j["final_mean_neg_dist"] = nullptr;
  } else {
    j["first_epoch_loss"] = r.history.front().mean_loss;
    j["final_epoch_loss"] = r.history.back().mean_loss;
    j["final_mean_pos_dist"] = r.history.back().mean_pos_dist;
    j["final_mean_neg_dist"] = r.history.back().mean_neg_dist;
  }
  return j;
}

void cmd_gen_data(const std::string& spec_file, const std::string& out_dir) {
  lcarep::SyntheticSpec spec;
  if (!spec_file.empty()) spec = lcarep::SyntheticSpec::from_json_file(spec_file);
  spec.validate();
  lcarep::gen_synthetic(spec, out_dir);
  spec.to_json_file(fs::path(out_dir) / "spec.resolved.json");

  const std::size_t pairs = spec.n_classes * (spec.images_per_class / 2);
  ordered_json j;
  j["out"] = out_dir;
  j["rep_classes"] = spec.n_classes;
  j["probe_classes"] = spec.probe_classes;
  j["pairs"] = pairs;
  j["pairs_heldout"] = spec.n_classes * spec.heldout_pairs_per_class;
  j["unlabeled"] = spec.n_classes * spec.unlabeled_per_class;
  j["unlabeled_heldout"] = spec.n_classes * spec.unlabeled_heldout_per_class;
  j["probe_train"] = spec.probe_classes * spec.probe_train_per_class;
  j["probe_test"] = spec.probe_classes * spec.probe_test_per_class;
  emit(j);
}

void cmd_train_teacher(const ConfigArgs& cargs, const std::string& pairs_path,
                       const std::string& out_path) {
  const lcarep::RunConfig rc = cargs.resolve();
  rc.backbone.validate();  // reject bad configs before any data is touched
  rc.train.validate_teacher();
  const lcarep::PairSet pairs =
      lcarep::load_pairs(pairs_path, rc.backbone.input_size);
  const lcarep::TrainResult r =
      lcarep::train_teacher(pairs, rc.backbone, rc.train);

  prepare_output_file(out_path);
  lcarep::save_checkpoint(out_path, r.checkpoint);
  const fs::path dir = run_directory(out_path);
  write_history(dir, r.history);
  rc.write_resolved(dir);
  emit(train_summary(out_path, r));
}

void cmd_pseudolabel(const std::string& ckpt_path, const std::string& images,
                     const std::string& out_dir, std::size_t threads) {
  const lcarep::Checkpoint ckpt = lcarep::load_checkpoint(ckpt_path);
  const auto records = lcarep::load_images(images, ckpt.config.input_size);
  const lcarep::PseudolabelStore store =
      lcarep::generate_pseudolabels(ckpt, records, threads);
  fs::create_directories(out_dir);
  store.save(out_dir);

  ordered_json j;
  j["out"] = out_dir;
  j["count"] = store.size();
  j["dim"] = ckpt.config.embedding_dim();
  emit(j);
}

void cmd_train_student(const ConfigArgs& cargs, const std::string& pairs_path,
                       const std::string& pseudo_dir, const std::string& images,
                       const std::string& out_path) {
  const lcarep::RunConfig rc = cargs.resolve();
  rc.backbone.validate();
  rc.train.validate_student();
  const lcarep::PairSet pairs =
      lcarep::load_pairs(pairs_path, rc.backbone.input_size);
  const auto unlabeled = lcarep::load_images(images, rc.backbone.input_size);
  const lcarep::PseudolabelStore store = lcarep::PseudolabelStore::load(pseudo_dir);
  const lcarep::TrainResult r =
      lcarep::train_student(pairs, unlabeled, store, rc.backbone, rc.train);

  prepare_output_file(out_path);
  lcarep::save_checkpoint(out_path, r.checkpoint);
  const fs::path dir = run_directory(out_path);
  write_history(dir, r.history);
  rc.write_resolved(dir);
  emit(train_summary(out_path, r));
}

void cmd_embed(const std::string& ckpt_path, const std::string& images,
               const std::string& out_path, const std::string& labels_out,
               std::size_t threads) {
  const lcarep::Checkpoint ckpt = lcarep::load_checkpoint(ckpt_path);
  const auto records = lcarep::load_images(images, ckpt.config.input_size);
  const lcarep::EmbeddingMatrix em =
      lcarep::embed_manifest(ckpt, records, threads);

  prepare_output_file(out_path);
  lcarep::write_tnsr(fs::path(out_path), em.matrix);
  if (!labels_out.empty()) {
    if (em.labels.empty())
      throw lcarep::DatasetError(
          "embed: --labels-out requires class_id on every manifest record");
    prepare_output_file(labels_out);
    std::ofstream f(labels_out, std::ios::trunc);
    for (std::int64_t label : em.labels) f << label << "\n";
  }

  ordered_json j;
  j["out"] = out_path;
  j["n"] = em.matrix.dim(0);
  j["dim"] = em.matrix.dim(1);
  j["labels_out"] = labels_out.empty() ? ordered_json(nullptr)
                                       : ordered_json(labels_out);
  emit(j);
}

void cmd_fit_lr(const std::string& emb_path, const std::string& labels_path,
                double l2, std::size_t max_iters, double tol,
                const std::string& out_path) {
  const lcarep::Tensor X = read_embedding_matrix(emb_path);
  const std::vector<std::int64_t> labels = read_labels_file(labels_path);
  if (labels.size() != X.dim(0))
    throw lcarep::DatasetError(
        "fit-lr: " + std::to_string(labels.size()) + " labels for " +
        std::to_string(X.dim(0)) + " embedding rows");

  lcarep::FitOptions opts;
  opts.l2 = l2;
  opts.max_iters = max_iters;
  opts.tol = tol;
  const lcarep::LogRegModel model = lcarep::fit_logreg(X, labels, opts);
  prepare_output_file(out_path);
  lcarep::save_logreg(out_path, model);

  ordered_json j;
  j["out"] = out_path;
  j["n"] = X.dim(0);
  j["k"] = model.k();
  j["train_accuracy"] = lcarep::evaluate(model, X, labels);
  emit(j);
}

void cmd_eval(const std::string& model_path, const std::string& emb_path,
              const std::string& labels_path) {
  const lcarep::LogRegModel model = lcarep::load_logreg(model_path);
  const lcarep::Tensor X = read_embedding_matrix(emb_path);
  const std::vector<std::int64_t> labels = read_labels_file(labels_path);
  if (labels.size() != X.dim(0))
    throw lcarep::DatasetError(
        "eval: " + std::to_string(labels.size()) + " labels for " +
        std::to_string(X.dim(0)) + " embedding rows");

  ordered_json j;
  j["accuracy"] = lcarep::evaluate(model, X, labels);
  j["n"] = X.dim(0);
  j["k"] = model.k();
  emit(j);
}

void cmd_lca_bench(std::size_t h, std::size_t w, std::size_t c,
                   std::size_t iters) {
  if (h == 0 || w == 0 || c == 0 || iters == 0)
    throw lcarep::ConfigError("lca-bench: h, w, c and iters must be positive");
  lcarep::BasicTensor<float> input({h, w, c});
  lcarep::Rng rng(42);
  for (auto& v : input.values()) v = static_cast<float>(rng.uniform());
  const lcarep::LcaConfig cfg;

  volatile double sink = 0.0;  // keep the optimizer honest
  auto time_ns = [&](auto&& fn) {
    fn();  // warm caches and the coefficient map
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < iters; ++i) sink = sink + fn();
    const auto t1 = std::chrono::steady_clock::now();
    return static_cast<double>(
               std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
                   .count()) /
           static_cast<double>(iters);
  };

  const double fast_ns =
      time_ns([&] { return lcarep::lca_forward(input, cfg)[0]; });
  const double naive_ns =
      time_ns([&] { return lcarep::lca_forward_bruteforce(input, cfg)[0]; });

  ordered_json j;
  j["fast_ns_per_call"] = fast_ns;
  j["naive_ns_per_call"] = naive_ns;
  j["speedup"] = naive_ns / fast_ns;
  emit(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contrastive representation pipeline"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "render a synthetic corpus");
  std::string gen_spec, gen_out;
  gen->add_option("--spec", gen_spec, "corpus spec JSON (defaults when omitted)");
  gen->add_option("--out", gen_out, "output directory")->required();

  // train-teacher
  auto* teach = app.add_subcommand("train-teacher",
                                   "contrastive training on image pairs");
  std::string teach_pairs, teach_out;
  ConfigArgs teach_cfg;
  teach->add_option("--pairs", teach_pairs, "pairs manifest")->required();
  teach->add_option("--out", teach_out, "checkpoint output path")->required();
  teach_cfg.attach(teach);

  // pseudolabel
  auto* pseudo = app.add_subcommand("pseudolabel",
                                    "embed a manifest into a pseudolabel store");
  std::string pseudo_ckpt, pseudo_images, pseudo_out;
  std::size_t pseudo_threads = 1;
  pseudo->add_option("--ckpt", pseudo_ckpt, "teacher checkpoint")->required();
  pseudo->add_option("--images", pseudo_images, "image manifest")->required();
  pseudo->add_option("--out", pseudo_out, "store directory")->required();
  pseudo->add_option("--threads", pseudo_threads, "worker threads");

  // train-student
  auto* student = app.add_subcommand(
      "train-student", "noisy-student distillation with pseudolabels");
  std::string student_pairs, student_pseudo, student_images, student_out;
  ConfigArgs student_cfg;
  student->add_option("--pairs", student_pairs, "pairs manifest")->required();
  student->add_option("--pseudo", student_pseudo, "pseudolabel store directory")
      ->required();
  student->add_option("--images", student_images,
                      "manifest of the unlabeled images behind the store")
      ->required();
  student->add_option("--out", student_out, "checkpoint output path")->required();
  student_cfg.attach(student);

  // embed
  auto* embed = app.add_subcommand("embed", "embed a manifest into a matrix");
  std::string embed_ckpt, embed_images, embed_out, embed_labels;
  std::size_t embed_threads = 1;
  embed->add_option("--ckpt", embed_ckpt, "checkpoint")->required();
  embed->add_option("--images", embed_images, "image manifest")->required();
  embed->add_option("--out", embed_out, "output tensor path")->required();
  embed->add_option("--labels-out", embed_labels,
                    "write one class label per row to this file");
  embed->add_option("--threads", embed_threads, "worker threads");

  // fit-lr
  auto* fit = app.add_subcommand("fit-lr",
                                 "fit a logistic-regression probe");
  std::string fit_emb, fit_labels, fit_out;
  double fit_l2 = 1e-3, fit_tol = 1e-5;
  std::size_t fit_iters = 500;
  fit->add_option("--embeddings", fit_emb, "rank-2 embedding tensor")->required();
  fit->add_option("--labels", fit_labels, "one integer label per line")
      ->required();
  fit->add_option("--l2", fit_l2, "ridge strength");
  fit->add_option("--max-iters", fit_iters, "iteration cap");
  fit->add_option("--tol", fit_tol, "gradient infinity-norm tolerance");
  fit->add_option("--out", fit_out, "model output path")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "accuracy of a fitted probe");
  std::string eval_model, eval_emb, eval_labels;
  eval->add_option("--model", eval_model, "fitted probe")->required();
  eval->add_option("--embeddings", eval_emb, "rank-2 embedding tensor")
      ->required();
  eval->add_option("--labels", eval_labels, "one integer label per line")
      ->required();

  // lca-bench
  auto* bench = app.add_subcommand("lca-bench",
                                   "summed-area pooling vs the naive scan");
  bench->set_help_flag("--help", "print help");  // frees -h for the height flag
  std::size_t bench_h = 14, bench_w = 14, bench_c = 256, bench_iters = 10;
  bench->add_option("--h", bench_h, "feature map height");
  bench->add_option("--w", bench_w, "feature map width");
  bench->add_option("--c", bench_c, "channels");
  bench->add_option("--iters", bench_iters, "timed calls per variant");

  gen->callback([&] { cmd_gen_data(gen_spec, gen_out); });
  teach->callback([&] { cmd_train_teacher(teach_cfg, teach_pairs, teach_out); });
  pseudo->callback([&] {
    cmd_pseudolabel(pseudo_ckpt, pseudo_images, pseudo_out, pseudo_threads);
  });
  student->callback([&] {
    cmd_train_student(student_cfg, student_pairs, student_pseudo,
                      student_images, student_out);
  });
  embed->callback([&] {
    cmd_embed(embed_ckpt, embed_images, embed_out, embed_labels, embed_threads);
  });
  fit->callback([&] {
    cmd_fit_lr(fit_emb, fit_labels, fit_l2, fit_iters, fit_tol, fit_out);
  });
  eval->callback([&] { cmd_eval(eval_model, eval_emb, eval_labels); });
  bench->callback([&] { cmd_lca_bench(bench_h, bench_w, bench_c, bench_iters); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const lcarep::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const lcarep::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const lcarep::DatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const lcarep::TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
