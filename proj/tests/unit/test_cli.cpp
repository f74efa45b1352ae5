// Drives the installed pipeline binary end to end through a tiny corpus.
// The binary's path arrives in LCAREP_CLI so the test needs no build-tree
// layout knowledge.
#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const char* cli = std::getenv("LCAREP_CLI");
    ASSERT_NE(cli, nullptr) << "LCAREP_CLI must point at the pipeline binary";
    cli_ = cli;
    dir_ = fs::temp_directory_path() /
           ("lcarep_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  }

  static RunResult run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = "\"" + cli_ + "\" " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
  }

  // Every successful subcommand emits exactly one line of JSON on stdout.
  static nlohmann::json parse_single_line(const RunResult& r) {
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_FALSE(r.out.empty());
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1) << r.out;
    return nlohmann::json::parse(r.out);
  }

  static std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n;
  }

  inline static std::string cli_;
  inline static fs::path dir_;
};

TEST_F(CliTest, HelpSucceedsAndMentionsSubcommands) {
  const RunResult r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("train-teacher"), std::string::npos);
  EXPECT_NE(r.out.find("gen-data"), std::string::npos);
}

TEST_F(CliTest, MissingSubcommandOrUnknownOptionIsUsageError) {
  EXPECT_EQ(run("").code, 1);
  const RunResult r = run("gen-data --nope x --out " + (dir_ / "n").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, EndToEndTinyCorpus) {
  const fs::path corpus = dir_ / "corpus";
  const fs::path rund = dir_ / "run";
  const std::string model_flags =
      " --backbone.input_size 16 --backbone.block_channels 4,8";

  std::ofstream(dir_ / "spec.json")
      << R"({"n_classes": 4, "images_per_class": 2, "heldout_pairs_per_class": 1,)"
      << R"( "unlabeled_per_class": 4, "unlabeled_heldout_per_class": 1,)"
      << R"( "probe_classes": 2, "probe_train_per_class": 1,)"
      << R"( "probe_test_per_class": 2, "side": 16, "distortion": 0.25, "seed": 5})";

  // gen-data
  auto j = parse_single_line(run("gen-data --spec " +
                                 (dir_ / "spec.json").string() + " --out " +
                                 corpus.string()));
  EXPECT_EQ(j["pairs"], 4);
  EXPECT_EQ(j["unlabeled"], 16);
  EXPECT_EQ(j["probe_test"], 4);
  EXPECT_TRUE(fs::exists(corpus / "spec.resolved.json"));
  EXPECT_TRUE(fs::exists(corpus / "pairs.jsonl"));
  EXPECT_TRUE(fs::exists(corpus / "images" / "p0a.ppm"));

  // train-teacher
  j = parse_single_line(
      run("train-teacher --pairs " + (corpus / "pairs.jsonl").string() +
          " --out " + (rund / "teacher.ckpt").string() + model_flags +
          " --train.epochs 2 --train.batch_size 4"));
  EXPECT_EQ(j["epochs"], 2);
  EXPECT_TRUE(j["final_epoch_loss"].is_number());
  EXPECT_TRUE(fs::exists(rund / "teacher.ckpt"));
  EXPECT_EQ(line_count(rund / "metrics.jsonl"), 2u);
  const std::string resolved = slurp(rund / "config.resolved");
  EXPECT_NE(resolved.find("backbone.input_size = 16"), std::string::npos);
  EXPECT_NE(resolved.find("backbone.block_channels = 4,8"), std::string::npos);
  EXPECT_NE(resolved.find("train.epochs = 2"), std::string::npos);

  // pseudolabel
  j = parse_single_line(
      run("pseudolabel --ckpt " + (rund / "teacher.ckpt").string() +
          " --images " + (corpus / "unlabeled.jsonl").string() + " --out " +
          (rund / "store").string()));
  EXPECT_EQ(j["count"], 16);
  EXPECT_EQ(j["dim"], 8);
  EXPECT_TRUE(fs::exists(rund / "store" / "index.tsv"));

  // train-student
  j = parse_single_line(
      run("train-student --pairs " + (corpus / "pairs.jsonl").string() +
          " --pseudo " + (rund / "store").string() + " --images " +
          (corpus / "unlabeled.jsonl").string() + " --out " +
          (rund / "student" / "student.ckpt").string() + model_flags +
          " --train.epochs 1 --train.batch_size 8 --train.pseudo_fraction 0.5"));
  EXPECT_EQ(j["epochs"], 1);
  EXPECT_TRUE(fs::exists(rund / "student" / "student.ckpt"));
  EXPECT_EQ(line_count(rund / "student" / "metrics.jsonl"), 1u);

  // embed with labels
  j = parse_single_line(
      run("embed --ckpt " + (rund / "teacher.ckpt").string() + " --images " +
          (corpus / "probe_train.jsonl").string() + " --out " +
          (rund / "emb.tnsr").string() + " --labels-out " +
          (rund / "labels.txt").string()));
  EXPECT_EQ(j["n"], 2);
  EXPECT_EQ(j["dim"], 8);
  EXPECT_EQ(slurp(rund / "labels.txt"), "4\n5\n");

  // fit-lr on the two one-shot rows, then eval on the same rows
  j = parse_single_line(
      run("fit-lr --embeddings " + (rund / "emb.tnsr").string() +
          " --labels " + (rund / "labels.txt").string() + " --out " +
          (rund / "probe.ckpt").string()));
  EXPECT_EQ(j["k"], 2);
  EXPECT_DOUBLE_EQ(j["train_accuracy"].get<double>(), 1.0);

  j = parse_single_line(run("eval --model " + (rund / "probe.ckpt").string() +
                            " --embeddings " + (rund / "emb.tnsr").string() +
                            " --labels " + (rund / "labels.txt").string()));
  EXPECT_DOUBLE_EQ(j["accuracy"].get<double>(), 1.0);
  EXPECT_EQ(j["n"], 2);

  // Exit-code taxonomy against the same artifacts: bad settings are usage
  // errors, unreadable data is a data error.
  EXPECT_EQ(run("train-teacher --pairs " + (corpus / "pairs.jsonl").string() +
                " --out " + (rund / "x.ckpt").string() + model_flags +
                " --train.batch_size 3")
                .code,
            1);
  EXPECT_EQ(run("train-teacher --pairs " + (corpus / "absent.jsonl").string() +
                " --out " + (rund / "x.ckpt").string() + model_flags)
                .code,
            2);
  const RunResult unlabeled_labels =
      run("embed --ckpt " + (rund / "teacher.ckpt").string() + " --images " +
          (corpus / "unlabeled.jsonl").string() + " --out " +
          (rund / "u.tnsr").string() + " --labels-out " +
          (rund / "u_labels.txt").string());
  EXPECT_EQ(unlabeled_labels.code, 2);
  EXPECT_NE(unlabeled_labels.err.find("class_id"), std::string::npos);

  // A learning rate large enough to overflow the second block's float
  // activations drives the embeddings non-finite; that must surface as a
  // training failure, not a usage or data error.
  const RunResult diverged =
      run("train-teacher --pairs " + (corpus / "pairs.jsonl").string() +
          " --out " + (rund / "x.ckpt").string() + model_flags +
          " --train.epochs 3 --train.learning_rate 1e30");
  EXPECT_EQ(diverged.code, 3);
}

TEST_F(CliTest, ConfigFileFeedsTrainingAndBadKeysFail) {
  const fs::path corpus = dir_ / "corpus2";
  std::ofstream(dir_ / "spec2.json")
      << R"({"n_classes": 2, "images_per_class": 2, "unlabeled_per_class": 1,)"
      << R"( "probe_classes": 2, "side": 16, "seed": 5})";
  ASSERT_EQ(run("gen-data --spec " + (dir_ / "spec2.json").string() +
                " --out " + corpus.string())
                .code,
            0);

  std::ofstream(dir_ / "train.conf")
      << "backbone.input_size = 16\n"
         "backbone.block_channels = 4,8\n"
         "train.epochs = 1\n"
         "train.batch_size = 4\n";
  const RunResult ok =
      run("train-teacher --config " + (dir_ / "train.conf").string() +
          " --pairs " + (corpus / "pairs.jsonl").string() + " --out " +
          (dir_ / "conf_run" / "t.ckpt").string());
  EXPECT_EQ(ok.code, 0) << ok.err;
  const std::string resolved = slurp(dir_ / "conf_run" / "config.resolved");
  EXPECT_NE(resolved.find("train.epochs = 1"), std::string::npos);

  // CLI override beats the file for the same key.
  const RunResult over =
      run("train-teacher --config " + (dir_ / "train.conf").string() +
          " --train.epochs 2 --pairs " + (corpus / "pairs.jsonl").string() +
          " --out " + (dir_ / "conf_run2" / "t.ckpt").string());
  EXPECT_EQ(over.code, 0) << over.err;
  EXPECT_NE(slurp(dir_ / "conf_run2" / "config.resolved")
                .find("train.epochs = 2"),
            std::string::npos);

  std::ofstream(dir_ / "bad.conf") << "mystery = 1\n";
  const RunResult bad =
      run("train-teacher --config " + (dir_ / "bad.conf").string() +
          " --pairs " + (corpus / "pairs.jsonl").string() + " --out " +
          (dir_ / "bad.ckpt").string());
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("unknown key 'mystery'"), std::string::npos);
}

TEST_F(CliTest, BadSpecIsAUsageError) {
  std::ofstream(dir_ / "bad_spec.json") << R"({"n_classes": 1})";
  const RunResult r = run("gen-data --spec " +
                          (dir_ / "bad_spec.json").string() + " --out " +
                          (dir_ / "never").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("at least 2"), std::string::npos);
}

TEST_F(CliTest, LcaBenchReportsASpeedup) {
  const auto j =
      parse_single_line(run("lca-bench --h 6 --w 6 --c 2 --iters 2"));
  EXPECT_TRUE(j["fast_ns_per_call"].is_number());
  EXPECT_TRUE(j["naive_ns_per_call"].is_number());
  EXPECT_TRUE(j["speedup"].is_number());
  EXPECT_EQ(run("lca-bench --h 0").code, 1);
}

}  // namespace
