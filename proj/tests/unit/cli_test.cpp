#include "crayon/io.hpp"
#include "world.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <string>

using namespace crayon;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = env + " " + CRAYON_CLI_PATH + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

const char* kTinyConfig = R"({
  "model": {"word_dim": 8, "encoder_hidden": 8, "decoder_hidden": 8, "attr_dim": 4, "style_mlp_hidden": 8,
            "predictor_hidden": 8, "bow_hidden": 8, "encoder_layers": 1},
  "training": {"batch_size": 8, "max_steps": 6, "eval_every": 3, "warmup_steps": 2},
  "rl": {"batch_size": 8, "max_steps": 2, "eval_every": 2, "max_generation_length": 6},
  "generation": {"max_len": 6},
  "min_count": 1
})";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { dir = testkit::scratch_dir("cli"); }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

}  // namespace

TEST_F(Cli, MissingInputFileExits2) {
  write_file(dir / "cfg.json", kTinyConfig);
  auto r = cli("train-ml --train " + (dir / "nope.jsonl").string() + " --resources " + (dir / "nope.json").string() +
                   " --out " + (dir / "m.ckpt").string() + " --config " + (dir / "cfg.json").string(),
               dir);
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.err.find("nope"), std::string::npos);
  r = cli("evaluate --ckpt " + (dir / "nope.ckpt").string() + " --data " + (dir / "nope.jsonl").string(), dir);
  EXPECT_EQ(r.code, 2) << r.err;
  r = cli("train-ml --train x --resources y --out z --config " + (dir / "absent.json").string(), dir);
  EXPECT_EQ(r.code, 2) << r.err;
}

TEST_F(Cli, InvalidConfigExits3) {
  write_file(dir / "bad.json", R"({"training": {"learning_rat": 0.1}})");
  write_file(dir / "broken.json", "{");
  write_file(dir / "range.json", R"({"rl": {"rl_weight": 2}})");
  for (const char* f : {"bad.json", "broken.json", "range.json"}) {
    const auto r = cli("evaluate --ckpt x --data y --config " + (dir / f).string(), dir);
    EXPECT_EQ(r.code, 3) << f << ": " << r.err;
    EXPECT_NE(r.err.find("invalid config"), std::string::npos);
  }
}

TEST_F(Cli, ConfigFromEnvironment) {
  write_file(dir / "bad.json", R"({"mystery": {}})");
  const auto r = cli("evaluate --ckpt x --data y", dir, "CRAYON_CONFIG=" + (dir / "bad.json").string());
  EXPECT_EQ(r.code, 3) << r.err;
  const auto ok = cli("evaluate --ckpt x --data y", dir, "CRAYON_CONFIG=");
  EXPECT_EQ(ok.code, 2) << ok.err;
}

TEST_F(Cli, UsageErrors) {
  EXPECT_NE(cli("", dir).code, 0);
  EXPECT_NE(cli("dance", dir).code, 0);
  const auto r = cli("synth --out " + dir.string() + " --colour red", dir);
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(cli("--help", dir).code, 0);
}

TEST_F(Cli, SynthIsByteIdentical) {
  ASSERT_EQ(cli("synth --size 80 --seed 7 --out " + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(cli("synth --size 80 --seed 7 --out " + (dir / "b").string(), dir).code, 0);
  ASSERT_EQ(cli("synth --size 80 --seed 8 --out " + (dir / "c").string(), dir).code, 0);
  for (const char* f : {"train.jsonl", "valid.jsonl", "test.jsonl", "vectors.txt", "lexicon/positive.txt"}) {
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
  }
  EXPECT_NE(read_file(dir / "a" / "train.jsonl"), read_file(dir / "c" / "train.jsonl"));
}

TEST_F(Cli, EndToEndPipeline) {
  const auto s = dir / "synth", a = dir / "ann";
  write_file(dir / "cfg.json", kTinyConfig);
  const std::string cfg = " --config " + (dir / "cfg.json").string();
  ASSERT_EQ(cli("synth --size 60 --valid 10 --test 10 --out " + s.string(), dir).code, 0);
  const std::string train_before = read_file(s / "train.jsonl");

  auto r = cli("annotate --in " + (s / "train.jsonl").string() + " --valid " + (s / "valid.jsonl").string() +
                   " --test " + (s / "test.jsonl").string() + " --vectors " + (s / "vectors.txt").string() +
                   " --lexicon " + (s / "lexicon").string() + " --out " + a.string() + " --schema " +
                   (dir / "schema.json").string(),
               dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("specificity="), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(read_file(dir / "schema.json"))["attributes"].size(), 5u);
  EXPECT_EQ(read_file(s / "train.jsonl"), train_before);

  r = cli("train-ml --train " + (a / "train.jsonl").string() + " --valid " + (a / "valid.jsonl").string() +
              " --resources " + (a / "resources.json").string() + " --out " + (dir / "ml.ckpt").string() + " --log " +
              (dir / "ml.jsonl").string() + " --seed 3" + cfg,
          dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("\"config\""), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(r.out)["steps"], 6);

  r = cli("train-rl --ckpt " + (dir / "ml.ckpt").string() + " --train " + (a / "train.jsonl").string() + " --valid " +
              (a / "valid.jsonl").string() + " --out " + (dir / "rl.ckpt").string() + " --log " +
              (dir / "rl.jsonl").string() + cfg,
          dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(nlohmann::json::parse(r.out).contains("best_valid_reward"));

  r = cli("evaluate --ckpt " + (dir / "rl.ckpt").string() + " --data " + (a / "test.jsonl").string() +
              " --setting oracle --out " + (dir / "report.json").string() + cfg,
          dir);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* col : {"Q-A", "Len.", "Sent.", "Rel.", "Spe."}) EXPECT_NE(r.out.find(col), std::string::npos) << col;
  const auto report = nlohmann::json::parse(read_file(dir / "report.json"));
  EXPECT_EQ(report["reports"][0]["control_accuracy"].size(), 5u);

  r = cli("probe --ckpt " + (dir / "ml.ckpt").string() + " --data " + (a / "test.jsonl").string() + cfg, dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("probing"), std::string::npos);
}
