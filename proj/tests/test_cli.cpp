#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "support.hpp"
#include "vgmt/binary_io.hpp"
#include "vgmt/cli.hpp"

using namespace vgmt;
using vgmt::testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

std::string slurp(const fs::path& p) { return read_file_bytes(p); }

const char* kTinyConfig = R"({
  "d_emb": 16, "d_h": 16, "d_dec": 32, "d_feat": 8, "d_common": 16, "d_att": 16,
  "dropout": 0.0, "lr": 0.01, "batch_size": 16, "max_epochs": 6, "patience": 6,
  "min_freq": 1, "beam": 3, "max_len": 10
})";

}  // namespace

TEST_CASE("evaluate scores identical files at 1") {
  const auto dir = scratch_dir("cli_eval");
  write(dir / "h.txt", "a man is cooking rice .\nthe dog runs in the park\n");
  const auto o = cli({"evaluate", "--hyp", (dir / "h.txt").string(), "--ref", (dir / "h.txt").string()});
  REQUIRE(o.code == kExitOk);
  const auto j = nlohmann::json::parse(o.out);
  CHECK(j["bleu"].get<double>() == doctest::Approx(1.0));
  CHECK(j["brevity_penalty"].get<double>() == 1.0);
}

TEST_CASE("evaluate rejects misaligned references") {
  const auto dir = scratch_dir("cli_eval_bad");
  write(dir / "h.txt", "a b c d\n");
  write(dir / "r.txt", "a b c d\ne f g h\n");
  const auto o = cli({"evaluate", "--hyp", (dir / "h.txt").string(), "--ref", (dir / "r.txt").string()});
  CHECK(o.code == kExitData);
  CHECK(o.err.find("1 lines") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
  SUBCASE("no subcommand") { CHECK(cli({}).code == kExitUsage); }
  SUBCASE("unknown flag") { CHECK(cli({"evaluate", "--bogus"}).code == kExitUsage); }
  SUBCASE("synth without a seed") {
    const auto o = cli({"synth", "--out", scratch_dir("cli_noseed").string()});
    CHECK(o.code == kExitUsage);
    CHECK(o.err.find("seed") != std::string::npos);
  }
  SUBCASE("train without a seed") {
    const auto dir = scratch_dir("cli_train_noseed");
    const auto o = cli({"train", "--data", "x.jsonl", "--valid", "y.jsonl", "--out", dir.string()});
    CHECK(o.code == kExitUsage);
    CHECK(o.err.find("seed") != std::string::npos);
  }
  SUBCASE("unknown config key") {
    const auto dir = scratch_dir("cli_badkey");
    write(dir / "c.json", R"({"d_hidden": 3})");
    const auto o = cli({"train", "--config", (dir / "c.json").string(), "--seed", "1"});
    CHECK(o.code == kExitUsage);
    CHECK(o.err.find("d_hidden") != std::string::npos);
  }
  SUBCASE("help is not an error") {
    std::ostringstream out, err;
    CHECK(run({"--help"}, out, err) == kExitOk);
    CHECK(out.str().find("translate") != std::string::npos);
  }
}

TEST_CASE("bad feature files exit 2 with a byte offset") {
  const auto dir = scratch_dir("cli_badfeat");
  write(dir / "bad.vgmf", "XXXX0000000000000000");
  auto o = cli({"inspect", (dir / "bad.vgmf").string()});
  CHECK(o.code == kExitData);
  CHECK(o.err.find("byte offset 0") != std::string::npos);

  REQUIRE(cli({"synth", "--mode", "copy", "--n", "1", "--seed", "3", "--dfeat", "4", "--out", dir.string()}).code ==
          kExitOk);
  const auto good = dir / "feats" / "ex0.vgmf";
  const auto bytes = slurp(good);
  write(dir / "short.vgmf", bytes.substr(0, bytes.size() - 3));
  o = cli({"inspect", (dir / "short.vgmf").string()});
  CHECK(o.code == kExitData);
  CHECK(o.err.find("byte offset") != std::string::npos);
}

TEST_CASE("malformed JSONL exits 2 with a line number") {
  const auto dir = scratch_dir("cli_badjsonl");
  write(dir / "d.jsonl", "{\"id\": \"a\", \"src\": \"x\"}\n{\"id\": \"b\", \"src\": }\n");
  const auto o = cli({"inspect", (dir / "d.jsonl").string()});
  CHECK(o.code == kExitData);
  CHECK(o.err.find("d.jsonl:2:") != std::string::npos);
}

TEST_CASE("inspect summarises datasets and features") {
  const auto dir = scratch_dir("cli_inspect");
  REQUIRE(cli({"synth", "--mode", "order", "--n", "3", "--vocab", "2", "--len", "4", "--dfeat", "6", "--seed", "1",
               "--out", dir.string()})
              .code == kExitOk);
  auto o = cli({"inspect", (dir / "data.jsonl").string()});
  CHECK(o.code == kExitOk);
  CHECK(o.out.find("examples 3") != std::string::npos);
  o = cli({"inspect", "--data", (dir / "feats" / "ex0.vgmf").string()});
  CHECK(o.code == kExitOk);
  CHECK(o.out.find("rows 4\ncols 6") != std::string::npos);
}

TEST_CASE("synth, train, translate and evaluate on a copy task") {
  const auto dir = scratch_dir("cli_pipeline");
  REQUIRE(cli({"synth", "--mode", "copy", "--n", "200", "--vocab", "8", "--len", "4", "--dfeat", "8", "--seed", "1",
               "--out", (dir / "train").string()})
              .code == kExitOk);
  REQUIRE(cli({"synth", "--mode", "copy", "--n", "30", "--vocab", "8", "--len", "4", "--dfeat", "8", "--seed", "2",
               "--prefix", "v", "--out", (dir / "valid").string()})
              .code == kExitOk);
  write(dir / "config.json", kTinyConfig);
  const auto train_out = cli({"train", "--config", (dir / "config.json").string(), "--data",
                              (dir / "train" / "data.jsonl").string(), "--valid", (dir / "valid" / "data.jsonl").string(),
                              "--out", (dir / "run").string(), "--seed", "5"});
  REQUIRE_MESSAGE(train_out.code == kExitOk, train_out.err);
  for (const char* f : {"model.ckpt", "config.json", "src.vocab", "tgt.vocab", "train_log.jsonl"})
    CHECK(fs::exists(dir / "run" / f));
  const auto log = slurp(dir / "run" / "train_log.jsonl");
  const auto first = nlohmann::json::parse(log.substr(0, log.find('\n')));
  CHECK(first["epoch"] == 1);
  CHECK(first.contains("clipped_frac"));

  const auto ckpt = (dir / "run" / "model.ckpt").string();
  const auto valid = (dir / "valid" / "data.jsonl").string();
  auto o = cli({"translate", "--model", ckpt, "--data", valid, "--out", (dir / "single.txt").string()});
  REQUIRE_MESSAGE(o.code == kExitOk, o.err);
  o = cli({"translate", "--model", ckpt, "--model", ckpt, "--data", valid, "--out", (dir / "pair.txt").string(),
           "--jobs", "2"});
  REQUIRE(o.code == kExitOk);
  CHECK(slurp(dir / "single.txt") == slurp(dir / "pair.txt"));

  o = cli({"evaluate", "--hyp", (dir / "single.txt").string(), "--data", valid});
  REQUIRE(o.code == kExitOk);
  CHECK(nlohmann::json::parse(o.out)["bleu"].get<double>() > 0.5);

  o = cli({"inspect", ckpt});
  CHECK(o.code == kExitOk);
  CHECK(o.out.find("parameters ") != std::string::npos);
}

TEST_CASE("translate reports a missing feature file and exits 2") {
  const auto dir = scratch_dir("cli_missing_feat");
  REQUIRE(cli({"synth", "--mode", "copy", "--n", "40", "--vocab", "5", "--len", "3", "--dfeat", "8", "--seed", "1",
               "--out", dir.string()})
              .code == kExitOk);
  write(dir / "config.json", kTinyConfig);
  const auto data = (dir / "data.jsonl").string();
  REQUIRE(cli({"train", "--config", (dir / "config.json").string(), "--data", data, "--valid", data, "--out",
               (dir / "run").string(), "--seed", "1", "--epochs", "1"})
              .code == kExitOk);
  fs::remove(dir / "feats" / "ex1.vgmf");
  const auto o = cli({"translate", "--model", (dir / "run" / "model.ckpt").string(), "--data", data});
  CHECK(o.code == kExitData);
  CHECK(o.err.find("ex1") != std::string::npos);
  // The other examples are still translated, one line each.
  CHECK(std::count(o.out.begin(), o.out.end(), '\n') == 40);
}

TEST_CASE("the installed binary propagates exit codes") {
  const std::string bin = VGMT_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(bin + " --help") == 0);
  CHECK(status(bin + " synth") == 1);
  const auto dir = scratch_dir("cli_binary");
  write(dir / "bad.vgmf", "nope");
  CHECK(status(bin + " inspect " + (dir / "bad.vgmf").string()) == 2);
}
