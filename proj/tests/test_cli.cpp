#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "minflip/cli.hpp"
#include "minflip/io.hpp"
#include "minflip/metrics.hpp"

using namespace minflip;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("minflip_cli_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

double parse_summary_s(const std::string& out) {
  const std::size_t pos = out.rfind("S=");
  REQUIRE(pos != std::string::npos);
  return std::stod(out.substr(pos + 2));
}

}  // namespace

TEST_CASE("cli rejects unknown input") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  const CliResult bad_flag = cli({"gen-data", "--out", "x.csv", "--bogus", "1"});
  CHECK(bad_flag.code == 1);
  CHECK(bad_flag.err.find("Usage") != std::string::npos);
  const CliResult help = cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("gen-data") != std::string::npos);
}

TEST_CASE("cli end-to-end desk flow: gen, train, attack, evaluate, report") {
  TempDir dir;
  const std::string data = dir.file("data.csv");
  const std::string model = dir.file("model.json");
  const std::string adv = dir.file("adv.csv");
  const std::string metrics = dir.file("metrics.csv");

  CHECK(cli({"gen-data", "--out", data, "--n", "16", "--dim", "10", "--margin", "2.0",
             "--noise", "0.4", "--seed", "3"}).code == 0);

  const CliResult train = cli({"train-surrogate", "--data", data, "--out", model,
                               "--hidden", "8,4", "--seed", "3"});
  CHECK(train.code == 0);
  CHECK(train.out.find("train accuracy 1") != std::string::npos);

  const CliResult attack =
      cli({"attack", "--model", model, "--data", data, "--out", adv, "--metrics", metrics,
           "--mode", "full", "--rounds", "4", "--runs", "12", "--steps", "150",
           "--followup-steps", "30", "--seed", "9"});
  CHECK(attack.code == 0);
  CHECK(attack.out.find("FR=") != std::string::npos);

  const CliResult eval = cli({"evaluate", "--model", model, "--data", data, "--adv", adv});
  CHECK(eval.code == 0);
  // evaluate recomputes from files; it must reproduce the attack's S exactly
  // (the CSV stores full-precision doubles).
  CHECK(parse_summary_s(eval.out) == doctest::Approx(parse_summary_s(attack.out)).epsilon(1e-12));

  const CliResult report = cli({"report", "--metrics", metrics});
  CHECK(report.code == 0);
  CHECK(report.out.find("rounds=4") != std::string::npos);
}

TEST_CASE("cli evaluate on an identity attack prints the zero summary") {
  TempDir dir;
  const std::string data = dir.file("data.csv");
  const std::string model = dir.file("model.json");
  const std::string adv = dir.file("adv.csv");

  REQUIRE(cli({"gen-data", "--out", data, "--n", "10", "--dim", "6", "--seed", "1"}).code == 0);
  REQUIRE(cli({"train-surrogate", "--data", data, "--out", model, "--hidden", "6",
               "--seed", "1"}).code == 0);
  // x_adv = x: strip the label column by saving the loaded features.
  const Dataset d = load_dataset(data);
  save_adversarial(d.features, adv);

  const CliResult eval = cli({"evaluate", "--model", model, "--data", data, "--adv", adv});
  CHECK(eval.code == 0);
  CHECK(eval.out == "FR=0 D=— S=0\n");
}

TEST_CASE("cli attack with zero rounds returns the input data") {
  TempDir dir;
  const std::string data = dir.file("data.csv");
  const std::string model = dir.file("model.json");
  const std::string adv = dir.file("adv.csv");

  REQUIRE(cli({"gen-data", "--out", data, "--n", "8", "--dim", "5", "--seed", "2"}).code == 0);
  REQUIRE(cli({"train-surrogate", "--data", data, "--out", model, "--hidden", "4",
               "--seed", "2"}).code == 0);
  const CliResult attack = cli({"attack", "--model", model, "--data", data, "--out", adv,
                                "--mode", "full", "--rounds", "0", "--seed", "4"});
  CHECK(attack.code == 0);
  CHECK(attack.out.find("FR=0") != std::string::npos);
  CHECK(attack.out.find("S=0") != std::string::npos);

  const Dataset d = load_dataset(data);
  CHECK(load_matrix_csv(adv) == d.features);
}

TEST_CASE("cli attack modes single-round and core run end to end") {
  TempDir dir;
  const std::string data = dir.file("data.csv");
  const std::string model = dir.file("model.json");

  REQUIRE(cli({"gen-data", "--out", data, "--n", "10", "--dim", "8", "--margin", "2.0",
               "--seed", "5"}).code == 0);
  REQUIRE(cli({"train-surrogate", "--data", data, "--out", model, "--hidden", "6",
               "--seed", "5"}).code == 0);

  const CliResult single =
      cli({"attack", "--model", model, "--data", data, "--out", dir.file("adv1.csv"),
           "--mode", "single-round", "--rounds", "99", "--runs", "12", "--steps", "100",
           "--followup-steps", "20", "--metrics", dir.file("m1.csv"), "--seed", "7"});
  CHECK(single.code == 0);
  CHECK(load_metrics_csv(dir.file("m1.csv")).size() == 1);  // rounds forced to 1

  const CliResult core = cli({"attack", "--model", model, "--data", data, "--out",
                              dir.file("adv2.csv"), "--mode", "core", "--seed", "7"});
  CHECK(core.code == 0);
  CHECK(load_matrix_csv(dir.file("adv2.csv")).rows() == 10);
}

TEST_CASE("cli checkpoint resume continues a campaign") {
  TempDir dir;
  const std::string data = dir.file("data.csv");
  const std::string model = dir.file("model.json");
  const std::string ckpt = dir.file("ckpt.json");

  REQUIRE(cli({"gen-data", "--out", data, "--n", "8", "--dim", "5", "--margin", "2.0",
               "--seed", "6"}).code == 0);
  REQUIRE(cli({"train-surrogate", "--data", data, "--out", model, "--hidden", "4",
               "--seed", "6"}).code == 0);

  const std::vector<std::string> base = {
      "attack", "--model", model, "--data", data, "--runs", "12",
      "--steps", "80", "--followup-steps", "15", "--seed", "8"};

  // One uninterrupted 3-round campaign.
  std::vector<std::string> full = base;
  full.insert(full.end(), {"--out", dir.file("a_full.csv"), "--rounds", "3"});
  REQUIRE(cli(full).code == 0);

  // The same campaign split 2 + 1 via the checkpoint.
  std::vector<std::string> part1 = base;
  part1.insert(part1.end(), {"--out", dir.file("a_p1.csv"), "--rounds", "2",
                             "--checkpoint", ckpt});
  REQUIRE(cli(part1).code == 0);
  std::vector<std::string> part2 = base;
  part2.insert(part2.end(), {"--out", dir.file("a_p2.csv"), "--rounds", "3",
                             "--checkpoint", ckpt});
  const CliResult resumed = cli(part2);
  REQUIRE(resumed.code == 0);
  CHECK(resumed.out.find("resuming from checkpoint at round 2") != std::string::npos);

  CHECK(load_matrix_csv(dir.file("a_p2.csv")) == load_matrix_csv(dir.file("a_full.csv")));
}

TEST_CASE("cli maps error classes to exit codes") {
  TempDir dir;
  // Validation problem: missing file.
  const CliResult missing = cli({"evaluate", "--model", dir.file("nope.json"), "--data",
                                 dir.file("nope.csv"), "--adv", dir.file("nope2.csv")});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("error:") != std::string::npos);

  // Validation problem: single-class training data.
  const std::string data = dir.file("mono.csv");
  std::ofstream out(data);
  out << "f0,f1,label\n1,2,1\n3,4,1\n";
  out.close();
  const CliResult mono = cli({"train-surrogate", "--data", data, "--out", dir.file("m.json")});
  CHECK(mono.code == 1);
  CHECK(mono.err.find("labels contain one class") != std::string::npos);
}
