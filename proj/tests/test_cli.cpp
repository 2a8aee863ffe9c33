#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "ladder_cli_test";
const std::string kSmall = " --n 300 --n-validation 50 --n-test 100";
const std::string kQuick = " --epochs 2 --batch-size 32 --embed-dim 8";

struct Run {
  int status;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run cli(const std::string& args) {
  const auto out = kRoot / "stdout.txt", err = kRoot / "stderr.txt";
  const std::string cmd = std::string(LADDER_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

std::string path(const char* sub) { return (kRoot / sub).string(); }

struct Fixture {
  Fixture() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
};

std::vector<std::string> column(const std::string& csv, std::size_t col) {
  std::vector<std::string> out;
  std::stringstream lines(csv);
  std::string line;
  while (std::getline(lines, line)) {
    std::stringstream cells(line);
    std::string cell;
    for (std::size_t i = 0; i <= col && std::getline(cells, cell, ','); ++i) {
    }
    out.push_back(cell);
  }
  return out;
}

template <typename T>
void write_blob(const fs::path& p, const std::vector<T>& values) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(T)));
}

}  // namespace

TEST_CASE_FIXTURE(Fixture, "usage errors exit with status 2") {
  CHECK(cli("").status == 2);
  CHECK(cli("frobnicate").status == 2);
  CHECK(cli("train --out " + path("x")).status == 2);  // --data missing
  CHECK(cli("gen --out " + path("g") + " --relevance maybe").status == 2);
  CHECK(cli("--help").status == 0);
}

TEST_CASE_FIXTURE(Fixture, "gen: determinism, invalid spec, round trip") {
  REQUIRE(cli("gen --seed 3 --out " + path("a") + kSmall).status == 0);
  REQUIRE(cli("gen --seed 3 --out " + path("b") + kSmall).status == 0);
  REQUIRE(cli("gen --seed 4 --out " + path("c") + kSmall).status == 0);
  for (const char* f : {"x.bin", "y.bin", "relevance.bin", "manifest", "texts"}) {
    CHECK(slurp(kRoot / "a" / f) == slurp(kRoot / "b" / f));
  }
  CHECK(slurp(kRoot / "a" / "x.bin") != slurp(kRoot / "c" / "x.bin"));
  CHECK(fs::exists(kRoot / "a" / "word_vectors.txt"));
  CHECK(json::parse(slurp(kRoot / "a" / "gen_config.json"))["synthetic"]["seed"] == 3);

  const auto r = cli("gen --out " + path("bad") + " --n 10 --n-test 20");
  CHECK(r.status == 2);
  CHECK(r.err.find("error") != std::string::npos);

  REQUIRE(cli("gen --seed 3 --relevance cbow --out " + path("cbow") + kSmall).status == 0);
  CHECK(json::parse(slurp(kRoot / "cbow" / "manifest"))["relevance_scale"] == "cbow-cosine");
}

TEST_CASE_FIXTURE(Fixture, "train writes every artifact; beta_2 = 0 matches triplet-sum") {
  REQUIRE(cli("gen --seed 1 --out " + path("d") + kSmall).status == 0);
  REQUIRE(cli("train --data " + path("d") + " --out " + path("lad") + kQuick + " --loss ladder --beta2 0").status == 0);
  REQUIRE(cli("train --data " + path("d") + " --out " + path("tri") + kQuick + " --loss triplet-sum").status == 0);
  for (const char* f : {"checkpoint/manifest", "log.csv", "timing.csv", "config.json"}) {
    CHECK(fs::exists(kRoot / "lad" / f));
  }
  const auto a = slurp(kRoot / "lad" / "log.csv"), b = slurp(kRoot / "tri" / "log.csv");
  CHECK(column(a, 2) == column(b, 2));
  CHECK(column(a, 3) == column(b, 3));
  CHECK(column(a, 2).size() == 3);

  // Reproducible from flags + seed.
  REQUIRE(cli("train --data " + path("d") + " --out " + path("tri2") + kQuick + " --loss triplet-sum").status == 0);
  CHECK(slurp(kRoot / "tri2" / "log.csv") == b);
  CHECK(slurp(kRoot / "tri2" / "checkpoint" / "query_weight.bin") == slurp(kRoot / "tri" / "checkpoint" / "query_weight.bin"));
}

TEST_CASE_FIXTURE(Fixture, "train: config file, flag override, echoed config") {
  REQUIRE(cli("gen --seed 1 --out " + path("d") + kSmall).status == 0);
  std::ofstream(kRoot / "cfg.json") << R"({"train": {"epochs": 5, "batch_size": 32, "embed_dim": 8, "loss": "triplet-hardest"}})";
  REQUIRE(cli("train --config " + path("cfg.json") + " --epochs 1 --data " + path("d") + " --out " + path("t")).status == 0);
  const auto echo = json::parse(slurp(kRoot / "t" / "config.json"));
  CHECK(echo["train"]["epochs"] == 1);
  CHECK(echo["train"]["loss"] == "triplet-hardest");
  CHECK(echo["train"]["batch_size"] == 32);

  std::ofstream(kRoot / "bad.json") << R"({"train": {"epocs": 5}})";
  CHECK(cli("train --config " + path("bad.json") + " --data " + path("d") + " --out " + path("t2")).status == 2);
}

TEST_CASE_FIXTURE(Fixture, "train: ladder loss without relevance is a config error") {
  REQUIRE(cli("gen --relevance none --out " + path("d") + kSmall).status == 0);
  const auto r = cli("train --data " + path("d") + " --out " + path("t") + kQuick + " --loss ladder-hc");
  CHECK(r.status == 2);
  CHECK(r.err.find("relevance") != std::string::npos);
  CHECK(cli("train --data " + path("d") + " --out " + path("t") + kQuick + " --loss triplet-hardest").status == 0);
  CHECK(cli("train --data " + path("missing") + " --out " + path("t") + kQuick).status == 3);
}

TEST_CASE_FIXTURE(Fixture, "eval: report files, keys and reparse") {
  REQUIRE(cli("gen --seed 1 --out " + path("d") + kSmall).status == 0);
  REQUIRE(cli("train --data " + path("d") + " --out " + path("t") + kQuick).status == 0);
  const auto r = cli("eval --data " + path("d") + " --checkpoint " + path("t/checkpoint") + " --ks 10,100 --out " + path("e"));
  REQUIRE(r.status == 0);
  const auto report = json::parse(slurp(kRoot / "e" / "report.json"));
  REQUIRE(report.size() == 2);
  for (const auto& d : report) {
    for (const char* key : {"direction", "K", "cs_mean", "r1", "r5", "r10", "mean_rank", "n_queries"}) {
      CHECK(d.contains(key));
    }
    CHECK(d["n_queries"] == 100);
    CHECK(d["K"] == json::array({10, 100}));
  }
  CHECK(slurp(kRoot / "e" / "report.txt") == r.out);
  CHECK(r.out.find("direction=x2y K=10") != std::string::npos);

  // K beyond the split is clamped with a warning.
  const auto big = cli("eval --data " + path("d") + " --checkpoint " + path("t/checkpoint") + " --ks 1000 --out " + path("e2"));
  CHECK(big.status == 0);
  CHECK(big.err.find("warning") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "eval: untrained checkpoint scores near zero CS") {
  REQUIRE(cli("gen --seed 2 --out " + path("d") + " --n 1400 --n-validation 200 --n-test 1000").status == 0);
  REQUIRE(cli("train --data " + path("d") + " --out " + path("t") + " --epochs 0").status == 0);
  REQUIRE(cli("eval --data " + path("d") + " --checkpoint " + path("t/checkpoint") + " --ks 100,1000 --out " + path("e")).status == 0);
  const auto report = json::parse(slurp(kRoot / "e" / "report.json"));
  for (const auto& d : report) {
    // A random linear map still carries some latent structure, so allow more
    // slack than for independent random embeddings.
    CHECK(std::abs(d["cs_mean"][1].get<double>()) < 0.5);
    CHECK(d["r1"].get<double>() < 20.0);
  }
}

TEST_CASE_FIXTURE(Fixture, "eval: identity fixture scores perfectly") {
  const int n = 8;
  const fs::path data = kRoot / "ident", ckpt = kRoot / "ident_ckpt";
  fs::create_directories(data);
  fs::create_directories(ckpt);
  std::vector<float> eye(n * n, 0.0f);
  for (int i = 0; i < n; ++i) eye[i * n + i] = 1.0f;
  write_blob(data / "x.bin", eye);
  write_blob(data / "y.bin", eye);
  write_blob(data / "relevance.bin", eye);
  json manifest = {{"format", "ladder-dataset"}, {"version", 1}, {"n", n}, {"d_x", n}, {"d_y", n},
                   {"byte_order", "little-endian"}, {"value_type", "float32"}, {"x", "x.bin"}, {"y", "y.bin"},
                   {"relevance", "relevance.bin"}, {"relevance_scale", "identity"},
                   {"splits", std::vector<std::string>(n, "test")}};
  std::ofstream(data / "manifest") << manifest.dump();

  std::vector<double> weye(n * n, 0.0), zero(n, 0.0);
  for (int i = 0; i < n; ++i) weye[i * n + i] = 1.0;
  write_blob(ckpt / "qw.bin", weye);
  write_blob(ckpt / "cw.bin", weye);
  write_blob(ckpt / "qb.bin", zero);
  write_blob(ckpt / "cb.bin", zero);
  json cm = {{"format", "ladder-checkpoint"}, {"version", 1}, {"byte_order", "little-endian"},
             {"value_type", "float64"}, {"embed_dim", n}, {"d_x", n}, {"d_y", n}, {"epochs_trained", 0},
             {"train_config", {{"embed_dim", n}}}, {"query_weight", "qw.bin"}, {"query_bias", "qb.bin"},
             {"candidate_weight", "cw.bin"}, {"candidate_bias", "cb.bin"}};
  std::ofstream(ckpt / "manifest") << cm.dump();

  REQUIRE(cli("eval --data " + data.string() + " --checkpoint " + ckpt.string() + " --ks 4,8 --out " + path("e")).status == 0);
  for (const auto& d : json::parse(slurp(kRoot / "e" / "report.json"))) {
    CHECK(d["r1"] == 100.0);
    CHECK(d["mean_rank"] == 1.0);
    CHECK(d["cs_mean"][0] == 1.0);
    CHECK(d["cs_mean"][1] == 1.0);
  }
}

TEST_CASE_FIXTURE(Fixture, "sweep: beta_2 and ladder-count arms") {
  const std::string base = " --seeds 2 --ks 10,50" + kSmall + kQuick;
  REQUIRE(cli("sweep --arm-beta2 0,0.25,1 --out " + path("b") + base).status == 0);
  const auto rows = slurp(kRoot / "b" / "sweep.csv");
  const auto summary = slurp(kRoot / "b" / "summary.csv");
  CHECK(column(rows, 0) == std::vector<std::string>{"arm", "beta2=0", "beta2=0", "beta2=0.25", "beta2=0.25", "beta2=1", "beta2=1"});
  CHECK(column(summary, 0) == std::vector<std::string>{"arm", "beta2=0", "beta2=0.25", "beta2=1"});
  CHECK(summary.rfind("arm,seeds,cs@10,cs@50,r1,r5,r10,mean_rank\n", 0) == 0);
  const auto echo = json::parse(slurp(kRoot / "b" / "config.json"));
  CHECK(echo["arms"][1]["train"]["ladder"]["weights"][1] == 0.25);

  REQUIRE(cli("sweep --arm-levels 1,2,3 --out " + path("l") + base).status == 0);
  CHECK(column(slurp(kRoot / "l" / "summary.csv"), 0) == std::vector<std::string>{"arm", "L=1", "L=2", "L=3"});

  // Reruns and parallel arms reproduce the table exactly.
  REQUIRE(cli("sweep --arm-beta2 0,0.25,1 --jobs 3 --out " + path("b2") + base).status == 0);
  CHECK(slurp(kRoot / "b2" / "sweep.csv") == rows);
}

TEST_CASE_FIXTURE(Fixture, "sweep: a single arm matches train + eval") {
  REQUIRE(cli("gen --seed 5 --out " + path("d") + kSmall).status == 0);
  REQUIRE(cli("sweep --data " + path("d") + " --seed 5 --seeds 1 --ks 10 --out " + path("s") + kQuick).status == 0);
  REQUIRE(cli("train --data " + path("d") + " --seed 5 --out " + path("t") + kQuick).status == 0);
  REQUIRE(cli("eval --data " + path("d") + " --checkpoint " + path("t/checkpoint") + " --ks 10 --out " + path("e")).status == 0);
  const auto report = json::parse(slurp(kRoot / "e" / "report.json"));
  const double cs = (report[0]["cs_mean"][0].get<double>() + report[1]["cs_mean"][0].get<double>()) / 2.0;
  const auto cell = column(slurp(kRoot / "s" / "sweep.csv"), 2);
  REQUIRE(cell.size() == 2);
  CHECK(std::stod(cell[1]) == doctest::Approx(cs).epsilon(1e-12));
}

TEST_CASE_FIXTURE(Fixture, "gradcheck: pass, corrupted sentinel, zero probes") {
  REQUIRE(cli("gen --seed 1 --out " + path("d") + kSmall).status == 0);
  const auto pass = cli("gradcheck --data " + path("d") + " --probes 100 --batch-size 32 --embed-dim 8 --out " + path("g"));
  CHECK(pass.status == 0);
  CHECK(pass.out.find("PASS") != std::string::npos);
  const auto report = json::parse(slurp(kRoot / "g" / "gradcheck.json"));
  CHECK(report["probes"] == 100);
  CHECK(report["max_relative_error"].get<double>() < 1e-4);

  const auto bad = cli("gradcheck --data " + path("d") + " --probes 100 --batch-size 32 --corrupt-scale 2");
  CHECK(bad.status == 1);
  CHECK(bad.out.find("FAIL") != std::string::npos);

  const auto none = cli("gradcheck --data " + path("d") + " --probes 0");
  CHECK(none.status == 0);
  CHECK(none.err.find("warning") != std::string::npos);

  REQUIRE(cli("train --data " + path("d") + " --out " + path("t") + kQuick).status == 0);
  CHECK(cli("gradcheck --data " + path("d") + " --checkpoint " + path("t/checkpoint") + " --probes 50").status == 0);
}
