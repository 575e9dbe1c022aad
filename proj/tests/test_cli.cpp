#include "doctest.h"
#include "oracles.hpp"

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = OCS_CLI_PATH;

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = (env.empty() ? "" : "env " + env + " ") + "\"" + kCli + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

struct Fixture {
  fs::path root, data, bundle;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f;
    f.root = oracle::temp_dir("cli");
    f.data = f.root / "data";
    f.bundle = f.root / "bundle";
    REQUIRE(run("synth --d 16 --k-true 3 --n-id 80 --n-ood 60 --seed 2 --out " + q(f.data)) == 0);
    REQUIRE(run("fit --data " + q(f.data / "id") + " --variance 0.95 --out " + q(f.bundle)) == 0);
    return f;
  }();
  return f;
}

nlohmann::json score_meta(const std::string& extra, const std::string& env = "") {
  const auto& f = fixture();
  const auto out = oracle::temp_dir("clis");
  REQUIRE(run("score --model " + q(f.bundle) + " --data " + q(f.data / "ood") + " --out " + q(out) + " " + extra, env) == 0);
  return read_json(out / "meta.json");
}

}  // namespace

TEST_CASE("full pipeline through the command line") {
  const auto& f = fixture();
  CHECK(read_json(f.bundle / "meta.json")["k"] == 3);
  const auto sid = f.root / "s_id", sood = f.root / "s_ood", ev = f.root / "eval";
  CHECK(run("score --model " + q(f.bundle) + " --data " + q(f.data / "id") + " --scorer pocs --t 1 --seed 7 --out " + q(sid)) == 0);
  CHECK(run("score --model " + q(f.bundle) + " --data " + q(f.data / "ood") + " --scorer pocs --t 1 --seed 7 --out " + q(sood)) == 0);
  CHECK(run("eval --id " + q(sid / "scores.csv") + " --ood " + q(sood / "scores.csv") + " --bins 10 --out " + q(ev)) == 0);
  CHECK(read_json(ev / "report.json")["auroc"] == 1.0);
  CHECK(run("ablate-t --model " + q(f.bundle) + " --id " + q(f.data / "id") + " --ood " + q(f.data / "ood") +
            " --t-list 0,1,2 --out " + q(f.root / "abl")) == 0);
  CHECK(fs::exists(f.root / "abl" / "ablation.csv"));
  CHECK(run("diagnose --model " + q(f.bundle) + " --id " + q(f.data / "id") + " --ood " + q(f.data / "ood") +
            " --out " + q(f.root / "diag")) == 0);
  CHECK(fs::exists(f.root / "diag" / "variance_complement.csv"));
}

TEST_CASE("usage errors exit with 2") {
  const auto& f = fixture();
  CHECK(run("fit --data " + q(f.data / "id") + " --k 0 --out " + q(f.root / "k0")) == 2);
  CHECK(run("fit --data " + q(f.data / "id") + " --k 2 --variance 0.9 --out " + q(f.root / "both")) == 2);
  CHECK(run("ablate-t --model " + q(f.bundle) + " --id " + q(f.data / "id") + " --ood " + q(f.data / "ood") +
            " --t-list 0,-1 --out " + q(f.root / "neg")) == 2);
  CHECK(run("score --model " + q(f.bundle) + " --data " + q(f.data / "ood") + " --sharing sometimes --out " +
            q(f.root / "sh")) == 2);
  CHECK(run("score --model " + q(f.bundle) + " --data " + q(f.data / "ood") + " --epsilon 2 --out " + q(f.root / "e2")) == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("") == 2);
  CHECK(run("--help") == 0);
  CHECK(run("score --help") == 0);
}

TEST_CASE("runtime errors exit with 1") {
  const auto& f = fixture();
  CHECK(run("fit --data " + q(f.root / "absent") + " --out " + q(f.root / "x")) == 1);
  CHECK(run("score --model " + q(f.root / "absent") + " --data " + q(f.data / "ood") + " --out " + q(f.root / "y")) == 1);
  // scores from different scorers cannot be compared
  const auto a = f.root / "mix_a", b = f.root / "mix_b";
  REQUIRE(run("score --model " + q(f.bundle) + " --data " + q(f.data / "id") + " --scorer msp --out " + q(a)) == 0);
  REQUIRE(run("score --model " + q(f.bundle) + " --data " + q(f.data / "ood") + " --scorer energy --out " + q(b)) == 0);
  CHECK(run("eval --id " + q(a / "scores.csv") + " --ood " + q(b / "scores.csv") + " --out " + q(f.root / "z")) == 1);
}

TEST_CASE("flag beats config beats environment beats default") {
  const auto& f = fixture();
  const auto cfg = f.root / "run.cfg";
  std::ofstream(cfg) << "# perturbation settings\nepsilon = 0.3\nsharing = per-sample\n";

  CHECK(score_meta("")["perturbation"]["epsilon"] == 0.1);
  CHECK(score_meta("", "OCS_EPSILON=0.2")["perturbation"]["epsilon"] == 0.2);
  const auto from_cfg = score_meta("--config " + q(cfg), "OCS_EPSILON=0.2 OCS_DELTA=0.05");
  CHECK(from_cfg["perturbation"]["epsilon"] == 0.3);
  CHECK(from_cfg["perturbation"]["delta"] == 0.05);
  CHECK(from_cfg["perturbation"]["sharing"] == "per-sample");
  const auto from_flag = score_meta("--epsilon 0.7 --config " + q(cfg), "OCS_EPSILON=0.2");
  CHECK(from_flag["perturbation"]["epsilon"] == 0.7);
}

TEST_CASE("identical score runs produce identical files") {
  const auto& f = fixture();
  const auto a = f.root / "rep_a", b = f.root / "rep_b";
  const std::string common = "score --model " + q(f.bundle) + " --data " + q(f.data / "ood") + " --t 2 --seed 9 --out ";
  REQUIRE(run(common + q(a)) == 0);
  REQUIRE(run(common + q(b) + " --threads 3") == 0);
  CHECK(oracle::file_bytes(a / "scores.csv") == oracle::file_bytes(b / "scores.csv"));
  CHECK(oracle::file_bytes(a / "scores.jsonl") == oracle::file_bytes(b / "scores.jsonl"));
}
