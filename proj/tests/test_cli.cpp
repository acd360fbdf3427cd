// End-to-end checks of the gzhybrid binary: exit codes, determinism of
// generated catalogs, config printing. Heavier pipelines live in the
// acceptance suite.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using std::filesystem::path;

namespace {

const char* kCli = GZHYBRID_CLI_PATH;

path workdir() {
  const path dir = std::filesystem::temp_directory_path() / "gzhybrid_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

int run(const std::string& args, const path& log) {
  const std::string cmd = std::string(kCli) + " " + args + " >" + log.string() +
                          " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("gen-data without --out exits with the usage code") {
  const path log = workdir() / "usage.log";
  CHECK(run("gen-data --labelled 10", log) == 2);
}

TEST_CASE("unknown mode exits with the config code") {
  const path dir = workdir() / "data_tiny";
  std::filesystem::remove_all(dir);
  const path log = workdir() / "mode.log";
  REQUIRE(run("gen-data --out " + dir.string() +
                  " --labelled 12 --unlabelled 6 --rings 8 --image-size 16 --seed 3",
              log) == 0);
  CHECK(run("train --data " + dir.string() + " --out " +
                (workdir() / "run_badmode").string() + " --mode sideways",
            log) == 2);
}

TEST_CASE("gen-data is byte-identical across reruns with the same flags") {
  const path a = workdir() / "det_a";
  const path b = workdir() / "det_b";
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
  const path log = workdir() / "det.log";
  const std::string flags =
      " --labelled 14 --unlabelled 7 --rings 6 --image-size 16 --seed 99";
  REQUIRE(run("gen-data --out " + a.string() + flags, log) == 0);
  REQUIRE(run("gen-data --out " + b.string() + flags, log) == 0);
  CHECK(slurp(a / "catalog.csv") == slurp(b / "catalog.csv"));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(slurp(a / "schema.json") == slurp(b / "schema.json"));
  CHECK(slurp(a / "images/gal_000003.ppm") == slurp(b / "images/gal_000003.ppm"));
}

TEST_CASE("--print-config dumps resolved JSON and performs no work") {
  const path out = workdir() / "never_created";
  std::filesystem::remove_all(out);
  const path log = workdir() / "printcfg.log";
  REQUIRE(run("gen-data --out " + out.string() + " --labelled 5 --print-config",
              log) == 0);
  const std::string text = slurp(log);
  CHECK(text.find("\"labelled\": 5") != std::string::npos);
  CHECK(text.find("\"ema_decay\"") != std::string::npos);
  CHECK(!std::filesystem::exists(out));
}

TEST_CASE("train / probe / plot pipeline on a tiny dataset") {
  const path dir = workdir() / "data_pipe";
  const path run_dir = workdir() / "run_pipe";
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(run_dir);
  const path log = workdir() / "pipe.log";

  REQUIRE(run("gen-data --out " + dir.string() +
                  " --labelled 24 --unlabelled 12 --rings 16 --image-size 16 --seed 5",
              log) == 0);

  // a small config keeps this test fast
  const path cfg = workdir() / "tiny.json";
  {
    std::ofstream f(cfg);
    f << R"({
      "encoder": {"input_size": 16, "stages": [[8,3,2],[16,3,2]],
                   "representation_width": 16},
      "train": {"batch_size": 8, "epochs": 2, "patience": 2},
      "probe": {"folds": 2, "budget": 8}
    })";
  }
  REQUIRE(run("train --data " + dir.string() + " --out " + run_dir.string() +
                  " --mode hybrid --config " + cfg.string() + " --seed 5",
              log) == 0);
  CHECK(std::filesystem::exists(run_dir / "checkpoint.gzckpt"));
  CHECK(std::filesystem::exists(run_dir / "metrics.csv"));
  CHECK(std::filesystem::exists(run_dir / "config.resolved.json"));

  REQUIRE(run("probe --checkpoint " + (run_dir / "checkpoint.gzckpt").string() +
                  " --data " + dir.string() + " --budget 8 --config " + cfg.string(),
              log) == 0);
  CHECK(std::filesystem::exists(run_dir / "probe_summary.csv"));

  SUBCASE("missing checkpoint exits with the config code") {
    CHECK(run("probe --checkpoint /nonexistent.gzckpt --data " + dir.string(), log) ==
          2);
  }

  SUBCASE("plot consumes the sweep summary format") {
    const path table = workdir() / "summary.csv";
    {
      std::ofstream f(table);
      f << "method,budget,mean_accuracy,std_accuracy,majority_baseline,"
           "final_contrastive_loss\n";
      f << "hybrid,10,0.7,0.02,0.5,0.8\n";
      f << "hybrid,20,0.75,0.02,0.5,0.8\n";
      f << "direct,10,0.55,0.04,0.5,\n";
      f << "direct,20,0.6,0.03,0.5,\n";
    }
    const path plots = workdir() / "plots";
    REQUIRE(run("plot --summary " + table.string() + " --out " + plots.string(),
                log) == 0);
    CHECK(std::filesystem::exists(plots / "accuracy_vs_budget.svg"));
    CHECK(std::filesystem::exists(plots / "loss_vs_accuracy.svg"));
  }

  SUBCASE("plot on a header-only table exits with the config code") {
    const path empty = workdir() / "empty.csv";
    std::ofstream(empty) << "method,budget,mean_accuracy,std_accuracy\n";
    CHECK(run("plot --summary " + empty.string(), log) == 2);
  }
}

TEST_CASE("exploding training exits with the numeric-failure code") {
  const path dir = workdir() / "data_boom";
  std::filesystem::remove_all(dir);
  const path log = workdir() / "boom.log";
  REQUIRE(run("gen-data --out " + dir.string() +
                  " --labelled 12 --unlabelled 0 --rings 0 --image-size 16 --seed 6",
              log) == 0);
  const path cfg = workdir() / "boom.json";
  {
    std::ofstream f(cfg);
    f << R"({
      "encoder": {"input_size": 16, "stages": [[8,3,2],[16,3,2]],
                   "representation_width": 16},
      "train": {"batch_size": 8, "epochs": 3, "patience": 3, "lr": 1e18}
    })";
  }
  CHECK(run("train --data " + dir.string() + " --out " +
                (workdir() / "run_boom").string() + " --mode pretrain --config " +
                cfg.string(),
            log) == 3);
  const std::string text = slurp(log);
  CHECK(text.find("numeric failure") != std::string::npos);
}
