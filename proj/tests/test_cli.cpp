#include "mflab/config.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef MFLAB_CLI_PATH
#define MFLAB_CLI_PATH "mflab"
#endif

using namespace mflab;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream s;
  s << is.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("mflab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path config(const std::string& name, const std::string& text) {
    const auto p = root_ / name;
    std::ofstream(p) << text;
    return p;
  }

  CliResult run(const std::string& args, const std::string& out = "out") {
    const auto o = root_ / "stdout.txt", e = root_ / "stderr.txt";
    const std::string cmd = std::string(MFLAB_CLI_PATH) + " " + args + " --out " + (root_ / out).string() +
                            " --threads 1 > " + o.string() + " 2> " + e.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  // The single run directory under root/out.
  fs::path run_dir(const std::string& out = "out") {
    fs::path found;
    for (const auto& entry : fs::directory_iterator(root_ / out)) found = entry.path();
    return found;
  }

  fs::path root_;
};

// Numeric CSV rows without the provenance line and header.
std::vector<std::vector<double>> csv_rows(const fs::path& p) {
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        row.push_back(std::nan(""));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

const char* kSmallStudy = R"({
  "grid": {"n": 32, "L": 16},
  "sigma": 0.5,
  "initial": {"kind": "gaussian", "variance": 1.0},
  "study": {"N_values": [8, 16, 32], "runs": 2, "seed_stride": 0, "T": 0.1, "sde_dt": 0.01, "pde_dt": 0.05,
            "dt_gate": false, "check_times": [0.1]}
})";

}  // namespace

TEST(Config, EmptyConfigResolvesDefaults) {
  const auto c = parse_config(nlohmann::json::object());
  const auto e = echo(c);
  EXPECT_EQ(e["d"], 3);
  EXPECT_EQ(e["s"], 0.5);
  EXPECT_EQ(e["sigma"], 1.0);
  EXPECT_EQ(e["grid"]["n"], 64);
  EXPECT_EQ(e["grid"]["L"], 16.0);
  EXPECT_EQ(e["kernel_mode"], "free_space");
  EXPECT_EQ(e["M"], FlowMatrix::gradient(3).rows());
  EXPECT_GT(e["pde"]["dt"].get<double>(), 0.0);
}

TEST(Config, RoundTripIsIdempotent) {
  for (const std::string text :
       {std::string("{}"), std::string(kSmallStudy),
        std::string(R"({"kernel": "log", "M": "conservative", "decay": {"pairs": [[1, "inf"], [2, 4]]},
                        "initial": {"kind": "mixture", "components": [{"weight": 1, "mean": [1, 0, 0], "variance": 0.5},
                                                                      {"weight": 2, "mean": [-1, 0, 0], "variance": 0.7}]}})"),
        std::string(R"({"s": 0.25, "M": [[-1, 1, 0], [-1, -1, 0], [0, 0, -1]], "energy": {"eta": 0.1}})")}) {
    const auto c = parse_config(nlohmann::json::parse(text));
    const auto again = parse_config(echo(c));
    EXPECT_EQ(echo(again), echo(c)) << text;
    EXPECT_EQ(config_hash(again), config_hash(c));
  }
}

TEST(Config, RejectsInvalidInput) {
  try {
    parse_config(nlohmann::json::parse(R"({"s": 1.5})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("s < d-2 violated"), std::string::npos) << e.what();
  }
  try {
    parse_config(nlohmann::json::parse(R"({"grid": {"n": 32, "size": 3}})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'grid.size'"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"sigma": -1})")), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"M": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})")), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"decay": {"pairs": [[4, 2]]}})")), ConfigError);
}

TEST_F(CliTest, CheckAssumptionsWithDefaultsPasses) {
  const auto r = run("check-assumptions --config " + config("empty.json", "").string());
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("check-assumptions: pass"), std::string::npos) << r.out;
  const auto dir = run_dir();
  const auto cfg = nlohmann::json::parse(slurp(dir / "config.json"));
  const auto expected = echo(parse_config(nlohmann::json::object()));
  for (const auto& [k, v] : expected.items()) EXPECT_EQ(cfg[k], v) << k;
  const auto rep = nlohmann::json::parse(slurp(dir / "assumptions.json"));
  EXPECT_TRUE(rep["all_pass"].get<bool>());
  EXPECT_EQ(rep["config_hash"], config_hash(parse_config(nlohmann::json::object())));
}

TEST_F(CliTest, ErrorsAreStructured) {
  const auto bad = run("solve-pde --config " + config("bad.json", R"({"foo": 1})").string());
  EXPECT_EQ(bad.code, 3);
  const auto err = nlohmann::json::parse(bad.err);
  EXPECT_EQ(err["error"]["subcommand"], "solve-pde");
  EXPECT_EQ(err["error"]["type"], "config");
  EXPECT_NE(err["error"]["message"].get<std::string>().find("'foo'"), std::string::npos);

  const auto coulomb = run("simulate-sde --config " + config("s.json", R"({"s": 1.5})").string());
  EXPECT_EQ(coulomb.code, 3);
  EXPECT_NE(coulomb.err.find("s < d-2 violated"), std::string::npos) << coulomb.err;

  const auto missing = run("decay --config " + (root_ / "nope.json").string());
  EXPECT_EQ(missing.code, 3);
  EXPECT_NE(run("no-such-command").code, 0);
}

TEST_F(CliTest, ConvergeWithDuplicatedSeedsHasZeroError) {
  const auto r = run("converge --config " + config("c.json", kSmallStudy).string());
  EXPECT_LE(r.code, 2) << r.err;
  const auto rows = csv_rows(run_dir() / "rate_profile.csv");
  ASSERT_EQ(rows.size(), 3u * 2u);
  for (const auto& row : rows) {
    EXPECT_EQ(row[2], 2.0);
    EXPECT_EQ(row[4], 0.0);
    EXPECT_EQ(row[6], 0.0);
  }
}

TEST_F(CliTest, DecayWithoutInteractionStaysBelowHeatBound) {
  const auto cfg = config("d.json", R"({"grid": {"n": 32, "L": 16}, "pde": {"T": 0.5, "dt": 0.05},
                                        "decay": {"cases": ["zero"]}})");
  const auto r = run("decay --config " + cfg.string());
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const auto rows = csv_rows(run_dir() / "decay_ratios.csv");
  ASSERT_FALSE(rows.empty());
  for (const auto& row : rows) EXPECT_LE(row[6], 1.0 + 1e-6);
}

TEST_F(CliTest, RerunsAreByteIdenticalAndStamped) {
  const auto cfg = config("sde.json", R"({"sde": {"N": 16, "T": 0.1, "dt": 0.01, "snapshot_times": [0.05]},
                                          "sigma": 0.5})");
  const auto a = run("simulate-sde --seed 42 --config " + cfg.string(), "a");
  const auto b = run("simulate-sde --seed 42 --config " + cfg.string(), "b");
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  const auto da = run_dir("a"), db = run_dir("b");
  EXPECT_EQ(da.filename(), db.filename());
  EXPECT_NE(da.filename().string().find("-seed42"), std::string::npos);
  const auto hash = config_hash([&] {
    auto c = parse_config_file(cfg.string());
    c.seed = 42;
    return c;
  }());
  for (const auto* name : {"positions.csv", "trajectories.csv", "truncation_events.csv"}) {
    const auto text = slurp(da / name);
    EXPECT_EQ(text, slurp(db / name)) << name;
    EXPECT_EQ(text.substr(0, text.find('\n')), "# config_hash=" + hash + " seed=42") << name;
  }
  const auto summary = nlohmann::json::parse(slurp(da / "summary.json"));
  EXPECT_EQ(summary["seed"], 42);
  EXPECT_EQ(summary["config_hash"], hash);

  const auto c = run("simulate-sde --seed 43 --config " + cfg.string(), "a");
  EXPECT_EQ(c.code, 0);
  std::size_t dirs = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(root_ / "a")) ++dirs;
  EXPECT_EQ(dirs, 2u);
}

TEST_F(CliTest, SolvePdeWritesSnapshots) {
  const auto cfg = config("p.json", R"({"grid": {"n": 16, "L": 12}, "pde": {"T": 0.2, "snapshot_times": [0.1]}})");
  const auto r = run("solve-pde --config " + cfg.string());
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const auto dir = run_dir();
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["n"], 16);
  EXPECT_GE(manifest["snapshots"].size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "steps.csv"));
}
