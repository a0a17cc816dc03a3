#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tsaw/error.hpp"
#include "tsaw/experiment.hpp"

using namespace tsaw;
using namespace tsaw::experiment;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tsaw_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string field_of(const json& j) {
  try {
    validate(config_from_json(j));
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

int lab(const std::string& args) {
  const std::string cmd = std::string(TSAW_LAB_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const CsvTable& table(const Tables& t, const std::string& name) {
  for (const auto& [n, tab] : t.files)
    if (n == name) return tab;
  throw std::runtime_error("no table " + name);
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const ExperimentConfig c;
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(field_of({{"beta", -1.0}}), "beta");
  EXPECT_EQ(field_of({{"n_grid", json::array({10, 0})}}), "n_grid[1]");
  EXPECT_EQ(field_of({{"k_grid", json::array({6, 4})}}), "k_grid[1]");
  EXPECT_EQ(field_of({{"leak_budget", 2.0}}), "leak_budget");
  EXPECT_EQ(field_of({{"reps", 0}}), "reps");
  EXPECT_EQ(field_of({{"criteria", json::array({16})}}), "criteria[0]");
  EXPECT_EQ(field_of({{"colour", "blue"}}), "colour");
  EXPECT_EQ(field_of({{"subcommand", "dance"}}), "subcommand");
  EXPECT_EQ(field_of({{"tree", {{"b", 0.5}, {"depth", -2}}}}), "tree.depth");
  EXPECT_EQ(field_of(json::array({1})), "config");
}

TEST(Config, LoadReportsUnreadableFiles) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ValidationError);
  const fs::path dir = scratch("badjson");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << "{ not json";
  EXPECT_THROW(load_config((dir / "c.json").string()), ValidationError);
}

TEST(Checksum, KnownVectors) {
  EXPECT_EQ(fnv1a64_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a64_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a64_hex("foobar"), "85944171f73967e8");
}

TEST(Csv, FormattingAndWidthCheck) {
  CsvTable t({"a", "b", "c"});
  t.cell(0.1).cell(7).cell("x,y").end_row();
  EXPECT_EQ(t.text(), "a,b,c\n0.10000000000000001,7,\"x,y\"\n");
  t.cell(1.0);
  EXPECT_THROW(t.end_row(), std::logic_error);
}

TEST(Ruin, SingleRowForUnitGrid) {
  ExperimentConfig c;
  c.n_grid = {1};
  const auto t = compute_tables(c);
  EXPECT_EQ(table(t, "ruin.csv").text(), "n,r,r_leak,r_sqrt_n\n1,1,0,1\n");
}

TEST(Outputs, ProbabilityColumnsCarryUncertainty) {
  ExperimentConfig c;
  c.subcommand = Subcommand::percolate;
  c.tree = tree::GrowthSpec::from_exponent(0.7, 20);
  c.depth_grid = {5, 10, 20};
  c.gamma_grid = {0.5};
  c.reps = 400;
  c.pairs = 2;
  const auto t = compute_tables(c);
  for (const auto& [name, tab] : t.files) {
    std::istringstream in(tab.text());
    std::string header;
    std::getline(in, header);
    auto has = [&](const std::string& col) { return ("," + header + ",").find("," + col + ",") != std::string::npos; };
    for (const std::string p : {"p_hat", "joint", "p1", "p2", "M", "r"}) {
      if (has(p)) {
        EXPECT_TRUE(has(p + "_se") || has(p + "_leak")) << name << ": " << p;
      }
    }
  }
}

TEST(Outputs, RunsAreReproducibleAndThreadInvariant) {
  ExperimentConfig c;
  c.subcommand = Subcommand::percolate;
  c.tree = tree::GrowthSpec::from_exponent(0.7, 16);
  c.depth_grid = {4, 8, 16};
  c.gamma_grid = {0.5};
  c.reps = 300;
  c.pairs = 2;
  const fs::path da = scratch("run_a"), db = scratch("run_b"), dc = scratch("run_c");
  c.output_dir = da.string();
  const auto a = run_subcommand(c);
  c.output_dir = db.string();
  const auto b = run_subcommand(c);
  c.threads = 2;
  c.output_dir = dc.string();
  const auto d = run_subcommand(c);
  ASSERT_EQ(a.files, b.files);
  ASSERT_EQ(a.files, d.files);
  for (const auto& f : a.files) {
    const auto bytes = slurp(da / f);
    EXPECT_FALSE(bytes.empty()) << f;
    EXPECT_EQ(bytes, slurp(db / f)) << f;
    EXPECT_EQ(bytes, slurp(dc / f)) << f;
  }
  const auto manifest = json::parse(slurp(dc / "manifest.json"));
  EXPECT_EQ(manifest.at("master_seed").get<std::uint64_t>(), 1u);
  EXPECT_EQ(manifest.at("version").get<std::string>(), version());
  for (const auto& f : manifest.at("files"))
    EXPECT_EQ(f.at("fnv1a64").get<std::string>(), fnv1a64_hex(slurp(dc / f.at("file").get<std::string>())));
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli");
  EXPECT_EQ(lab("ruin --n-grid 1,10 --out " + out.string()), kExitOk);
  EXPECT_TRUE(fs::exists(out / "ruin.csv"));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  EXPECT_EQ(lab("ruin --n-grid 0 --out " + out.string()), kExitValidation);
  EXPECT_EQ(lab("ruin --beta -2 --out " + out.string()), kExitValidation);
  EXPECT_EQ(lab("bogus"), kExitValidation);
  EXPECT_EQ(lab("ruin --n-grid 2000 --leak-budget 1e-300 --out " + out.string()), kExitNumeric);
  EXPECT_EQ(lab("verify --criteria 2 --out " + out.string()), kExitOk);
  EXPECT_EQ(lab("verify --criteria 14 --out " + out.string()), kExitAcceptance);
}
