#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "scflow/errors.hpp"
#include "scflow/snapshot.hpp"
#include "verify.hpp"

namespace scflow::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Fresh scratch directory per test, removed afterwards.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("scflow_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const json& doc, const std::string& name = "run.json") {
    const fs::path path = dir_ / name;
    std::ofstream(path) << doc.dump(2);
    return path;
  }

  static std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  /// Small, fast exp-warp relaxation: converges in well under a second.
  json base_config() const {
    return json{
        {"grid", {{"n", 2}, {"shape", {16, 16}}, {"period", 6.283185307179586}}},
        {"metric", {{"preset", "exp-warp"}, {"params", {{"rate", 1.0}}}}},
        {"rhs", {{"family", "time-profile"}, {"params", {{"amplitude", 1.0}, {"rate", 1.0}, {"center", 1.0}}}}},
        {"cutoff", {{"k", 4.0}}},
        {"barriers",
         {{"lower", {{"kind", "constant"}, {"level", 0.0}}},
          {"upper", {{"kind", "sine"}, {"level", 2.0}, {"amplitude", 0.005}, {"axis", 1}}}}},
        {"flow", {{"scheme", "ssprk2"}, {"stages", 10}, {"dt_safety", 0.45}, {"monitor_every", 10}}},
        {"audit", {{"time_samples", 3}, {"spatial_samples", 4}}},
        {"output", {{"dir", (dir_ / "out").string()}}},
    };
  }

  fs::path dir_;
};

TEST_F(CliTest, CanonicalFormIsAFixedPoint) {
  const RunConfig parsed = parse_config(base_config(), dir_);
  const std::string canonical = canonical_form(parsed);
  const RunConfig reparsed = parse_config(json::parse(canonical), dir_);
  EXPECT_EQ(canonical_form(reparsed), canonical);
  EXPECT_EQ(parsed.shape, (std::vector<int>{16, 16}));
  EXPECT_NEAR(parsed.spacing[0], 6.283185307179586 / 16, 1e-15);
  EXPECT_EQ(parsed.flow.stages, 10);
  EXPECT_EQ(parsed.upper.kind, "sine");
}

TEST_F(CliTest, DefaultsAreSpelledOut) {
  json doc = base_config();
  doc.erase("flow");
  doc.erase("audit");
  const json canonical = to_json(parse_config(doc, dir_));
  EXPECT_EQ(canonical["flow"]["scheme"], "ssprk3");
  EXPECT_EQ(canonical["flow"]["dt_safety"], 0.2);
  EXPECT_EQ(canonical["flow"]["tol_converge"], 1e-8);
  EXPECT_EQ(canonical["flow"]["tol_sign"], 1e-10);
  EXPECT_EQ(canonical["rhs"]["params"].size(), 3u);
}

TEST_F(CliTest, SchemaViolationsAreConfigErrors) {
  json unknown = base_config();
  unknown["flow"]["dt_safty"] = 0.3;
  EXPECT_THROW(parse_config(unknown, dir_), ConfigError);

  json missing = base_config();
  missing.erase("metric");
  EXPECT_THROW(parse_config(missing, dir_), ConfigError);

  json one_d = base_config();
  one_d["grid"] = {{"n", 1}, {"shape", {16}}, {"period", 6.28}};
  EXPECT_THROW(parse_config(one_d, dir_), ConfigError);

  json both = base_config();
  both["grid"]["spacing"] = 0.1;
  EXPECT_THROW(parse_config(both, dir_), ConfigError);

  json wrong_type = base_config();
  wrong_type["cutoff"]["k"] = "four";
  EXPECT_THROW(parse_config(wrong_type, dir_), ConfigError);

  json bad_preset = base_config();
  bad_preset["metric"]["preset"] = "schwarzschild";
  EXPECT_THROW(build_setup(parse_config(bad_preset, dir_)), ConfigError);

  EXPECT_THROW(load_config(dir_ / "missing.json"), ConfigError);
}

TEST_F(CliTest, RunConvergesAndWritesArtifacts) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(write_config(base_config()), {}, out, err), kExitConverged) << err.str();
  EXPECT_EQ(out.str().rfind("verdict=converged", 0), 0u);
  const fs::path o = dir_ / "out";
  for (const char* file : {"config.json", "audit.csv", "trace.csv", "final.snap", "final.csv", "report.txt"}) {
    EXPECT_TRUE(fs::exists(o / file)) << file;
  }
  const std::string report = slurp(o / "report.txt");
  EXPECT_NE(report.find("verdict=converged\n"), std::string::npos);
  EXPECT_NE(report.find("cutoff_inactive=true\n"), std::string::npos);
  EXPECT_NE(report.find("audit_c1="), std::string::npos);

  const GraphFunction final_u = read_snapshot_binary(o / "final.snap");
  for (double u : final_u.values) EXPECT_NEAR(u, 1.0, 1e-6);

  // The written canonical config reproduces itself.
  EXPECT_EQ(canonical_form(load_config(o / "config.json")), slurp(o / "config.json"));
}

TEST_F(CliTest, RunIsByteDeterministic) {
  json doc = base_config();
  doc["flow"]["t_max"] = 1.0;
  const fs::path config = write_config(doc);
  std::ostringstream out, err;
  cmd_run(config, dir_ / "a", out, err);
  cmd_run(config, dir_ / "b", out, err);
  EXPECT_EQ(slurp(dir_ / "a" / "trace.csv"), slurp(dir_ / "b" / "trace.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "final.snap"), slurp(dir_ / "b" / "final.snap"));
  EXPECT_FALSE(slurp(dir_ / "a" / "trace.csv").empty());
}

TEST_F(CliTest, ZeroTimeBudgetExitsTwo) {
  json doc = base_config();
  doc["flow"]["t_max"] = 0.0;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(write_config(doc), {}, out, err), kExitTimeout);
  EXPECT_NE(slurp(dir_ / "out" / "report.txt").find("verdict=timeout"), std::string::npos);
}

TEST_F(CliTest, FlatStaticConstantBarrierExitsOne) {
  json doc = base_config();
  doc["metric"] = {{"preset", "flat-static"}};
  doc["rhs"] = {{"family", "constant"}, {"params", {{"value", 1.0}}}};
  doc["barriers"]["upper"] = {{"kind", "constant"}, {"level", 1.0}};
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(write_config(doc), {}, out, err), kExitConfigError);
  EXPECT_NE(err.str().find("invalid barrier"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "trace.csv"));
}

TEST_F(CliTest, MalformedConfigExitsOne) {
  const fs::path path = dir_ / "broken.json";
  std::ofstream(path) << "{ \"grid\": ";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(path, {}, out, err), kExitConfigError);
  EXPECT_EQ(cmd_audit(path, {}, out, err), kExitConfigError);
}

TEST_F(CliTest, NonPositiveTargetExitsFour) {
  json doc = base_config();
  doc["rhs"] = {{"family", "affine-time"}, {"params", {{"intercept", -0.5}, {"slope", 0.0}}}};
  std::ostringstream out, err;
  EXPECT_EQ(cmd_audit(write_config(doc), {}, out, err), kExitPositivity);
  EXPECT_EQ(cmd_run(write_config(doc), {}, out, err), kExitPositivity);
}

TEST_F(CliTest, AuditOfConstantTarget) {
  json doc = base_config();
  doc["rhs"] = {{"family", "constant"}, {"params", {{"value", 1.0}}}};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_audit(write_config(doc), {}, out, err), kExitConverged) << err.str();
  const std::string csv = out.str();
  EXPECT_NE(csv.find("\nc1,1,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\nc2,0,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\nc3,0,"), std::string::npos) << csv;
  EXPECT_EQ(slurp(dir_ / "out" / "audit.csv"), csv);
}

TEST_F(CliTest, FileBarrierRoundTrip) {
  // Snapshot the converged state and use it as the upper barrier of a new run.
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(write_config(base_config()), {}, out, err), kExitConverged);
  fs::copy_file(dir_ / "out" / "final.snap", dir_ / "upper.snap");
  json doc = base_config();
  doc["barriers"]["upper"] = {{"kind", "file"}, {"path", "upper.snap"}};
  const RunConfig config = load_config(write_config(doc, "from_file.json"));
  const RunSetup setup = build_setup(config);
  EXPECT_EQ(setup.flow.upper.values, read_snapshot_binary(dir_ / "upper.snap").values);

  doc["grid"]["shape"] = {32, 32};
  EXPECT_THROW(build_setup(load_config(write_config(doc, "mismatch.json"))), ConfigError);
}

TEST_F(CliTest, VerifySuitesPassAndAreDeterministic) {
  for (const char* suite : {"curvature", "cutoff"}) {
    std::ostringstream first, second, err;
    EXPECT_EQ(cmd_verify(suite, 9, 500, dir_, first, err), kExitConverged) << err.str();
    EXPECT_EQ(cmd_verify(suite, 9, 500, {}, second, err), kExitConverged);
    EXPECT_EQ(first.str(), second.str());
    EXPECT_EQ(first.str().rfind("suite,item,samples,failures,worst_margin,value\n", 0), 0u);
    EXPECT_TRUE(fs::exists(dir_ / (std::string("verify_") + suite + ".csv")));
  }
}

TEST_F(CliTest, UnknownSuiteExitsOne) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify("astrology", 1, 10, {}, out, err), kExitConfigError);
}

TEST(Verify, GeometryRatiosWithinBand) {
  const VerifyReport report = verify_geometry(1, 200);
  EXPECT_TRUE(report.passed());
  bool saw_codazzi = false, saw_gauss = false;
  for (const VerifyRow& row : report.rows) {
    if (row.item == "codazzi_order" || row.item == "gauss_order") {
      EXPECT_GE(row.value, 3.5) << row.item;
      EXPECT_LE(row.value, 4.5) << row.item;
      saw_codazzi |= row.item == "codazzi_order";
      saw_gauss |= row.item == "gauss_order";
    }
  }
  EXPECT_TRUE(saw_codazzi && saw_gauss);
}

}  // namespace
}  // namespace scflow::cli
