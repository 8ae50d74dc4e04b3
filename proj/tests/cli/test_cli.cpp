#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cli/catalog.hpp"
#include "cli/config.hpp"
#include "cli/runner.hpp"
#include "cli/snapshot.hpp"
#include "trapping/survival.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json grid(json gamma = "inf", double nu = 1.0) {
  return json{{"schema_version", 1},
              {"kind", "survival-grid"},
              {"model", {{"d", 1}, {"gamma", gamma}, {"kappa", 1}, {"rho", 1}, {"nu", nu}}},
              {"t", {1, 2}},
              {"budget", {{"n_outer", 40}, {"n_inner", 20}}},
              {"seed", 5}};
}

void expect_rejected(const json& j, const std::string& field) {
  try {
    trapsim::parse_config(j);
    FAIL() << "accepted: " << j.dump();
  } catch (const trapsim::ConfigError& e) {
    EXPECT_NE(e.field().find(field), std::string::npos) << e.what();
  }
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("trapsim-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const auto path = dir / "config.json";
  std::ofstream(path) << j.dump(2);
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int exe(const std::string& args) {
  const int status = std::system((std::string(TRAPSIM_EXE) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// =============================================================================
// Config parsing
// =============================================================================

TEST(Config, ParsesDefaults) {
  const auto c = trapsim::parse_config(grid());
  EXPECT_EQ(c.kind, trapsim::Kind::survival_grid);
  EXPECT_TRUE(c.model.gamma.is_infinite());
  EXPECT_EQ(c.seed, 5u);
  ASSERT_EQ(c.estimators.size(), 2u);
  EXPECT_EQ(c.estimators[0], trapping::Estimator::direct);
  EXPECT_EQ(c.estimators[1], trapping::Estimator::range);
  EXPECT_EQ(c.tolerance("se_multiple"), 3.0);
}

TEST(Config, RejectsUnknownKeys) {
  auto j = grid();
  j["sead"] = 1;
  expect_rejected(j, "sead");
  j = grid();
  j["model"]["lambda"] = 1;
  expect_rejected(j, "lambda");
  j = grid();
  j["tolerances"] = {{"nonsense", 1.0}};
  expect_rejected(j, "nonsense");
}

TEST(Config, SeedIsMandatory) {
  auto j = grid();
  j.erase("seed");
  expect_rejected(j, "seed");
}

TEST(Config, SchemaVersionChecked) {
  auto j = grid();
  j["schema_version"] = 2;
  expect_rejected(j, "schema_version");
}

TEST(Config, TimeGridMustIncrease) {
  auto j = grid();
  j["t"] = {2, 1};
  expect_rejected(j, "t");
  j["t"] = {1, 1};
  expect_rejected(j, "t");
  j["t"] = {-1, 1};
  expect_rejected(j, "t");
}

TEST(Config, KindSpecificKeysBelongToTheirKind) {
  auto j = grid();
  j["p"] = 0.5;
  expect_rejected(j, "p");
  j = grid();
  j["field_seeds"] = {1, 2};
  expect_rejected(j, "field_seeds");
}

TEST(Config, EstimatorMustMatchKilling) {
  auto j = grid(1.0);
  j["estimators"] = {"range"};
  expect_rejected(j, "estimators");
  j = grid();
  j["estimators"] = {"pde"};
  expect_rejected(j, "estimators");
}

TEST(Config, FiniteGammaDefaults) {
  const auto c = trapsim::parse_config(grid(2.5));
  EXPECT_EQ(c.model.gamma.value(), 2.5);
  ASSERT_EQ(c.estimators.size(), 3u);
  EXPECT_EQ(c.estimators[1], trapping::Estimator::softrange);
}

TEST(Config, QuenchedStartSitesMustBeOdd) {
  json j{{"schema_version", 1},
         {"kind", "quenched-rate"},
         {"model", {{"d", 1}, {"gamma", 1}, {"kappa", 1}, {"rho", 1}, {"nu", 1}}},
         {"t", {4, 8, 16}},
         {"seed", 1},
         {"field_seeds", {1}},
         {"start_sites", 4}};
  expect_rejected(j, "start_sites");
  j["start_sites"] = 5;
  EXPECT_EQ(trapsim::parse_config(j).start_sites, 5);
}

TEST(Config, EchoRoundTrips) {
  for (const auto& entry : trapsim::experiment_catalog()) {
    for (const auto& j : entry.configs) {
      const auto c = trapsim::parse_config(j);
      const auto echo = trapsim::to_json(c);
      EXPECT_EQ(trapsim::to_json(trapsim::parse_config(echo)), echo) << entry.id;
    }
  }
}

// =============================================================================
// Catalog
// =============================================================================

TEST(Catalog, TwelveStableIds) {
  const auto& catalog = trapsim::experiment_catalog();
  ASSERT_EQ(catalog.size(), 12u);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "ac%02zu", i + 1);
    EXPECT_EQ(catalog[i].id, id);
    EXPECT_GT(catalog[i].expected_seconds, 0.0);
    ids.insert(catalog[i].id);
  }
  EXPECT_EQ(ids.size(), catalog.size());
}

// =============================================================================
// Runs
// =============================================================================

TEST(Run, NoTrapsMeansCertainSurvival) {
  const auto c = trapsim::parse_config(grid("inf", 0.0));
  const auto report = trapsim::execute(c, {});
  ASSERT_FALSE(report.estimates.empty());
  for (const auto& e : report.estimates) EXPECT_EQ(e.value, 1.0) << trapping::to_string(e.estimator);
  EXPECT_TRUE(report.passed());
}

TEST(Run, PamCrosscheckAgrees) {
  json j{{"schema_version", 1},
         {"kind", "pam-crosscheck"},
         {"model", {{"d", 1}, {"gamma", 1}, {"kappa", 1}, {"rho", 1}, {"nu", 0.5}}},
         {"t", {2}},
         {"budget", {{"n_outer", 200}, {"n_inner", 5}}},
         {"integrator", {{"dt", 0.02}}},
         {"seed", 11}};
  const auto report = trapsim::execute(trapsim::parse_config(j), {});
  EXPECT_TRUE(report.passed());
  EXPECT_GE(report.estimates.size(), 3u);
}

TEST(Run, StrictArtifactsAreByteIdentical) {
  const auto dir = scratch("strict");
  const auto config = write_config(dir, grid(1.0));
  std::ostringstream log;
  trapsim::RunOptions a;
  a.strict = true;
  a.out_dir = (dir / "a").string();
  trapsim::RunOptions b = a;
  b.out_dir = (dir / "b").string();
  b.workers = 2;
  ASSERT_EQ(trapsim::run(config.string(), a, log), 0) << log.str();
  ASSERT_EQ(trapsim::run(config.string(), b, log), 0) << log.str();
  EXPECT_EQ(slurp(dir / "a" / "results.csv"), slurp(dir / "b" / "results.csv"));
  EXPECT_EQ(slurp(dir / "a" / "fits.json"), slurp(dir / "b" / "fits.json"));
  const auto manifest = json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["wall_time"], 0.0);
  EXPECT_EQ(manifest["seed"], 5);
  EXPECT_EQ(manifest["status"], "ok");
}

TEST(Run, ResultsHeader) {
  const auto csv = trapsim::results_csv({}, true);
  EXPECT_EQ(csv, "estimator,d,gamma,kappa,rho,nu,t,value,log_value,std_error,n,seed,wall_time\n");
}

TEST(Run, OutputDirectoryPrecedence) {
  auto c = trapsim::parse_config(grid());
  trapsim::RunOptions o;
  ::unsetenv(trapsim::kOutputEnv);
  EXPECT_EQ(trapsim::output_directory(c, o), fs::path("trapsim-out"));
  ::setenv(trapsim::kOutputEnv, "/tmp/from-env", 1);
  EXPECT_EQ(trapsim::output_directory(c, o), fs::path("/tmp/from-env"));
  c.output = "from-config";
  EXPECT_EQ(trapsim::output_directory(c, o), fs::path("from-config"));
  o.out_dir = "from-flag";
  EXPECT_EQ(trapsim::output_directory(c, o), fs::path("from-flag"));
  ::unsetenv(trapsim::kOutputEnv);
}

// =============================================================================
// Executable
// =============================================================================

TEST(Executable, ExitCodes) {
  const auto dir = scratch("exit");
  const auto good = write_config(dir, grid());
  EXPECT_EQ(exe("run " + good.string() + " --strict --out " + (dir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "manifest.json"));

  auto bad = grid();
  bad["seed"] = "five";
  const auto bad_path = dir / "bad.json";
  std::ofstream(bad_path) << bad.dump();
  EXPECT_EQ(exe("run " + bad_path.string()), 1);
  EXPECT_EQ(exe("run " + (dir / "missing.json").string()), 1);
  EXPECT_EQ(exe("frobnicate"), 1);

  auto strict = grid();
  strict["tolerances"] = {{"se_multiple", 1e-12}};
  const auto strict_path = dir / "tight.json";
  std::ofstream(strict_path) << strict.dump();
  EXPECT_EQ(exe("run " + strict_path.string() + " --out " + (dir / "tight").string()), 2);
  EXPECT_EQ(json::parse(slurp(dir / "tight" / "manifest.json"))["status"], "tolerance-failure");
}

TEST(Executable, ListAndVersion) {
  EXPECT_EQ(exe("list"), 0);
  EXPECT_EQ(exe("version"), 0);
}

// =============================================================================
// Snapshots
// =============================================================================

TEST(Snapshot, PathRoundTrip) {
  const auto k = trapping::make_kernel(trapping::JumpKernel::uniform_1d({-3, -1, 1, 3}, 1.7));
  trapping::RandomStream rng(3);
  const auto path = trapping::sample_path(k, trapping::origin(1), 6.0, rng);
  const auto j = trapsim::path_to_json(path);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["jump_times"].size(), path.jump_count());
  const auto back = trapsim::path_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.positions(), path.positions());
  EXPECT_TRUE(std::equal(back.jump_times().begin(), back.jump_times().end(), path.jump_times().begin()));
  EXPECT_EQ(back.kernel().displacements(), k->displacements());
  EXPECT_EQ(back.horizon(), 6.0);
}

TEST(Snapshot, PathRecordWithoutKernelIsNearestNeighbour) {
  const json j{{"schema_version", 1}, {"d", 1},       {"rate", 1.0}, {"origin", {0}}, {"jump_times", {1.0, 3.0}},
               {"displacements", {{1}, {-1}}}, {"horizon", 5.0}};
  const auto path = trapsim::path_from_json(j);
  EXPECT_EQ(path.positions()(0, 1), 1);
  EXPECT_EQ(trapping::local_time(path, trapping::origin(1)), 3.0);
  auto bad = j;
  bad["displacements"] = {{2}, {-2}};
  EXPECT_THROW(trapsim::path_from_json(bad), std::invalid_argument);
  bad = j;
  bad["schema_version"] = 9;
  EXPECT_THROW(trapsim::path_from_json(bad), std::invalid_argument);
}

TEST(Snapshot, FieldRoundTrip) {
  trapping::ModelParams p;
  p.nu = 0.7;
  const trapping::FieldSampler sampler(trapping::certified_field_spec(p, 3.0, 10));
  trapping::RandomStream rng(8);
  const auto field = sampler(rng);
  const auto back = trapsim::field_from_json(json::parse(trapsim::field_to_json(field).dump()));
  ASSERT_EQ(back.trap_count(), field.trap_count());
  EXPECT_EQ(back.counts_at_zero(), field.counts_at_zero());
  for (double s : {0.0, 1.3, 2.9}) {
    for (int x = -3; x <= 3; ++x) {
      trapping::Site site(1);
      site[0] = x;
      EXPECT_EQ(back.occupation(s, site), field.occupation(s, site));
    }
  }
  auto tampered = trapsim::field_to_json(field);
  tampered["counts"].push_back({{"site", {999}}, {"count", 1}});
  EXPECT_THROW(trapsim::field_from_json(tampered), std::invalid_argument);
}

TEST(Snapshot, LatticeCsv) {
  const trapping::Box box{1, 1};
  auto f = trapping::LatticeField<double>::constant(box, 0.5, trapping::Boundary::dirichlet_one);
  f.time = 2.0;
  EXPECT_EQ(trapsim::lattice_csv({f}), "time,x1,value\n2,-1,0.5\n2,0,0.5\n2,1,0.5\n");
}

TEST(Snapshot, RunsWriteSnapshots) {
  const auto dir = scratch("snapshots");
  json j{{"schema_version", 1},
         {"kind", "quenched-rate"},
         {"model", {{"d", 1}, {"gamma", 1}, {"kappa", 1}, {"rho", 1}, {"nu", 1}}},
         {"t", {1, 2, 3}},
         {"seed", 1},
         {"field_seeds", {4}},
         {"integrator", {{"dt", 0.02}}},
         {"snapshots", true}};
  std::ostringstream log;
  trapsim::RunOptions o;
  o.strict = true;
  o.out_dir = (dir / "q").string();
  trapsim::run(write_config(dir, j).string(), o, log);
  const auto field = trapsim::field_from_json(json::parse(slurp(dir / "q" / "field_4.json")));
  EXPECT_EQ(field.spec().horizon, 3.0);
  EXPECT_EQ(slurp(dir / "q" / "u_4.csv").rfind("time,x1,value\n", 0), 0u);

  j = json{{"schema_version", 1},
           {"kind", "pam-crosscheck"},
           {"model", {{"d", 1}, {"gamma", 1}, {"kappa", 1}, {"rho", 1}, {"nu", 0.5}}},
           {"t", {1}},
           {"budget", {{"n_outer", 50}, {"n_inner", 5}}},
           {"integrator", {{"dt", 0.02}}},
           {"seed", 2},
           {"snapshots", true}};
  o.out_dir = (dir / "p").string();
  trapsim::run(write_config(dir, j).string(), o, log);
  EXPECT_TRUE(fs::exists(dir / "p" / "field.json"));
  EXPECT_TRUE(fs::exists(dir / "p" / "u.csv"));
  j["kind"] = "survival-grid";
  expect_rejected(j, "snapshots");
}
