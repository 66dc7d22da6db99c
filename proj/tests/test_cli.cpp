#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "projnorm/cli.hpp"
#include "test_support.hpp"

using namespace projnorm;
using io::json;

namespace {

const std::string samples = PROJNORM_SAMPLES_DIR;

struct RunResult {
  int code;
  std::string out;
  std::string err;
  json doc() const { return json::parse(out); }
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "projnorm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("projnorm_test_" + name);
  std::ofstream(path) << content;
  return path.string();
}

TEST(Dump17, SeventeenSignificantDigits) {
  const json j = {{"x", 0.1}, {"n", 3}, {"inf", std::numeric_limits<double>::infinity()}};
  const auto s = io::dump17(j, -1);
  EXPECT_EQ(s, R"({"inf":null,"n":3,"x":0.10000000000000001})");
  EXPECT_EQ(json::parse(s)["x"].get<double>(), 0.1);
}

TEST(TensorJson, RoundTrip) {
  std::mt19937_64 rng(1);
  const auto r = testing_support::random_real({2, 3}, rng);
  const auto back = io::tensor_from_json(json::parse(io::dump17(io::tensor_to_json(r))));
  ASSERT_TRUE(back.real.has_value());
  EXPECT_EQ(std::vector<double>(back.real->coords().begin(), back.real->coords().end()),
            std::vector<double>(r.coords().begin(), r.coords().end()));

  const auto c = testing_support::random_complex({2, 2}, rng);
  const auto cback = io::tensor_from_json(json::parse(io::dump17(io::tensor_to_json(c))));
  ASSERT_TRUE(cback.complex.has_value());
  for (std::size_t f = 0; f < c.size(); ++f) EXPECT_EQ((*cback.complex)[f], c[f]);
}

TEST(TensorJson, NestedAndFlatCoords) {
  const auto nested = io::tensor_from_json(json::parse(R"({"shape":[2,2],"field":"real","coords":[[1,2],[3,4]]})"));
  const auto flat = io::tensor_from_json(json::parse(R"({"shape":[2,2],"field":"real","coords":[1,2,3,4]})"));
  EXPECT_EQ(nested.real->at({1, 0}), 3.0);
  EXPECT_EQ(flat.real->at({1, 0}), 3.0);
  const auto cplx = io::tensor_from_json(json::parse(R"({"shape":[1,2],"field":"complex","coords":[[[1,2],[0,-1]]]})"));
  EXPECT_EQ(cplx.complex->at({0, 1}), Complex(0.0, -1.0));
}

TEST(TensorJson, Malformed) {
  for (const char* bad : {R"([1,2])", R"({"shape":[2],"field":"real"})", R"({"shape":[2],"field":"quaternion","coords":[1,2]})",
                          R"({"shape":[2,2],"field":"real","coords":[1,2,3]})", R"({"shape":[0],"field":"real","coords":[]})",
                          R"({"shape":[1],"field":"real","coords":["a"]})", R"({"shape":[1],"field":"complex","coords":[[1,2,3]]})"}) {
    EXPECT_THROW(io::tensor_from_json(json::parse(bad)), io::InputError) << bad;
  }
}

TEST(StateJson, RoundTripAndErrors) {
  const auto j = io::state_to_json({2, 2}, testing_support::bell_real());
  const auto sf = io::state_from_json(json::parse(io::dump17(j)));
  EXPECT_EQ(sf.party_dims, (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(sf.matrix, testing_support::bell_real());
  EXPECT_THROW(io::state_from_json(json::parse(R"({"party_dims":[2]})")), io::InputError);
  EXPECT_THROW(io::state_from_json(json::parse(R"({"party_dims":[2],"matrix":[[1,0],[0]]})")), io::InputError);
}

TEST(RunConfig, JsonRoundTripIsLossless) {
  io::RunConfig c;
  c.command = "certify";
  c.input = "state.json";
  c.m = {3, 5};
  c.m_schedule = {2, 8};
  c.covering = "circle";
  c.guarantee = "tight";
  c.separation = "heuristic-then-exact";
  c.budget_rows = 1234;
  c.budget_evals = 98765;
  c.threads = 3;
  c.seed = 42;
  const auto back = io::config_from_json(json::parse(io::dump17(io::config_to_json(c))));
  EXPECT_EQ(back, c);
  EXPECT_THROW(io::config_from_json(json::parse("{}")), io::InputError);
}

TEST(Parsers, RejectUnknownNames) {
  EXPECT_THROW(io::parse_covering("hex"), io::InputError);
  EXPECT_THROW(io::parse_guarantee("loose"), io::InputError);
  EXPECT_THROW(io::parse_separation("fast"), io::InputError);
  EXPECT_THROW(io::parse_field("quaternion"), io::InputError);
}

TEST(CliNorm, IdentityBracketContainsTwo) {
  const auto r = run({"norm", "--input", samples + "/id2.json", "--m", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto d = r.doc();
  EXPECT_LE(d["result"]["pi_lower"].get<double>(), 2.0);
  EXPECT_GE(d["result"]["pi_upper"].get<double>(), 2.0);
  EXPECT_EQ(d["result"]["status"], "certified");
  EXPECT_EQ(d["config"]["guarantee"], "paper");
  EXPECT_EQ(d["config"]["command"], "norm");
}

TEST(CliNorm, ZeroTensor) {
  const auto r = run({"norm", "--input", samples + "/zero.json", "--m", "2"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.doc()["result"]["value"].get<double>(), 0.0);
}

TEST(CliNorm, InputErrors) {
  EXPECT_EQ(run({"norm", "--input", samples + "/bad.json"}).code, 2);
  EXPECT_EQ(run({"norm", "--input", samples + "/does_not_exist.json"}).code, 2);
  EXPECT_EQ(run({"norm"}).code, 2);
  EXPECT_EQ(run({"norm", "--input", samples + "/id2.json", "--m", "2,3,4"}).code, 2);
  EXPECT_EQ(run({"norm", "--input", samples + "/id2.json", "--covering", "hex"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
}

TEST(CliNorm, UncertifiedOnBudget) {
  const auto path = temp_file("cube.json", R"({"shape":[3,3,3],"field":"real","coords":[)"
                                           "1,2,3,4,5,6,7,8,9,1,0,1,0,1,0,1,0,1,3,1,4,1,5,9,2,6,5]}");
  const auto r = run({"norm", "--input", path, "--m", "4", "--budget-rows", "40"});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.doc()["result"]["status"], "UNCERTIFIED");
  const auto g = run({"norm", "--input", path, "--m", "4", "--covering", "grid", "--budget-grid", "100"});
  EXPECT_EQ(g.code, 3);
}

TEST(CliNorm, DeterministicOutput) {
  const std::vector<std::string> args{"norm", "--input", samples + "/id2.json", "--m", "5", "--threads", "2",
                                      "--separation", "heuristic-then-exact", "--seed", "7"};
  const auto a = run(args);
  const auto b = run(args);
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.doc()["config"]["seed"], 7);
  EXPECT_EQ(a.doc()["config"]["separation"], "heuristic-then-exact");
}

TEST(CliNorm, WritesOutputFile) {
  const auto path = (std::filesystem::temp_directory_path() / "projnorm_test_out.json").string();
  std::filesystem::remove(path);
  const auto r = run({"norm", "--input", samples + "/id2.json", "--out", path});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  const auto d = io::read_json_file(path);
  EXPECT_EQ(d["config"]["out"], path);
}

TEST(CliNorm, ComplexInput) {
  const auto r = run({"norm", "--input", samples + "/complex_rank1.json", "--m", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto d = r.doc();
  EXPECT_EQ(d["result"]["field"], "complex");
  EXPECT_LE(d["result"]["pi_lower"].get<double>(), 1.0 + 1e-12);
  EXPECT_GE(d["result"]["pi_upper"].get<double>(), 1.0 - 1e-12);
}

TEST(CliCertify, BellEntangled) {
  const auto r = run({"certify", "--input", samples + "/bell_real.json", "--m-schedule", "8", "--covering", "circle",
                      "--guarantee", "tight"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto d = r.doc()["result"];
  EXPECT_EQ(d["verdict"], "entangled");
  EXPECT_GE(d["pi_lower"].get<double>(), 1.9);
  EXPECT_FALSE(d["witness"].is_null());
  for (const char* key : {"verdict", "pi_lower", "pi_upper", "m_trail", "guarantee_mode", "witness", "telemetry"}) {
    EXPECT_TRUE(d.contains(key)) << key;
  }
}

TEST(CliCertify, ProductNotDetected) {
  const auto r = run({"certify", "--input", samples + "/product00.json", "--m-schedule", "8"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.doc()["result"]["verdict"], "not_detected");
  EXPECT_EQ(r.doc()["config"]["guarantee"], "tight");
}

TEST(CliCertify, InvalidState) {
  const auto r = run({"certify", "--input", samples + "/trace09.json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.doc()["result"]["verdict"], "invalid_state");
  EXPECT_EQ(run({"certify", "--input", samples + "/id2.json"}).code, 2);
  EXPECT_EQ(run({"certify", "--input", samples + "/bell_real.json", "--m-schedule", "4,2"}).code, 2);
}

TEST(CliCertify, BudgetExceeded) {
  const auto r = run({"certify", "--input", samples + "/bell_real.json", "--m-schedule", "8", "--budget-rows", "20"});
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(r.doc()["result"]["budget_exceeded"].get<bool>());
}

TEST(CliCovering, Examples) {
  auto r = run({"covering", "--dim", "1", "--m", "2"});
  ASSERT_EQ(r.code, 0);
  auto d = r.doc()["result"];
  EXPECT_EQ(d["stored_count"], 1);
  EXPECT_EQ(d["grid_bound"], 5);
  for (const char* key : {"dim", "m", "construction", "stored_count", "certified_radius", "guarantee_mode", "gamma1"}) {
    EXPECT_TRUE(d.contains(key)) << key;
  }

  r = run({"covering", "--dim", "2", "--m", "2"});
  d = r.doc()["result"];
  EXPECT_LE(d["stored_count"].get<int>(), 40);
  EXPECT_EQ(d["grid_bound"], 81);
  EXPECT_EQ(d["construction"], "paper_grid");

  r = run({"covering", "--dim", "2", "--m", "2", "--construction", "circle"});
  d = r.doc()["result"];
  EXPECT_EQ(d["construction"], "uniform_circle");
  EXPECT_LE(d["certified_radius"].get<double>(), 0.5);

  EXPECT_EQ(run({"covering", "--dim", "3", "--m", "2", "--construction", "circle"}).code, 2);
  EXPECT_EQ(run({"covering", "--dim", "0", "--m", "2"}).code, 2);
  EXPECT_EQ(run({"covering", "--dim", "6", "--m", "9"}).code, 3);
}

TEST(CliDebug, Oracles) {
  auto r = run({"debug", "nuclear", "--input", samples + "/id2.json"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(r.doc()["result"]["lower"].get<double>(), 2.0, 1e-15);
  r = run({"debug", "injective", "--input", samples + "/id2.json", "--restarts", "8"});
  EXPECT_NEAR(r.doc()["result"]["lower"].get<double>(), 1.0, 1e-12);
  r = run({"debug", "bracket", "--input", samples + "/id2.json", "--m", "16"});
  ASSERT_EQ(r.code, 0);
  EXPECT_LE(r.doc()["result"]["lower"].get<double>(), 2.0);
  EXPECT_GE(r.doc()["result"]["upper"].get<double>(), 2.0);
  EXPECT_EQ(run({"debug"}).code, 2);
}

TEST(Cli, HelpExitsCleanly) { EXPECT_EQ(run({"--help"}).code, 0); }

}  // namespace
