#include <filesystem>

#include <gtest/gtest.h>

#include "substruct/error.hpp"
#include "substruct/io.hpp"
#include "substruct/pipeline.hpp"
#include "support.hpp"

using namespace substruct;
using namespace substruct::pipeline;
namespace fs = std::filesystem;

namespace {

const fs::path kPipelines = fs::path(SUBSTRUCT_DATA_DIR) / "pipelines";

fs::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::temp_directory_path() / "substruct_test_pipeline" /
                       (std::string(info->test_suite_name()) + "_" + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig shipped(const std::string& name, const fs::path& out) {
  auto cfg = load_config(kPipelines / (name + ".json"));
  cfg.output_dir = out;
  return cfg;
}

const StepReport* find_step(const PipelineReport& r, const std::string& op, std::size_t nth = 0) {
  for (const auto& s : r.steps) {
    if (s.op == op && nth-- == 0) return &s;
  }
  return nullptr;
}

}  // namespace

TEST(Pipeline, EmptyPipelineSucceeds) {
  const auto cfg = parse_config(R"({"steps": []})");
  const auto r = run_pipeline(cfg);
  EXPECT_TRUE(r.success);
  EXPECT_TRUE(r.steps.empty());
  EXPECT_EQ(r.to_json()["steps"].size(), 0u);
}

TEST(Pipeline, RelaxedChainPasses) {
  const auto out = scratch_dir();
  const auto cfg = shipped("relaxed_chain", out);
  EXPECT_EQ(cfg.grid.lines, 1024u);
  const auto r = run_pipeline(cfg);
  ASSERT_TRUE(r.success) << (r.steps.empty() ? "" : r.steps.back().message);
  EXPECT_EQ(r.steps.size(), cfg.steps.size());
  std::size_t compares = 0;
  for (const auto& s : r.steps) {
    EXPECT_EQ(s.status, StepStatus::pass) << s.index << " " << s.op << ": " << s.message;
    if (s.op == "compare") {
      ++compares;
      EXPECT_LE(s.metrics.at("max_rel_error"), s.metrics.at("tolerance"));
    }
  }
  EXPECT_EQ(compares, 4u);
  EXPECT_EQ(find_step(r, "state_count", 0)->metrics.at("states"), 22.0);
  EXPECT_EQ(find_step(r, "state_count", 1)->metrics.at("states"), 18.0);
  EXPECT_EQ(find_step(r, "reduce")->metrics.at("states_after"), 18.0);

  // Artifacts: the exported FRF and model reload and agree with each other.
  const auto h = io::read_frf(out / "coupled_reduced.csv");
  EXPECT_EQ(h.lines(), 1024u);
  const auto m = io::load_state_space(out / "coupled_reduced.json");
  EXPECT_EQ(m.states(), 18);
  EXPECT_LE(oracle::compare_frf(h, evaluate_frf(m, h.frequencies)).max_rel_error, 1e-12);
}

TEST(Pipeline, WrongPhiFailsWithLocatedWorstEntry) {
  const auto out = scratch_dir();
  const auto r = run_pipeline(shipped("wrong_phi", out));
  EXPECT_FALSE(r.success);
  ASSERT_FALSE(r.steps.empty());
  const auto& last = r.steps.back();
  EXPECT_EQ(last.op, "compare");
  EXPECT_EQ(last.status, StepStatus::fail);
  EXPECT_GT(last.metrics.at("max_rel_error"), last.metrics.at("tolerance"));
  EXPECT_NE(last.message.find("at line"), std::string::npos) << last.message;
  EXPECT_FALSE(last.details.at("worst_output").empty());
  EXPECT_FALSE(last.details.at("worst_input").empty());
  const auto line = std::stoul(last.details.at("worst_line"));
  EXPECT_LT(line, 1024u);
  EXPECT_NEAR(last.metrics.at("worst_frequency_hz"), 0.5 + 49.5 * double(line) / 1023.0, 1e-9);
  // Everything before the failing compare ran and passed.
  for (std::size_t i = 0; i + 1 < r.steps.size(); ++i) EXPECT_EQ(r.steps[i].status, StepStatus::pass);
  const auto j = r.to_json();
  EXPECT_EQ(j["success"], false);
  EXPECT_EQ(j["steps"].back()["status"], "fail");
}

TEST(Pipeline, DeterministicReports) {
  const auto out = scratch_dir();
  auto cfg = shipped("relaxed_chain", out);
  cfg.grid.lines = 128;
  // A noise step makes the seed part of the contract.
  cfg.steps.push_back({"noise", {{"op", "noise"}, {"in", "H_red"}, {"sigma", 5e-3}, {"seed", 9}, {"out", "Hn"}}});
  cfg.steps.push_back({"compare", {{"op", "compare"}, {"reference", "H_red"}, {"test", "Hn"}, {"tolerance", 1e9}}});
  const auto r1 = run_pipeline(cfg).to_json();
  const auto r2 = run_pipeline(cfg).to_json();
  EXPECT_EQ(r1, r2);
  EXPECT_EQ(r1["success"], true);
  EXPECT_GT(r1["steps"].back()["metrics"]["max_rel_error"].get<double>(), 0.0);
}

TEST(Pipeline, ErrorStepStopsTheRun) {
  const auto dir = scratch_dir();
  const auto cfg = parse_config(R"({
    "steps": [
      {"op": "testcase", "system": "component_A", "out": "A"},
      {"op": "load", "path": "missing.json", "out": "X"},
      {"op": "build_model", "in": "A", "out": "A_disp"}
    ]})",
                                dir);
  const auto r = run_pipeline(cfg);
  EXPECT_FALSE(r.success);
  ASSERT_EQ(r.steps.size(), 2u);
  EXPECT_EQ(r.steps[0].status, StepStatus::pass);
  EXPECT_EQ(r.steps[1].status, StepStatus::error);
  EXPECT_NE(r.steps[1].message.find("missing.json"), std::string::npos) << r.steps[1].message;
}

TEST(Pipeline, StateCountMismatchFails) {
  const auto cfg = parse_config(R"({
    "steps": [
      {"op": "testcase", "system": "component_A", "out": "A_sys"},
      {"op": "build_model", "in": "A_sys", "kind": "acceleration", "out": "A"},
      {"op": "state_count", "in": "A", "expect": 7}
    ]})");
  const auto r = run_pipeline(cfg);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.steps.back().status, StepStatus::fail);
  EXPECT_EQ(r.steps.back().metrics.at("states"), 6.0);
}

TEST(PipelineConfig, RejectsMalformedConfigs) {
  // Unknown artifact.
  EXPECT_THROW(parse_config(R"({"steps": [{"op": "frf", "in": "nothing", "out": "H"}]})"), ParseError);
  // Artifact used before it is produced.
  EXPECT_THROW(parse_config(R"({"steps": [
      {"op": "build_model", "in": "A_sys", "out": "A"},
      {"op": "testcase", "system": "component_A", "out": "A_sys"}]})"),
               ParseError);
  EXPECT_THROW(parse_config(R"({"steps": [{"op": "transmogrify"}]})"), ParseError);
  EXPECT_THROW(parse_config(R"({"phi": 2, "steps": []})"), ParseError);
  EXPECT_THROW(parse_config(R"({"grid": {"f_min_hz": 5, "f_max_hz": 1, "lines": 8}, "steps": []})"), ParseError);
  EXPECT_THROW(parse_config(R"({"epsilon": -1, "steps": []})"), ParseError);
  EXPECT_THROW(parse_config(R"({"steps": [)"), ParseError);
  EXPECT_THROW(parse_config(R"({"steps": {}})"), ParseError);
}

TEST(PipelineConfig, ShippedConfigsParse) {
  for (const char* name : {"relaxed_chain", "wrong_phi"}) {
    const auto cfg = load_config(kPipelines / (std::string(name) + ".json"));
    EXPECT_EQ(cfg.phi, 1);
    EXPECT_EQ(cfg.residue.epsilon, 1e-7);
    EXPECT_EQ(cfg.tolerances.at("oracle"), 1e-8);
    EXPECT_FALSE(cfg.steps.empty());
  }
}
