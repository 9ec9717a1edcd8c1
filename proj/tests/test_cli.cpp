// Runs the command-line tool as a subprocess and checks exit codes and
// artifacts.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <json.hpp>

#include "substruct/io.hpp"
#include "support.hpp"

using namespace substruct;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / "substruct_test_cli" / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  fs::path p(const std::string& name) const { return dir_ / name; }

  RunResult run(const std::string& args) const {
    const auto out = p("stdout.txt"), err = p("stderr.txt");
    const std::string cmd = std::string("\"") + SUBSTRUCT_CLI + "\" " + args + " > \"" + out.string() +
                            "\" 2> \"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = io::read_text(out);
    r.err = io::read_text(err);
    return r;
  }

  // Runs and requires success.
  void ok(const std::string& args) const {
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << args << "\n" << r.err;
  }

  std::string q(const std::string& name) const { return "\"" + p(name).string() + "\""; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
  EXPECT_EQ(run("frf").code, 2);  // missing model and output
  EXPECT_EQ(run("couple --components x.json --method sideways -o y.json").code, 2);
  EXPECT_EQ(run("couple --components x.json --phi 2 -o y.json").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, RuntimeErrorsExitTwo) {
  const auto r = run("frf /nonexistent/model.json -o " + q("h.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  io::write_text(p("broken.json"), "{\n  \"type\": \"lumped\",\n  oops\n}\n");
  const auto b = run("build-model " + q("broken.json") + " -o " + q("m.json"));
  EXPECT_EQ(b.code, 2);
  EXPECT_NE(b.err.find("line 3"), std::string::npos) << b.err;
}

TEST_F(Cli, BuildAndEvaluate) {
  ok("build-model --testcase component_A --kind acceleration -o " + q("a.json"));
  const auto a = io::load_state_space(p("a.json"));
  EXPECT_EQ(a.states(), 6);
  EXPECT_EQ(a.output_kind, SignalKind::acceleration);
  ok("frf " + q("a.json") + " --lines 16 -o " + q("a.csv"));
  const auto h = io::read_frf(p("a.csv"));
  EXPECT_EQ(h.lines(), 16u);
  EXPECT_EQ(h.n_outputs(), 3);
  const auto mkv = assemble_mkv(testcase_system("component_A"));
  for (std::size_t k = 0; k < h.lines(); ++k) {
    EXPECT_LE(rel_err(h.data[k], direct_accelerance(mkv.m, mkv.k, mkv.v, h.frequencies[k])), 1e-10);
  }
  // Lumped export and rebuild from the file.
  ok("build-model --testcase component_B --lumped -o " + q("b_sys.json"));
  ok("build-model " + q("b_sys.json") + " -o " + q("b.json"));
  EXPECT_EQ(io::load_state_space(p("b.json")).states(), 8);
  // Residue on the massless mount.
  EXPECT_EQ(run("build-model --testcase mount_m1 --kind acceleration -o " + q("m.json")).code, 2);
  ok("build-model --testcase mount_m1 --kind acceleration --residue 1e-6 -o " + q("m.json"));
}

TEST_F(Cli, UnaryTransforms) {
  ok("build-model --testcase mount_m1_with_fixtures -o " + q("f.json"));
  ok("differentiate " + q("f.json") + " --times 2 -o " + q("fa.json"));
  ok("invert " + q("fa.json") + " -o " + q("fz.json"));
  ok("invert " + q("fz.json") + " -o " + q("fa2.json"));
  ok("negate " + q("fz.json") + " -o " + q("fzn.json"));
  ok("coupling-form " + q("f.json") + " --interface T2 -o " + q("focf.json"));
  const auto fa = io::load_state_space(p("fa.json"));
  const auto fa2 = io::load_state_space(p("fa2.json"));
  EXPECT_EQ(fa.output_kind, SignalKind::acceleration);
  EXPECT_EQ(io::load_state_space(p("fz.json")).output_kind, SignalKind::force);
  EXPECT_EQ(io::load_state_space(p("fzn.json")).d, -io::load_state_space(p("fz.json")).d);
  EXPECT_TRUE(io::load_state_space(p("focf.json")).coupling_form);
  const auto grid = linear_grid_hz(0.5, 50.0, 32);
  EXPECT_LE(max_rel(evaluate_frf(fa2, grid), evaluate_frf(fa, grid)), 1e-10);
}

TEST_F(Cli, RelaxedChainAgainstMonolith) {
  for (const char* c : {"component_A", "component_B"}) {
    const std::string n = c;
    ok("build-model --testcase " + n + " -o " + q(n + "_d.json"));
    ok("coupling-form " + q(n + "_d.json") + " -o " + q(n + "_o.json"));
    ok("differentiate " + q(n + "_o.json") + " --times 2 -o " + q(n + ".json"));
  }
  ok("build-model --testcase mount_m1_with_fixtures -o " + q("f1.json"));
  ok("build-model --testcase mount_m2_with_fixtures -o " + q("f2.json"));
  ok("invsub " + q("f1.json") + " --side1 T1 --side2 T2 -o " + q("ce1.json"));
  ok("invsub " + q("f2.json") + " --side1 T3 --side2 T4 -o " + q("ce2.json"));
  const std::string couple = "couple --method relaxed --components " + q("component_A.json") + " " +
                             q("component_B.json") + " --ces " + q("ce1.json") + " " + q("ce2.json") +
                             " --pair a2=p1 --pair a3=p2";
  ok(couple + " -o " + q("ab.json"));
  ok(couple + " --reduce lt -o " + q("ab_lt.json"));
  ok(couple + " --reduce manual -o " + q("ab_manual.json"));
  EXPECT_EQ(io::load_state_space(p("ab.json")).states(), 22);
  EXPECT_EQ(io::load_state_space(p("ab_lt.json")).states(), 18);
  EXPECT_EQ(io::load_state_space(p("ab_manual.json")).states(), 18);

  ok("build-model --testcase assembled_monolith --kind acceleration -o " + q("mono.json"));
  for (const char* m : {"mono", "ab", "ab_lt"}) {
    ok("frf " + q(std::string(m) + ".json") + " --lines 256 -o " + q(std::string(m) + ".csv"));
  }
  const auto pass = run("compare " + q("mono.csv") + " " + q("ab_lt.csv") + " --tol 1e-6 --match-by-name");
  EXPECT_EQ(pass.code, 0) << pass.out << pass.err;
  EXPECT_EQ(pass.out.rfind("PASS", 0), 0u) << pass.out;
  EXPECT_EQ(run("compare " + q("ab.csv") + " " + q("ab_lt.csv") + " --tol 1e-9").code, 0);
  // The same pair at a tolerance below the residue error fails with exit 1.
  const auto fail = run("compare " + q("mono.csv") + " " + q("ab_lt.csv") + " --tol 1e-12 --match-by-name");
  EXPECT_EQ(fail.code, 1);
  EXPECT_EQ(fail.out.rfind("FAIL", 0), 0u) << fail.out;
  EXPECT_NE(fail.out.find("worst_line="), std::string::npos);
  // Different structure names need --match-by-name.
  EXPECT_EQ(run("compare " + q("mono.csv") + " " + q("ab_lt.csv") + " --tol 1e-6").code, 2);
}

TEST_F(Cli, PrimalCouplingAndDecoupling) {
  ok("build-model --testcase mount_m1_with_fixtures --kind acceleration -o " + q("fa.json"));
  ok("invert " + q("fa.json") + " -o " + q("fz.json"));
  for (const char* t : {"T1", "T2"}) {
    // Single free mass of 2 kg as a lumped file.
    LumpedSystem fx = free_mass(std::string("fx_") + t, t, 2.0);
    io::save_model(p(std::string(t) + "_sys.json"), fx);
    ok("build-model " + q(std::string(t) + "_sys.json") + " --kind acceleration -o " + q(std::string(t) + "_a.json"));
    ok("invert " + q(std::string(t) + "_a.json") + " -o " + q(std::string(t) + "_z.json"));
  }
  ok("decouple --method primal --assembly " + q("fz.json") + " --remove " + q("T1_z.json") + " " + q("T2_z.json") +
     " --pair mount_m1_with_fixtures:T1=fx_T1:T1 --pair mount_m1_with_fixtures:T2=fx_T2:T2 -o " + q("mount.json"));
  const auto mount = io::load_state_space(p("mount.json"));
  EXPECT_EQ(mount.states(), 8);
  const double w = kTwoPi * 10.0;
  const cd off = evaluate_frf(mount, std::vector<double>{w}).data[0](0, 1);
  const cd ref = mount_offdiag_apparent_mass(1e5, 20.0, w);
  EXPECT_LE(std::abs(off - ref) / std::abs(ref), 1e-9);

  // Primal coupling of the inverted components matches rigid dual coupling.
  for (const char* c : {"component_A", "component_B"}) {
    const std::string n = c;
    ok("build-model --testcase " + n + " --kind acceleration -o " + q(n + ".json"));
    ok("invert " + q(n + ".json") + " -o " + q(n + "_z.json"));
  }
  ok("couple --method primal --components " + q("component_A_z.json") + " " + q("component_B_z.json") +
     " --pair a2=p1 --pair a3=p2 -o " + q("primal.json"));
  ok("invert " + q("primal.json") + " -o " + q("primal_acc.json"));
  ok("couple --method rigid --components " + q("component_A.json") + " " + q("component_B.json") +
     " --pair a2=p1 --pair a3=p2 -o " + q("rigid.json"));
  const auto grid = linear_grid_hz(0.5, 50.0, 128);
  const auto hp = evaluate_frf(io::load_state_space(p("primal_acc.json")), grid);
  const auto hr = oracle::select_frf(evaluate_frf(io::load_state_space(p("rigid.json")), grid), hp.outputs,
                                     hp.inputs);
  EXPECT_LE(oracle::compare_frf(hr, hp).max_rel_error, 1e-8);
  EXPECT_EQ(run("couple --method primal --reduce lt --components " + q("component_A_z.json") + " -o " +
                q("x.json"))
                .code,
            2);
}

TEST_F(Cli, NoiseIsSeeded) {
  ok("build-model --testcase component_A --kind acceleration -o " + q("a.json"));
  ok("frf " + q("a.json") + " --lines 32 -o " + q("a.csv"));
  ok("noise " + q("a.csv") + " --sigma 5e-3 --seed 3 -o " + q("n1.csv"));
  ok("noise " + q("a.csv") + " --sigma 5e-3 --seed 3 -o " + q("n2.csv"));
  ok("noise " + q("a.csv") + " --sigma 5e-3 --seed 4 -o " + q("n3.csv"));
  EXPECT_EQ(io::read_text(p("n1.csv")), io::read_text(p("n2.csv")));
  EXPECT_NE(io::read_text(p("n1.csv")), io::read_text(p("n3.csv")));
  EXPECT_EQ(run("noise " + q("a.csv") + " --sigma -1 -o " + q("n4.csv")).code, 2);
}

TEST_F(Cli, PipelineExitCodes) {
  // Copies of the shipped configs with absolute paths, writing into the
  // scratch directory.
  const fs::path shipped = fs::path(SUBSTRUCT_DATA_DIR) / "pipelines";
  for (const char* name : {"relaxed_chain", "wrong_phi"}) {
    auto j = nlohmann::json::parse(io::read_text(shipped / (std::string(name) + ".json")));
    for (auto& s : j["steps"]) {
      if (s["op"] == "load") s["path"] = (shipped / s["path"].get<std::string>()).string();
    }
    j["output_dir"] = p(std::string("out_") + name).string();
    j["grid"]["lines"] = 128;
    io::write_text(p(std::string(name) + ".json"), j.dump(1));
  }
  const auto good = run("pipeline " + q("relaxed_chain.json") + " --report " + q("report.json"));
  EXPECT_EQ(good.code, 0) << good.err;
  const auto report = nlohmann::json::parse(io::read_text(p("report.json")));
  EXPECT_EQ(report["success"], true);
  EXPECT_EQ(nlohmann::json::parse(good.out), report);
  EXPECT_TRUE(fs::exists(p("out_relaxed_chain") / "coupled_reduced.csv"));

  const auto bad = run("pipeline " + q("wrong_phi.json"));
  EXPECT_EQ(bad.code, 1);
  const auto bad_report = nlohmann::json::parse(bad.out);
  EXPECT_EQ(bad_report["steps"].back()["status"], "fail");

  io::write_text(p("error.json"), R"({"steps": [{"op": "load", "path": "nope.json", "out": "X"}]})");
  EXPECT_EQ(run("pipeline " + q("error.json")).code, 2);
  io::write_text(p("invalid.json"), R"({"steps": [{"op": "frf", "in": "X", "out": "H"}]})");
  EXPECT_EQ(run("pipeline " + q("invalid.json")).code, 2);
}
