#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "qkt/qkt.hpp"

using namespace qkt;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("suite ids and instance streams are frozen", "[experiments]") {
  CHECK(suite_id("witness") == 1);
  CHECK(suite_id("kappa0") == 2);
  CHECK(suite_id("polar") == 3);
  CHECK(suite_id("factor") == 4);
  CHECK(suite_id("cia") == 5);
  CHECK(suite_id("boundary") == 6);
  CHECK(suite_id("factorizable") == 7);
  CHECK(suite_id("cover") == 8);
  CHECK_THROWS_WITH(suite_id("spectral"), ContainsSubstring("unknown suite"));

  CHECK(instance_stream("witness", 5) == 1000005ull);
  CHECK(instance_stream("boundary", 7) == 6000007ull);
  CHECK(instance_stream("cover", 0) == 8000000ull);
}

TEST_CASE("configs round-trip through their canonical form", "[experiments]") {
  ExperimentConfig c;
  c.suite = "cia";
  c.seed = 7;
  c.samples = 2;
  c.eps = 0.1;
  c.space = SpaceSpec{"path", 30, -1};
  c.fiber = 2;
  c.r = Rat(2);
  c.annulus = Rat(5);
  c.basepoint = 3;
  c.s = Rat(11, 2);
  c.overlap_to_2 = true;
  c.path_samples = 4;
  c.phase_amp = 0.02;
  c.rot_amp = 0.0625;
  c.rot_count = 3;
  c.delta = 0.125;
  c.mode = NormMode::FrobeniusBound;

  json j = config_json(c);
  CHECK(j.at("format") == "qkt-config/1");
  CHECK(j.at("norm_mode") == "frobenius");
  CHECK(j.at("r") == "2");
  CHECK(j.at("s") == "11/2");

  ExperimentConfig back = config_of(j);
  CHECK(canonical(config_json(back)) == canonical(j));
  CHECK(back.mode == NormMode::FrobeniusBound);
  CHECK(back.overlap_to_2 == true);

  // defaults survive a minimal config
  ExperimentConfig d = config_of(json{{"suite", "kappa0"}});
  CHECK(d.suite == "kappa0");
  CHECK(d.samples == 10);
  CHECK(d.space.kind == "cycle");
}

TEST_CASE("config gates reject malformed input", "[experiments]") {
  CHECK_THROWS_WITH(config_of(json{{"samples", 0}}),
                    ContainsSubstring("samples must be positive"));
  CHECK_THROWS_WITH(config_of(json{{"fiber", 0}}),
                    ContainsSubstring("fiber must be positive"));
  CHECK_THROWS_WITH(config_of(json{{"eps", 0.3}}),
                    ContainsSubstring("eps must lie in (0, 1/4)"));
  CHECK_THROWS_AS(config_of(json{{"eps", 0.0}}), ConfigError);
  CHECK_THROWS_WITH(config_of(json{{"suite", "nope"}}),
                    ContainsSubstring("unknown suite"));
  CHECK_THROWS_WITH(config_of(json{{"format", "qkt-config/2"}}),
                    ContainsSubstring("expected format qkt-config/1"));
}

TEST_CASE("a witness suite runs, replays, and stays deterministic", "[experiments]") {
  ExperimentConfig cfg;
  cfg.suite = "witness";
  cfg.seed = 1;
  cfg.samples = 3;

  SuiteOutcome out = run_suite(cfg);
  REQUIRE(out.pass);
  CHECK(out.completed == 3);
  CHECK(out.error.empty());

  const json& rep = out.report;
  CHECK(rep.at("format") == "qkt-report/1");
  CHECK(rep.at("suite") == "witness");
  CHECK(rep.at("config") == config_json(cfg));
  REQUIRE(rep.at("instances").size() == 3);
  for (int i = 0; i < 3; ++i) {
    const json& inst = rep.at("instances")[i];
    CHECK(inst.at("index") == i);
    CHECK(inst.at("stream") == 1000000ull + static_cast<unsigned>(i));
    CHECK(inst.at("witness_dist").get<double>() < inst.at("bound").get<double>());
  }
  CHECK(rep.at("summary") == json({{"requested", 3}, {"completed", 3}, {"pass", true}}));

  // byte-for-byte determinism across runs
  SuiteOutcome again = run_suite(cfg);
  CHECK(canonical(again.report) == canonical(rep));

  // replaying a serialized instance reproduces the in-suite record exactly
  json inst1 = instance_json(cfg, 1);
  CHECK(inst1.at("format") == "qkt-instance/1");
  CHECK(inst1.at("stream") == 1000001ull);
  json replayed = replay_instance(inst1);
  CHECK(canonical(replayed) == canonical(rep.at("instances")[1]));

  json bad = inst1;
  bad["format"] = "qkt-instance/2";
  CHECK_THROWS_WITH(replay_instance(bad),
                    ContainsSubstring("expected format qkt-instance/1"));
}

TEST_CASE("a violated bound aborts the suite with a serialized failure", "[experiments]") {
  ExperimentConfig cfg;
  cfg.suite = "polar";
  cfg.seed = 3;
  cfg.samples = 4;
  cfg.eps = 1e-300;  // valid config, impossible certification target

  SuiteOutcome out = run_suite(cfg);
  CHECK_FALSE(out.pass);
  CHECK(out.completed == 0);
  CHECK(!out.error.empty());
  CHECK(out.failed_instance.at("format") == "qkt-instance/1");
  CHECK(out.failed_instance.at("index") == 0);
  CHECK(out.failed_instance.at("error") == out.error);
  CHECK(out.report.at("summary").at("pass") == false);
  CHECK(out.report.at("summary").at("error") == out.error);
  CHECK(out.report.at("instances").empty());
  CHECK(report_csv(out.report).empty());
}

TEST_CASE("malformed generator parameters surface as config errors", "[experiments]") {
  ExperimentConfig cfg;
  cfg.suite = "factor";
  cfg.seed = 5;
  cfg.samples = 1;
  cfg.eps = 0.04;
  cfg.space = SpaceSpec{"path", 12, -1};
  cfg.annulus = Rat(6);
  cfg.path_samples = 2;  // far too coarse for steps below eps
  cfg.phase_amp = 0.2;
  cfg.rot_amp = 0.2;
  cfg.rot_count = 2;
  CHECK_THROWS_AS(run_suite(cfg), ConfigError);
}

TEST_CASE("the per-instance table freezes its column order", "[experiments]") {
  ExperimentConfig cfg;
  cfg.suite = "witness";
  cfg.seed = 1;
  cfg.samples = 3;
  SuiteOutcome out = run_suite(cfg);
  std::string csv = report_csv(out.report);
  std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header == "bound,eps,index,residual,stream,witness_dist,word_defect");
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 4);

  ExperimentConfig cov;
  cov.suite = "cover";
  cov.samples = 2;
  cov.space = SpaceSpec{"path", 40, -1};
  SuiteOutcome cout_ = run_suite(cov);
  REQUIRE(cout_.pass);
  std::string ccsv = report_csv(cout_.report);
  CHECK(ccsv.substr(0, ccsv.find('\n')) == "R,diam1,diam2,gap1,gap2,index,pieces1,pieces2,stream");
  CHECK(ccsv.find("\n1,") != std::string::npos);  // first row: R = 1
}
