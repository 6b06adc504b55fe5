#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qkt/qkt.hpp"

namespace {

using namespace qkt;

// Suite presets for `verify <suite>`: small demo sizes; flags override.
ExperimentConfig demo_config(const std::string& suite) {
  ExperimentConfig c;
  c.suite = suite;
  if (suite == "witness") {
    c.space = {"cycle", 16, -1};
    c.eps = 0.05;
    c.samples = 20;
  } else if (suite == "kappa0") {
    c.space = {"cycle", 16, -1};
    c.r = Rat(2);
    c.eps = 0.1;
    c.samples = 20;
  } else if (suite == "polar") {
    c.space = {"cycle", 12, -1};
    c.fiber = 2;
    c.eps = 0.05;
    c.samples = 5;
  } else if (suite == "factor") {
    c.space = {"path", 40, -1};
    c.annulus = Rat(11);
    c.eps = 0.04;
    c.path_samples = 7;
    c.phase_amp = 0.05;
    c.rot_amp = 0.05;
    c.rot_count = 6;
    c.mode = NormMode::OneInfBound;
    c.samples = 3;
  } else if (suite == "cia") {
    c.space = {"cycle", 24, -1};
    c.fiber = 2;
    c.annulus = Rat(11);
    c.delta = 0.25;
    c.samples = 20;
  } else if (suite == "boundary" || suite == "factorizable") {
    c.space = {"path", 12, -1};
    c.annulus = Rat(6);
    c.eps = 0.1;
    c.path_samples = 3;
    c.phase_amp = 0.12;
    c.samples = 2;
  } else if (suite == "cover") {
    c.space = {"path", 60, -1};
    c.samples = 10;
  } else {
    throw ConfigError("unknown suite: " + suite);
  }
  return c;
}

int emit_suite(const ExperimentConfig& cfg) {
  SuiteOutcome out = run_suite(cfg);
  std::string text = canonical(out.report);
  if (!cfg.out.empty()) {
    write_text(cfg.out, text);
    std::cout << cfg.suite << ": " << (out.pass ? "pass" : "FAIL") << " " << out.completed << "/"
              << cfg.samples << " -> " << cfg.out << "\n";
  } else {
    std::cout << text;
  }
  if (!cfg.csv.empty()) write_text(cfg.csv, report_csv(out.report));
  if (!out.pass) {
    std::string fail_path =
        (cfg.out.empty() ? std::string("failed_instance.json")
                         : cfg.out + ".failed.json");
    write_text(fail_path, canonical(out.failed_instance));
    std::cerr << "bound violated: " << out.error << "\n"
              << "instance saved to " << fail_path << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified decompositions in quantitative operator K-theory"};
  app.require_subcommand(1);
  int rc = 0;

  // --- space gen -------------------------------------------------------------
  auto* space_cmd = app.add_subcommand("space", "finite metric spaces");
  space_cmd->require_subcommand(1);
  auto* space_gen = space_cmd->add_subcommand("gen", "emit a space as JSON");
  std::string sg_kind = "cycle", sg_out;
  int sg_size = 16, sg_cols = -1;
  space_gen->add_option("--kind", sg_kind, "path|cycle|grid|tree");
  space_gen->add_option("--size", sg_size, "points (rows for grid)");
  space_gen->add_option("--cols", sg_cols, "columns (grid only)");
  space_gen->add_option("--out", sg_out, "output file (default stdout)");
  space_gen->callback([&] {
    qkt::SpacePtr sp = qkt::generate_space(sg_kind, sg_size, sg_cols);
    sp->validate();
    std::string text = qkt::canonical(qkt::space_json(*sp));
    if (sg_out.empty())
      std::cout << text;
    else
      qkt::write_text(sg_out, text);
  });

  // --- cover verify ----------------------------------------------------------
  auto* cover_cmd = app.add_subcommand("cover", "cover families");
  cover_cmd->require_subcommand(1);
  auto* cover_verify = cover_cmd->add_subcommand(
      "verify", "annular two-coloring: joint cover and exact R-disjointness");
  std::string cv_kind = "cycle", cv_annulus = "4", cv_out;
  int cv_size = 16, cv_cols = -1, cv_base = 0;
  cover_verify->add_option("--kind", cv_kind, "path|cycle|grid|tree");
  cover_verify->add_option("--size", cv_size, "points (rows for grid)");
  cover_verify->add_option("--cols", cv_cols, "columns (grid only)");
  cover_verify->add_option("--annulus", cv_annulus, "annulus width R (rational)");
  cover_verify->add_option("--basepoint", cv_base, "center of the annuli");
  cover_verify->add_option("--out", cv_out, "output file (default stdout)");
  cover_verify->callback([&] {
    qkt::SpacePtr sp = qkt::generate_space(cv_kind, cv_size, cv_cols);
    qkt::Rat R = qkt::Rat::parse(cv_annulus);
    auto [f1, f2] = qkt::annular_two_coloring(*sp, cv_base, R);
    qkt::CoverCertificate cert = qkt::verify_cover({f1, f2}, *sp, R);
    qkt::json j;
    j["format"] = "qkt-cover/1";
    j["space"] = sp->name;
    j["R"] = R.str();
    j["pass"] = cert.pass;
    if (!cert.pass) j["violation"] = cert.violation;
    j["family1"] = qkt::family_json(f1);
    j["family2"] = qkt::family_json(f2);
    std::string text = qkt::canonical(j);
    if (cv_out.empty())
      std::cout << text;
    else
      qkt::write_text(cv_out, text);
    if (!cert.pass) rc = 1;
  });

  // --- verify <suite> ----------------------------------------------------------
  auto* verify_cmd = app.add_subcommand("verify", "run one suite with demo defaults");
  verify_cmd->require_subcommand(1);
  struct VerifyFlags {
    std::uint64_t seed = 1;
    double eps = -1;
    int samples = -1;
    std::string out, csv, kind, mode;
    int size = -1, fiber = -1;
  };
  auto vf = std::make_shared<VerifyFlags>();
  for (const char* name :
       {"witness", "kappa0", "polar", "factor", "cia", "boundary", "factorizable", "cover"}) {
    auto* sub = verify_cmd->add_subcommand(name, std::string("suite: ") + name);
    sub->add_option("--seed", vf->seed, "RNG seed");
    sub->add_option("--eps", vf->eps, "epsilon in (0, 1/4)");
    sub->add_option("--samples", vf->samples, "instances to run");
    sub->add_option("--space", vf->kind, "space kind override");
    sub->add_option("--size", vf->size, "space size override");
    sub->add_option("--fiber", vf->fiber, "fiber dimension override");
    sub->add_option("--mode", vf->mode, "norm mode: operator|frobenius|oneinf");
    sub->add_option("--out", vf->out, "report file");
    sub->add_option("--csv", vf->csv, "per-instance CSV file");
    sub->callback([&rc, vf, name] {
      qkt::ExperimentConfig cfg = demo_config(name);
      cfg.seed = vf->seed;
      if (vf->eps > 0) cfg.eps = vf->eps;
      if (vf->samples > 0) cfg.samples = vf->samples;
      if (!vf->kind.empty()) cfg.space.kind = vf->kind;
      if (vf->size > 0) cfg.space.size = vf->size;
      if (vf->fiber > 0) cfg.fiber = vf->fiber;
      if (!vf->mode.empty()) cfg.mode = qkt::mode_of(vf->mode);
      cfg.out = vf->out;
      cfg.csv = vf->csv;
      rc = emit_suite(cfg);
    });
  }

  // --- run <config.json> -------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "run a suite from a config file");
  std::string run_path, run_out, run_csv;
  run_cmd->add_option("config", run_path, "qkt-config/1 JSON file")->required();
  run_cmd->add_option("--out", run_out, "report file");
  run_cmd->add_option("--csv", run_csv, "per-instance CSV file");
  run_cmd->callback([&] {
    qkt::json j = qkt::parse_json(qkt::read_text(run_path), run_path);
    qkt::ExperimentConfig cfg = qkt::config_of(j);
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
    if (j.contains("csv")) cfg.csv = j.at("csv").get<std::string>();
    if (!run_out.empty()) cfg.out = run_out;
    if (!run_csv.empty()) cfg.csv = run_csv;
    rc = emit_suite(cfg);
  });

  // --- replay <instance.json> ---------------------------------------------------
  auto* replay_cmd = app.add_subcommand("replay", "re-run one serialized instance");
  std::string rp_path, rp_out;
  replay_cmd->add_option("instance", rp_path, "qkt-instance/1 JSON file")->required();
  replay_cmd->add_option("--out", rp_out, "output file (default stdout)");
  replay_cmd->callback([&] {
    qkt::json inst = qkt::parse_json(qkt::read_text(rp_path), rp_path);
    qkt::json m = qkt::replay_instance(inst);
    std::string text = qkt::canonical(m);
    if (rp_out.empty())
      std::cout << text;
    else
      qkt::write_text(rp_out, text);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const qkt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qkt::QktError& e) {
    std::cerr << "bound violated: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
