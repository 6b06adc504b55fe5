#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkt/boundary.hpp"
#include "qkt/generators.hpp"
#include "qkt/serialize.hpp"

namespace qkt {

struct ExperimentConfig {
  std::string suite = "witness";
  std::uint64_t seed = 1;
  int samples = 10;
  double eps = 0.05;
  SpaceSpec space{"cycle", 16, -1};
  int fiber = 1;
  Rat r = Rat(1);
  // controlled pair (factor / cia / boundary / cover suites)
  Rat annulus = Rat(11);
  int basepoint = 0;
  Rat s = Rat(21, 4);
  bool overlap_to_2 = false;
  // homotopy shape
  int path_samples = 7;
  double phase_amp = 0.05;
  double rot_amp = 0.05;
  int rot_count = 4;
  // cia
  double delta = 0.25;
  NormMode mode = NormMode::Operator;
  std::string out;  // report file; empty = stdout only
  std::string csv;  // optional per-instance table
};

inline int suite_id(const std::string& suite) {
  if (suite == "witness") return 1;
  if (suite == "kappa0") return 2;
  if (suite == "polar") return 3;
  if (suite == "factor") return 4;
  if (suite == "cia") return 5;
  if (suite == "boundary") return 6;
  if (suite == "factorizable") return 7;
  if (suite == "cover") return 8;
  throw ConfigError("unknown suite: " + suite);
}

inline std::uint64_t instance_stream(const std::string& suite, int index) {
  return static_cast<std::uint64_t>(suite_id(suite)) * 1000000ull +
         static_cast<std::uint64_t>(index);
}

inline json config_json(const ExperimentConfig& c) {
  json j;
  j["format"] = "qkt-config/1";
  j["suite"] = c.suite;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["eps"] = c.eps;
  j["space"] = space_spec_json(c.space);
  j["fiber"] = c.fiber;
  j["r"] = rat_json(c.r);
  j["annulus"] = rat_json(c.annulus);
  j["basepoint"] = c.basepoint;
  j["s"] = rat_json(c.s);
  j["overlap_to_2"] = c.overlap_to_2;
  j["path_samples"] = c.path_samples;
  j["phase_amp"] = c.phase_amp;
  j["rot_amp"] = c.rot_amp;
  j["rot_count"] = c.rot_count;
  j["delta"] = c.delta;
  j["norm_mode"] = mode_name(c.mode);
  return j;
}

inline ExperimentConfig config_of(const json& j) {
  ExperimentConfig c;
  if (j.contains("format") && j.at("format").get<std::string>() != "qkt-config/1")
    throw ConfigError("expected format qkt-config/1");
  if (j.contains("suite")) c.suite = j.at("suite").get<std::string>();
  suite_id(c.suite);  // validate
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("samples")) c.samples = j.at("samples").get<int>();
  if (j.contains("eps")) c.eps = j.at("eps").get<double>();
  if (j.contains("space")) c.space = space_spec_of(j.at("space"));
  if (j.contains("fiber")) c.fiber = j.at("fiber").get<int>();
  if (j.contains("r")) c.r = rat_of(j.at("r"));
  if (j.contains("annulus")) c.annulus = rat_of(j.at("annulus"));
  if (j.contains("basepoint")) c.basepoint = j.at("basepoint").get<int>();
  if (j.contains("s")) c.s = rat_of(j.at("s"));
  if (j.contains("overlap_to_2")) c.overlap_to_2 = j.at("overlap_to_2").get<bool>();
  if (j.contains("path_samples")) c.path_samples = j.at("path_samples").get<int>();
  if (j.contains("phase_amp")) c.phase_amp = j.at("phase_amp").get<double>();
  if (j.contains("rot_amp")) c.rot_amp = j.at("rot_amp").get<double>();
  if (j.contains("rot_count")) c.rot_count = j.at("rot_count").get<int>();
  if (j.contains("delta")) c.delta = j.at("delta").get<double>();
  if (j.contains("norm_mode")) c.mode = mode_of(j.at("norm_mode").get<std::string>());
  if (c.samples < 1) throw ConfigError("config: samples must be positive");
  if (c.fiber < 1) throw ConfigError("config: fiber must be positive");
  if (!(c.eps > 0 && c.eps < 0.25)) throw ConfigError("config: eps must lie in (0, 1/4)");
  return c;
}

inline json instance_json(const ExperimentConfig& cfg, int index) {
  json j;
  j["format"] = "qkt-instance/1";
  j["suite"] = cfg.suite;
  j["index"] = index;
  j["stream"] = instance_stream(cfg.suite, index);
  j["config"] = config_json(cfg);
  return j;
}

inline ControlledMVPair pair_from(const ExperimentConfig& cfg, const SpacePtr& sp) {
  auto [f1, f2] = annular_two_coloring(*sp, cfg.basepoint, cfg.annulus);
  return build_pair(sp, f1, f2, cfg.r, cfg.s, cfg.overlap_to_2);
}

// --- one instance per suite; throws QktError on any violated bound ----------

inline json run_witness_one(const ExperimentConfig& cfg, int i) {
  Rng rng(cfg.seed, instance_stream(cfg.suite, i));
  SpacePtr sp = cfg.space.build();
  QuasiElement u = random_eps_unitary(rng, sp, cfg.fiber, cfg.r, cfg.eps, cfg.mode);

  BandedOperator w = witness(u.op);
  BandedOperator us = adjoint(u.op);
  BandedOperator target = direct_sum({&u.op, &us});
  double d = measured_dist(w, target, cfg.mode);
  if (!(d < 3.0 * cfg.eps))
    throw BoundError("witness: distance " + std::to_string(d) + " is not below 3 eps = " +
                     std::to_string(3.0 * cfg.eps));

  // the witness must agree with the X Z Y X word evaluated at (u, 0) times J
  BandedOperator zero = BandedOperator::zero(sp, cfg.fiber);
  Word tw = word_T(u.op, zero, operator_norm(u.op), 0.0, "T");
  BandedOperator jj = elem_J(sp, cfg.fiber);
  double word_defect = one_inf_bound(tw.product() * jj - w);
  if (!(word_defect < 1e-10))
    throw NumericError("witness: word product deviates from the closed form by " +
                       std::to_string(word_defect));

  json m;
  m["eps"] = cfg.eps;
  m["residual"] = u.residual;
  m["witness_dist"] = d;
  m["bound"] = 3.0 * cfg.eps;
  m["word_defect"] = word_defect;
  return m;
}

inline json run_kappa0_one(const ExperimentConfig& cfg, int i) {
  Rng rng(cfg.seed, instance_stream(cfg.suite, i));
  SpacePtr sp = cfg.space.build();
  ProjectionInstance inst = random_projection(rng, sp, cfg.fiber, cfg.r, cfg.eps, cfg.mode);

  Kappa0Result kr = kappa0(inst.p, true, true);
  if (!(kr.idempotency < 1e-12))
    throw BoundError("kappa0: idempotency " + std::to_string(kr.idempotency) +
                     " is not below 1e-12");
  if (!(kr.distance < 2.0 * cfg.eps))
    throw BoundError("kappa0: ||p - kappa0(p)|| = " + std::to_string(kr.distance) +
                     " is not below 2 eps = " + std::to_string(2.0 * cfg.eps));
  if (kr.rank != inst.rank)
    throw BoundError("kappa0: rank " + std::to_string(kr.rank) + " differs from the engineered " +
                     std::to_string(inst.rank));
  json m;
  m["eps"] = cfg.eps;
  m["engineered_residual"] = inst.residual;
  m["measured_residual"] = inst.p.residual;
  m["rank"] = kr.rank;
  m["iterations"] = kr.iterations;
  m["idempotency"] = kr.idempotency;
  m["idempotency_op"] = kr.idempotency_op;
  m["distance"] = kr.distance;
  m["bound"] = 2.0 * cfg.eps;
  return m;
}

inline json run_polar_one(const ExperimentConfig& cfg, int i) {
  Rng rng(cfg.seed, instance_stream(cfg.suite, i));
  SpacePtr sp = cfg.space.build();
  InvertibleInstance inst = random_invertible(rng, sp, cfg.fiber, cfg.r);

  PolarOptions popts;
  popts.mode = cfg.mode;
  PolarResult res = polar_decompose(inst.x, cfg.eps, cfg.r, inst.norm_cap, inst.y, popts);
  json m;
  m["eps"] = cfg.eps;
  m["degree"] = res.degree;
  m["x_minus_uh"] = res.x_minus_uh;
  m["engine_bound"] = res.x_minus_uh_bound;
  m["oracle"] = res.q_vs_invsqrt;
  m["abs_x_minus_h"] = res.abs_x_minus_h;
  m["u_residual"] = res.u.residual;
  m["u_eps"] = res.u.eps;
  m["prop_u"] = res.u.r.str();
  m["inv_defect"] = res.inv_defect;
  return m;
}

inline json run_factor_one(const ExperimentConfig& cfg, int i) {
  Rng rng(cfg.seed, instance_stream(cfg.suite, i));
  SpacePtr sp = cfg.space.build();
  ControlledMVPair pair = pair_from(cfg, sp);
  UnitaryInstance inst = random_unitary_with_path(rng, sp, cfg.fiber, cfg.r, cfg.eps,
                                                  cfg.path_samples, cfg.phase_amp, cfg.rot_count,
                                                  cfg.rot_amp, cfg.mode);
  FactorOptions fopts;
  fopts.mode = cfg.mode;
  P1P2Result res = factor_p1p2(inst.u, inst.path, pair, fopts);
  json m;
  m["eps"] = res.eps;
  m["k"] = res.k;
  m["step_bound"] = res.step_bound;
  m["vw_minus_embed"] = res.vw_minus_embed;
  m["vw_minus_s"] = res.vw_minus_s;
  m["embed_minus_p1p2"] = res.embed_minus_p1p2;
  m["bound_4eps"] = 4.0 * res.eps;
  m["bound_9eps"] = 9.0 * res.eps;
  m["bound_13eps"] = 13.0 * res.eps;
  m["word_cancel"] = res.p1p2_vs_s;
  m["prop_p1"] = res.prop_p1.str();
  m["prop_p2"] = res.prop_p2.str();
  m["norm_p1"] = res.norm_p1;
  m["norm_p2"] = res.norm_p2;
  m["member_p1"] = res.member_p1.pass;
  m["member_p1_inv"] = res.member_p1_inv.pass;
  m["member_p2"] = res.member_p2.pass;
  m["member_p2_inv"] = res.member_p2_inv.pass;
  return m;
}

inline json run_cia_one(const ExperimentConfig& cfg, int i) {
  Rng rng(cfg.seed, instance_stream(cfg.suite, i));
  SpacePtr sp = cfg.space.build();
  ControlledMVPair pair = pair_from(cfg, sp);
  CIAInstance inst = cia_instance(rng, pair, cfg.fiber, cfg.delta);
  CIAReport rep = cia_approximate(pair, inst.x1, inst.x2, cfg.mode);

  // coercity split of a random element of propagation <= r
  SupportPredicate band = SupportPredicate::row_set(std::vector<char>(sp->n, 1), cfg.r, "band");
  BandedOperator e = random_supported(rng, sp, cfg.fiber, band, 2 * sp->n, 1.0);
  auto [e1, e2] = decompose_element(pair, e);
  double ne = measured_norm(e, cfg.mode);
  double n1 = measured_norm(e1, NormMode::Operator);
  double n2 = measured_norm(e2, NormMode::Operator);
  double cap = pair.coercity * measured_norm(e, NormMode::Operator) * (1.0 + 1e-12) + 1e-12;
  if (!(n1 <= cap && n2 <= cap))
    throw BoundError("cia: row split " + std::to_string(std::max(n1, n2)) +
                     " exceeds the coercity cap " + std::to_string(cap));
  double back = measured_norm(e1 + e2 - e, NormMode::Operator);
  if (!(back <= 1e-12))
    throw NumericError("cia: row split does not sum back (defect " + std::to_string(back) + ")");

  json m;
  m["dist"] = rep.dist;
  m["z_minus_x2"] = rep.z_minus_x2;
  m["z_minus_x1"] = rep.z_minus_x1;
  m["psi_fixes_x2"] = rep.psi_fixes_x2;
  m["member_inter"] = rep.member_inter.pass;
  m["split_norm"] = std::max(n1, n2);
  m["split_cap"] = cap;
  m["element_norm"] = ne;
  return m;
}

inline json boundary_class_json(const BoundaryClass& cls) {
  json m;
  m["rank"] = cls.rank;
  m["expected_rank"] = cls.expected_rank;
  m["rank_class"] = cls.rank_class;
  m["eps_chain"] = cls.eps_chain;
  m["a_minus_b"] = cls.a_minus_b;
  m["q_minus_w1pw1"] = cls.q_minus_w1pw1;
  m["q_minus_w2pw2"] = cls.q_minus_w2pw2;
  m["psi_b_defect"] = cls.psi_b_defect;
  m["q_residual"] = cls.q_residual;
  m["kappa_distance"] = cls.kappa_distance;
  m["prop_q"] = cls.prop_q.str();
  m["order_exceeded"] = cls.order_exceeded;
  m["achieved_bound"] = cls.fac.achieved_bound;
  m["w1w2_alpha"] = cls.fac.alpha;
  return m;
}

inline json run_boundary_one(const ExperimentConfig& cfg, int i) {
  Rng rng(cfg.seed, instance_stream(cfg.suite, i));
  SpacePtr sp = cfg.space.build();
  ControlledMVPair pair = pair_from(cfg, sp);
  BoundaryInstance inst = boundary_instance(rng, pair, cfg.fiber, cfg.eps, cfg.path_samples,
                                            cfg.phase_amp, cfg.mode);
  BoundaryOptions bopts;
  bopts.fac.mode = cfg.mode;
  bopts.fac.with_w_paths = false;
  WellDefinedness wd = well_definedness_check(inst.u, inst.path, pair, bopts);
  json m;
  m["side1"] = boundary_class_json(wd.side1);
  m["side2"] = boundary_class_json(wd.side2);
  m["rank_match"] = wd.rank_match;
  m["v_defect"] = wd.v_defect;
  m["conj_gap"] = wd.conj_gap;
  m["path_eps"] = wd.path_eps;
  m["path_samples"] = wd.connecting.samples.size();
  return m;
}

inline json run_factorizable_one(const ExperimentConfig& cfg, int i) {
  Rng rng(cfg.seed, instance_stream(cfg.suite, i));
  SpacePtr sp = cfg.space.build();
  ControlledMVPair pair = pair_from(cfg, sp);
  BoundaryInstance inst = boundary_instance(rng, pair, cfg.fiber, cfg.eps, cfg.path_samples,
                                            cfg.phase_amp, cfg.mode);
  BoundaryOptions bopts;
  bopts.fac.mode = cfg.mode;
  bopts.fac.with_w_paths = false;
  BoundaryClass cls = boundary_odd(inst.u, inst.path, pair, bopts);
  if (cls.rank_class != 0)
    throw BoundError("factorizable: boundary rank class " + std::to_string(cls.rank_class) +
                     " is not zero");
  json m = boundary_class_json(cls);
  m["eps"] = cfg.eps;
  return m;
}

inline json run_cover_one(const ExperimentConfig& cfg, int i) {
  SpacePtr sp = cfg.space.build();
  Rat R = Rat(1 + (i % 10));
  auto [f1, f2] = annular_two_coloring(*sp, cfg.basepoint, R);
  CoverCertificate cert = verify_cover({f1, f2}, *sp, R);
  if (!cert.pass) throw BoundError("cover: " + cert.violation);
  json m;
  m["R"] = R.str();
  m["pieces1"] = static_cast<int>(f1.pieces.size());
  m["pieces2"] = static_cast<int>(f2.pieces.size());
  m["gap1"] = f1.r_disjoint.str();
  m["gap2"] = f2.r_disjoint.str();
  m["diam1"] = f1.max_diameter.str();
  m["diam2"] = f2.max_diameter.str();
  return m;
}

inline json run_one(const ExperimentConfig& cfg, int i) {
  if (cfg.suite == "witness") return run_witness_one(cfg, i);
  if (cfg.suite == "kappa0") return run_kappa0_one(cfg, i);
  if (cfg.suite == "polar") return run_polar_one(cfg, i);
  if (cfg.suite == "factor") return run_factor_one(cfg, i);
  if (cfg.suite == "cia") return run_cia_one(cfg, i);
  if (cfg.suite == "boundary") return run_boundary_one(cfg, i);
  if (cfg.suite == "factorizable") return run_factorizable_one(cfg, i);
  if (cfg.suite == "cover") return run_cover_one(cfg, i);
  throw ConfigError("unknown suite: " + cfg.suite);
}

// --- suite driver ------------------------------------------------------------

struct SuiteOutcome {
  json report;
  bool pass = true;
  int completed = 0;
  std::string error;       // first violation, when pass == false
  json failed_instance;    // serialized generator parameters of the failure
};

inline SuiteOutcome run_suite(const ExperimentConfig& cfg) {
  SuiteOutcome out;
  json instances = json::array();
  for (int i = 0; i < cfg.samples; ++i) {
    try {
      json m = run_one(cfg, i);
      m["index"] = i;
      m["stream"] = instance_stream(cfg.suite, i);
      instances.push_back(std::move(m));
      ++out.completed;
    } catch (const ConfigError&) {
      throw;  // malformed configuration, not a violated bound
    } catch (const QktError& e) {
      out.pass = false;
      out.error = e.what();
      out.failed_instance = instance_json(cfg, i);
      out.failed_instance["error"] = e.what();
      break;  // a violated bound aborts the suite
    }
  }
  json rep;
  rep["format"] = "qkt-report/1";
  rep["suite"] = cfg.suite;
  rep["config"] = config_json(cfg);
  rep["instances"] = std::move(instances);
  rep["summary"] = {{"requested", cfg.samples},
                    {"completed", out.completed},
                    {"pass", out.pass}};
  if (!out.pass) rep["summary"]["error"] = out.error;
  out.report = std::move(rep);
  return out;
}

// Re-run a single serialized instance; the result must match the suite run.
inline json replay_instance(const json& inst) {
  if (!inst.contains("format") || inst.at("format").get<std::string>() != "qkt-instance/1")
    throw ConfigError("replay: expected format qkt-instance/1");
  ExperimentConfig cfg = config_of(inst.at("config"));
  int index = inst.at("index").get<int>();
  json m = run_one(cfg, index);
  m["index"] = index;
  m["stream"] = instance_stream(cfg.suite, index);
  return m;
}

// --- per-instance table ------------------------------------------------------

inline std::string report_csv(const json& report) {
  const json& inst = report.at("instances");
  if (inst.empty()) return "";
  std::vector<std::string> cols;
  for (auto it = inst.front().begin(); it != inst.front().end(); ++it)
    if (!it.value().is_structured()) cols.push_back(it.key());
  std::string csv;
  for (size_t c = 0; c < cols.size(); ++c) csv += (c ? "," : "") + cols[c];
  csv += "\n";
  for (const auto& row : inst) {
    for (size_t c = 0; c < cols.size(); ++c) {
      if (c) csv += ",";
      const json& v = row.at(cols[c]);
      csv += v.is_string() ? v.get<std::string>() : v.dump();
    }
    csv += "\n";
  }
  return csv;
}

}  // namespace qkt
