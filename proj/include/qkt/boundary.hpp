#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qkt/factorization.hpp"

namespace qkt {

// Rotation homotopy diag(u, v) ~ diag(uv, 1) by W_t = diag(u,1) R_t diag(1,v) R_t*.
// With v = u* the endpoint is diag(uu*, 1), within eps of the identity.
inline HomotopyPath rotation_path(const QuasiElement& u,
                                  const std::optional<BandedOperator>& v_opt, int nsteps,
                                  double eps, NormMode mode = NormMode::Operator) {
  BandedOperator v = v_opt ? *v_opt : adjoint(u.op);
  BandedOperator one = BandedOperator::identity(u.op.space, u.op.fiber);
  BandedOperator du = direct_sum({&u.op, &one});
  std::vector<BandedOperator> ops;
  for (int i = 0; i <= nsteps; ++i) {
    double ang = (3.14159265358979323846 / 2.0) * i / nsteps;
    Dense r2(2, 2);
    r2.at(0, 0) = std::cos(ang);
    r2.at(0, 1) = -std::sin(ang);
    r2.at(1, 0) = std::sin(ang);
    r2.at(1, 1) = std::cos(ang);
    BandedOperator rt = kron_const(r2, one);
    BandedOperator rts = kron_const(adjoint(r2), one);
    BandedOperator dv = direct_sum({&one, &v});
    ops.push_back(du * rt * dv * rts);
  }
  Rat rmax(0);
  for (const auto& o : ops) rmax = rat_max(rmax, o.propagation());
  HomotopyPath path;
  for (const auto& o : ops)
    path.samples.push_back(certify(o, QuasiElement::Kind::Unitary, eps, rmax, mode));
  path.measure_steps(mode);
  double mx = 0;
  for (double s : path.steps) mx = std::max(mx, s);
  path.step_bound = std::nextafter(std::max(mx, 1e-300), 2.0);
  path.check();
  return path;
}

struct BoundaryOptions {
  FactorOptions fac;
  bool strict_order = false;  // reject classes whose propagation exceeds the pair order
  double member_tol = 1e-10;
};

struct BoundaryClass {
  PairFactorization fac;
  QuasiElement q;             // the boundary projection, certified
  BandedOperator a, b, y;     // the two conjugates of the reference and the mask
  int n_fiber = 0;            // fiber rank of the reference projector diag(I_n, 0)
  int expected_rank = 0;      // points * n_fiber
  int rank = 0;               // rank of kappa0(q)
  int rank_class = 0;         // rank - expected_rank
  double eps_chain = 0;       // max(achieved bound, residuals)
  double a_minus_b = 0;       // < 8 eps_chain
  double q_minus_w2pw2 = 0;   // < 8 coercity eps_chain
  double q_minus_w1pw1 = 0;   // recorded
  double psi_b_defect = 0;    // ||Psi(b) - b||
  double q_residual = 0;
  double kappa_distance = 0;  // ||q - kappa0(q)||
  bool scalar_exact = true;
  bool order_exceeded = false;
  Rat prop_q;
  MembershipReport member_y;
};

// Odd-degree controlled boundary: factor diag(u,v) across the pair, conjugate
// the slot-0 reference projector from both sides, and compress the defect into
// the intersection; q = Psi(w1* p w1 - p) + p is the boundary projection.
inline BoundaryClass boundary_odd(const QuasiElement& u, const HomotopyPath& path,
                                  const ControlledMVPair& pair,
                                  const BoundaryOptions& opts = {}) {
  if (u.kind != QuasiElement::Kind::Unitary)
    throw ConfigError("boundary: expects a unitary class");
  if (path.samples.empty()) throw ConfigError("boundary: empty homotopy");
  const QuasiElement& uhat = path.samples.front();
  const int f = u.op.fiber;
  if (uhat.op.fiber != 2 * f)
    throw ConfigError("boundary: homotopy must run at the doubled fiber diag(u, v)");
  if (one_inf_bound(subfiber_block(uhat.op, 0, 0, f) - u.op) > 1e-12 ||
      one_inf_bound(subfiber_block(uhat.op, 0, 1, f)) > 1e-12 ||
      one_inf_bound(subfiber_block(uhat.op, 1, 0, f)) > 1e-12)
    throw ConfigError("boundary: homotopy does not start at diag(u, v)");

  BoundaryClass cls;
  cls.fac = factor_across_pair(uhat, path, pair, opts.fac);
  const SpacePtr& sp = u.op.space;
  const int total = cls.fac.w1.op.fiber;
  cls.n_fiber = f;
  cls.expected_rank = sp->n * f;

  Dense dd(total, total);
  for (int i = 0; i < f; ++i) dd.at(i, i) = 1.0;
  BandedOperator pref = BandedOperator::from_scalar(sp, dd);

  cls.a = adjoint(cls.fac.w1.op) * pref * cls.fac.w1.op - pref;
  cls.b = cls.fac.w2.op * pref * adjoint(cls.fac.w2.op) - pref;
  cls.eps_chain = std::max({cls.fac.achieved_bound, cls.fac.w1.residual, cls.fac.w2.residual,
                            uhat.residual});

  NormMode mode = opts.fac.mode;
  cls.a_minus_b = measured_dist(cls.a, cls.b, mode);
  if (!(cls.a_minus_b < 8.0 * cls.eps_chain + 1e-12))
    throw BoundError("boundary: ||w1* p w1 - w2 p w2*|| = " + std::to_string(cls.a_minus_b) +
                     " is not below 8 eps = " + std::to_string(8.0 * cls.eps_chain));

  cls.y = cia_project(pair, cls.a);
  cls.member_y = membership(cls.y, pair.inter, opts.member_tol);
  if (!cls.member_y.pass) throw BoundError("boundary: " + cls.member_y.describe());
  cls.psi_b_defect = measured_dist(cia_project(pair, cls.b), cls.b, mode);

  BandedOperator q_op = cls.y + pref;
  cls.scalar_exact = q_op.has_scalar() && q_op.scalar.n == total;
  if (cls.scalar_exact)
    for (int i = 0; i < total && cls.scalar_exact; ++i)
      for (int j = 0; j < total; ++j)
        if (q_op.scalar.at(i, j) != dd.at(i, j)) {
          cls.scalar_exact = false;
          break;
        }
  if (!cls.scalar_exact)
    throw NumericError("boundary: scalar part of q is not exactly diag(I_n, 0)");

  cls.q_minus_w1pw1 = measured_dist(q_op, adjoint(cls.fac.w1.op) * pref * cls.fac.w1.op, mode);
  cls.q_minus_w2pw2 = measured_dist(q_op, cls.fac.w2.op * pref * adjoint(cls.fac.w2.op), mode);
  double cap2 = 8.0 * pair.coercity * cls.eps_chain + 1e-12;
  if (!(cls.q_minus_w2pw2 < cap2))
    throw BoundError("boundary: ||q - w2 p w2*|| = " + std::to_string(cls.q_minus_w2pw2) +
                     " is not below 8 c eps = " + std::to_string(cap2));

  cls.prop_q = q_op.propagation();
  cls.order_exceeded = cls.prop_q > pair.r;
  if (cls.order_exceeded && opts.strict_order)
    throw BoundError("boundary: class propagation " + cls.prop_q.str() +
                     " exceeds the pair order r = " + pair.r.str() + " (strict mode)");

  cls.q_residual = measured_norm(q_op * q_op - q_op, mode);
  double eps_q = cls.q_residual * 1.01 + 1e-15;
  if (!(eps_q < 0.25))
    throw BoundError("boundary: ||q^2 - q|| = " + std::to_string(cls.q_residual) +
                     " leaves no certification headroom");
  cls.q = certify(q_op, QuasiElement::Kind::Projection, eps_q, cls.prop_q, mode);

  Kappa0Result kr = kappa0(cls.q, true, false);
  cls.rank = kr.rank;
  cls.kappa_distance = kr.distance;
  cls.rank_class = kr.rank - cls.expected_rank;
  return cls;
}

// Certify a list of almost-projections as one homotopy at a uniform (eps, r).
inline HomotopyPath uniform_projection_path(const std::vector<BandedOperator>& ops, double eps,
                                            NormMode mode) {
  Rat rmax(0);
  for (const auto& o : ops) rmax = rat_max(rmax, o.propagation());
  HomotopyPath p;
  for (const auto& o : ops)
    p.samples.push_back(certify(o, QuasiElement::Kind::Projection, eps, rmax, mode));
  p.measure_steps(mode);
  double mx = 0;
  for (double s : p.steps) mx = std::max(mx, s);
  p.step_bound = std::nextafter(std::max(mx, 1e-300), 2.0);
  p.check();
  return p;
}

struct WellDefinedness {
  BoundaryClass side1, side2;  // overlap rows assigned to family 1 / family 2
  double v_defect = 0;         // ||v - w1_A* w1_B||
  double conj_gap = 0;         // ||v q_B v* - q_A||
  double path_eps = 0;
  HomotopyPath connecting;     // diag(q_B, 0) ~ diag(q_A, 0)
  bool rank_match = false;
};

// The boundary class must not depend on how the overlap rows were assigned:
// both assignments give the same kappa0-rank and an explicit homotopy links
// the two projections through v = 1 + Psi(w1_A* w1_B - 1).
inline WellDefinedness well_definedness_check(const QuasiElement& u, const HomotopyPath& path,
                                              const ControlledMVPair& pair,
                                              const BoundaryOptions& opts = {}, int nsteps = 4) {
  WellDefinedness wd;
  ControlledMVPair alt = build_pair(pair.space, pair.fam1, pair.fam2, pair.r, pair.s,
                                    !pair.overlap_to_2);
  const ControlledMVPair& p1 = pair.overlap_to_2 ? alt : pair;
  const ControlledMVPair& p2 = pair.overlap_to_2 ? pair : alt;
  wd.side1 = boundary_odd(u, path, p1, opts);
  wd.side2 = boundary_odd(u, path, p2, opts);
  wd.rank_match = wd.side1.rank_class == wd.side2.rank_class;
  if (!wd.rank_match)
    throw BoundError("well-definedness: rank classes disagree (" +
                     std::to_string(wd.side1.rank_class) + " vs " +
                     std::to_string(wd.side2.rank_class) + ")");

  NormMode mode = opts.fac.mode;
  const int total = wd.side1.q.op.fiber;
  BandedOperator one = BandedOperator::identity(pair.space, total);
  BandedOperator w1a = wd.side1.fac.w1.op, w1b = wd.side2.fac.w1.op;
  BandedOperator v_raw = one + cia_project(pair, adjoint(w1a) * w1b - one);
  wd.v_defect = measured_dist(v_raw, adjoint(w1a) * w1b, mode);

  Dense vd = v_raw.assemble();
  BandedOperator v_inv = sparsify(gauss_inverse(vd), pair.space, total);
  PolarResult pol = polar_prescaled(v_raw, 0.2, v_inv, mode);
  BandedOperator vu = pol.u.op;

  BandedOperator qa = wd.side1.q.op, qb = wd.side2.q.op;
  BandedOperator conj = vu * qb * adjoint(vu);
  wd.conj_gap = measured_dist(conj, qa, mode);

  // assemble the chain diag(qb,0) -> rotation -> diag(v qb v*, 0) -> linear -> diag(qa,0)
  std::vector<BandedOperator> ops;
  {
    BandedOperator zero = BandedOperator::zero(pair.space, total);
    BandedOperator big_qb = direct_sum({&qb, &zero});
    BandedOperator big_qa = direct_sum({&qa, &zero});
    BandedOperator one_t = BandedOperator::identity(pair.space, total);
    BandedOperator vus = adjoint(vu);
    auto w_at = [&](double ang) {
      // W_t* diag(qb,0) W_t runs from diag(qb,0) to diag(vu qb vu*, 0)
      Dense r2(2, 2);
      r2.at(0, 0) = std::cos(ang);
      r2.at(0, 1) = -std::sin(ang);
      r2.at(1, 0) = std::sin(ang);
      r2.at(1, 1) = std::cos(ang);
      BandedOperator rt = kron_const(r2, one_t);
      BandedOperator rti = kron_const(adjoint(r2), one_t);
      BandedOperator dv = direct_sum({&vus, &one_t});
      return dv * rt * adjoint(dv) * rti;
    };
    ops.push_back(big_qb);
    BandedOperator w0 = w_at(0.0);
    ops.push_back(cd(0.5) * (big_qb + adjoint(w0) * big_qb * w0));
    for (int i = 0; i <= nsteps; ++i) {
      double ang = (3.14159265358979323846 / 2.0) * i / nsteps;
      BandedOperator wt = w_at(ang);
      ops.push_back(adjoint(wt) * big_qb * wt);
    }
    BandedOperator big_conj = ops.back();
    for (int i = 1; i <= nsteps; ++i) {
      double t = static_cast<double>(i) / nsteps;
      ops.push_back(cd(1.0 - t) * big_conj + cd(t) * big_qa);
    }
  }
  double worst = 0;
  for (const auto& o : ops) {
    worst = std::max(worst, one_inf_bound(o * o - o));
    worst = std::max(worst, one_inf_bound(o - adjoint(o)));
  }
  wd.path_eps = std::min(worst * 1.05 + 1e-15, 0.2499999);
  if (!(worst < 0.25))
    throw BoundError("well-definedness: connecting samples have residual " +
                     std::to_string(worst) + ", no certification headroom");
  wd.connecting = uniform_projection_path(ops, wd.path_eps, mode);
  return wd;
}

// Stability under padding: diag(u, 1_m) has the same boundary rank class.
inline bool padding_invariance_check(const QuasiElement& u, const HomotopyPath& path,
                                     const ControlledMVPair& pair, int extra,
                                     const BoundaryOptions& opts = {}) {
  BoundaryClass base = boundary_odd(u, path, pair, opts);
  const int f = u.op.fiber;
  BandedOperator pad = BandedOperator::identity(u.op.space, extra);
  BandedOperator up = direct_sum({&u.op, &pad});
  QuasiElement uq = certify(up, QuasiElement::Kind::Unitary, u.eps, u.r, opts.fac.mode);

  HomotopyPath pp;
  for (const auto& s : path.samples) {
    BandedOperator top = subfiber_block(s.op, 0, 0, f);
    BandedOperator bot = subfiber_block(s.op, 1, 1, f);
    if (one_inf_bound(s.op - direct_sum({&top, &bot})) > 1e-12)
      throw ConfigError("padding check: homotopy samples must stay diagonal in the two slots");
    BandedOperator sp2 = direct_sum({&top, &pad, &bot, &pad});
    pp.samples.push_back(certify(sp2, QuasiElement::Kind::Unitary, s.eps, s.r, opts.fac.mode));
  }
  pp.measure_steps(opts.fac.mode);
  pp.step_bound = path.step_bound;
  pp.check();

  BoundaryClass padded = boundary_odd(uq, pp, pair, opts);
  if (padded.rank_class != base.rank_class)
    throw BoundError("padding invariance: rank class changed from " +
                     std::to_string(base.rank_class) + " to " +
                     std::to_string(padded.rank_class));
  return true;
}

struct MiddleExactness {
  enum class Status { Connected, Inconclusive };
  Status status = Status::Inconclusive;
  int rank1 = 0, rank2 = 0;
  double kdist = 0;        // ||kappa0(q1) - kappa0(q2)||, conjugator formula needs < 1
  double intertwine = 0;   // ||z kappa0(q1) - kappa0(q2) z||
  double conj_gap = 0;
  double path_eps = 0;
  std::string conjugator;  // which candidate worked
  HomotopyPath connecting;
};

// Constructive middle-exactness probe: try to connect two projections with the
// same kappa0-rank through an explicit conjugator.  Candidates: the identity,
// a supplied conjugator, and z = k2 k1 + (1-k2)(1-k1), which intertwines
// exactly and is invertible iff ||k1 - k2|| < 1.  A failure to connect within
// the budget is reported as Inconclusive, not as a disproof.
inline MiddleExactness check_middle_exactness(const QuasiElement& q1, const QuasiElement& q2,
                                              const std::optional<BandedOperator>& supplied =
                                                  std::nullopt,
                                              NormMode mode = NormMode::Operator,
                                              int nsteps = 4) {
  MiddleExactness me;
  Kappa0Result k1 = kappa0(q1, false, false), k2 = kappa0(q2, false, false);
  me.rank1 = k1.rank;
  me.rank2 = k2.rank;
  if (k1.rank != k2.rank)
    throw ConfigError("middle exactness: kappa0 ranks differ (" + std::to_string(k1.rank) +
                      " vs " + std::to_string(k2.rank) + ")");
  me.kdist = measured_dist(k1.p, k2.p, mode);

  const SpacePtr& sp = q1.op.space;
  const int total = q1.op.fiber;
  BandedOperator one = BandedOperator::identity(sp, total);
  std::vector<std::pair<std::string, BandedOperator>> cand;
  if (supplied) cand.emplace_back("supplied", *supplied);
  if (me.kdist < 1.0 - 1e-9)
    cand.emplace_back("z-formula", k2.p * k1.p + (one - k2.p) * (one - k1.p));
  cand.emplace_back("identity", one);

  for (const auto& [name, z] : cand) {
    try {
      double tw = measured_norm(z * k1.p - k2.p * z, mode);
      if (tw > 1e-10) continue;
      Dense zd = z.assemble();
      BandedOperator z_inv = sparsify(gauss_inverse(zd), sp, total);
      PolarResult pol = polar_prescaled(z, 0.2, z_inv, mode);
      BandedOperator zu = pol.u.op;
      BandedOperator zus = adjoint(zu);
      BandedOperator conj = zu * k1.p * zus;
      double gap = measured_dist(conj, k2.p, mode);

      std::vector<BandedOperator> ops;
      BandedOperator zero = BandedOperator::zero(sp, total);
      BandedOperator big1 = direct_sum({&q1.op, &zero});
      BandedOperator bigk1 = direct_sum({&k1.p, &zero});
      BandedOperator bigk2 = direct_sum({&k2.p, &zero});
      BandedOperator big2 = direct_sum({&q2.op, &zero});
      BandedOperator one_t = one;
      for (int i = 0; i <= nsteps; ++i) {
        double t = static_cast<double>(i) / nsteps;
        ops.push_back(cd(1.0 - t) * big1 + cd(t) * bigk1);
      }
      auto w_at = [&](double ang) {
        // W_t* diag(k1,0) W_t runs from diag(k1,0) to diag(zu k1 zu*, 0) ~ diag(k2,0)
        Dense r2(2, 2);
        r2.at(0, 0) = std::cos(ang);
        r2.at(0, 1) = -std::sin(ang);
        r2.at(1, 0) = std::sin(ang);
        r2.at(1, 1) = std::cos(ang);
        BandedOperator rt = kron_const(r2, one_t);
        BandedOperator rti = kron_const(adjoint(r2), one_t);
        BandedOperator dv = direct_sum({&zus, &one_t});
        return dv * rt * adjoint(dv) * rti;
      };
      {
        BandedOperator w0 = w_at(0.0);
        ops.push_back(cd(0.5) * (bigk1 + adjoint(w0) * bigk1 * w0));
      }
      for (int i = 0; i <= nsteps; ++i) {
        double ang = (3.14159265358979323846 / 2.0) * i / nsteps;
        BandedOperator wt = w_at(ang);
        ops.push_back(adjoint(wt) * bigk1 * wt);
      }
      BandedOperator reached = ops.back();
      for (int i = 1; i <= nsteps; ++i) {
        double t = static_cast<double>(i) / nsteps;
        ops.push_back(cd(1.0 - t) * reached + cd(t) * bigk2);
      }
      for (int i = 1; i <= nsteps; ++i) {
        double t = static_cast<double>(i) / nsteps;
        ops.push_back(cd(1.0 - t) * bigk2 + cd(t) * big2);
      }
      double worst = 0;
      for (const auto& o : ops) {
        worst = std::max(worst, one_inf_bound(o * o - o));
        worst = std::max(worst, one_inf_bound(o - adjoint(o)));
      }
      if (!(worst < 0.25)) continue;
      double eps_c = std::min(worst * 1.05 + 1e-15, 0.2499999);
      me.connecting = uniform_projection_path(ops, eps_c, mode);
      me.status = MiddleExactness::Status::Connected;
      me.conjugator = name;
      me.intertwine = tw;
      me.conj_gap = gap;
      me.path_eps = eps_c;
      return me;
    } catch (const QktError&) {
      continue;  // try the next candidate; inconclusive is not a failure
    }
  }
  me.status = MiddleExactness::Status::Inconclusive;
  return me;
}

}  // namespace qkt
