#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qkt/elementary.hpp"
#include "qkt/mv_pair.hpp"
#include "qkt/polar.hpp"

namespace qkt {

// T(a,b) := X(a) Z(b,-a*) Y(-a*) X(a).  Two exact facts drive the whole
// construction: T(0,b) = 1, and for a unitary slot T(a,0) acts as the witness
// rotation, with T(-1,0) equal to the constant J.
inline Word word_T(const BandedOperator& a, const BandedOperator& b, double ca, double cb,
                   const std::string& tag) {
  BandedOperator nas = cd(-1) * adjoint(a);
  Word w;
  w.append(factor_X(a, ca, tag + ".X1"));
  w.append(factor_Z(b, nas, cb, ca, tag + ".Z"));
  w.append(factor_Y(nas, ca, tag + ".Y"));
  w.append(factor_X(a, ca, tag + ".X2"));
  return w;
}

// diag(1_f, m, 1_f) at the fiber level
inline BandedOperator tilde_embed(const BandedOperator& m, int f) {
  BandedOperator one = BandedOperator::identity(m.space, f);
  return direct_sum({&one, &m, &one});
}

inline Word tilde_word(const Word& w, int f) {
  Word out;
  for (WordFactor g : w.fs) {
    g.mat = tilde_embed(g.mat, f);
    g.inv = tilde_embed(g.inv, f);
    g.label = "~" + g.label;
    out.fs.push_back(std::move(g));
  }
  return out;
}

struct FactorOptions {
  NormMode mode = NormMode::Operator;
  double member_tol = 1e-10;
  bool with_trace = true;
  // across-pair extras
  double eps_polar = 0.02;   // working eps for the polar correction
  double w_ceiling = 0.0;    // ceiling for ||diag(u,1) - w1 w2||; 0 -> 26 eps
  int w_path_samples = 3;    // interior transport samples per w-homotopy
  bool with_w_paths = true;
};

struct FactorTraceEntry {
  std::string kind, label, side, prop;
  double norm = 0;  // Schur bound, cheap and certified
};

struct P1P2Result {
  Word w1_word, w2_word;
  BandedOperator p1, p2, p1_inv, p2_inv;
  int k = 0;        // path steps after the exact-identity endpoint is in place
  int padding = 0;  // 2k + 1 identity slots next to u
  double eps = 0, step_bound = 0;
  double vw_minus_embed = 0;      // < 4 eps
  double vw_minus_s = 0;          // < 9 eps
  double embed_minus_p1p2 = 0;    // < 13 eps
  double p1p2_vs_s = 0;           // word cancellation, floating dust
  double norm_p1 = 0, norm_p2 = 0, norm_p1_inv = 0, norm_p2_inv = 0;
  double bound_2c1_p1 = 0, bound_2c1_p2 = 0;  // (2c+1)^primitives
  double word_bound1 = 0, word_bound2 = 0;    // product of per-factor bounds
  int primitives1 = 0, primitives2 = 0;
  double arg_bound = 0;  // the c in (2c+1)^p
  Rat prop_p1, prop_p2;
  MembershipReport member_p1, member_p1_inv, member_p2, member_p2_inv;
  std::vector<FactorTraceEntry> trace;
};

// Shared data for the two-sided words; all arguments scale with the
// transport parameter t, so t = 1 is the factorization itself and t = 0
// collapses every T to a constant rotation with product exactly 1.
struct P1P2Context {
  SpacePtr sp;
  int f = 0, k = 0;
  double c = 1.0;  // argument norm bound
  BandedOperator x1, x2, y1, y2;                      // sample diagonals / adjoints
  BandedOperator chi1_hi, chi2_hi, chi1_lo, chi2_lo;  // indicator diagonals
  BandedOperator uj, ujs, tj, tjs;                    // U, U*, ~U_k, ~U_k*

  Word q1_word(double t) const {
    Word q = word_T(cd(-t) * chi1_hi, cd(-t) * chi2_hi, 1.0, 1.0, "Q1.hi");
    if (k >= 1) q.append(tilde_word(word_T(cd(-t) * chi1_lo, cd(-t) * chi2_lo, 1.0, 1.0, "Q1.lo"), f));
    return q;
  }
  Word q2_word(double t) const {
    Word q = word_T(cd(-t) * chi2_hi, cd(-t) * chi1_hi, 1.0, 1.0, "Q2.hi");
    if (k >= 1) q.append(tilde_word(word_T(cd(-t) * chi2_lo, cd(-t) * chi1_lo, 1.0, 1.0, "Q2.lo"), f));
    return q;
  }
  Word b_word(double t) const {
    return tilde_word(word_T(cd(t) * y1, cd(t) * y2, c, c, "T(y)"), f);
  }
  Word c_inv_word(double t) const {
    return tilde_word(word_T(cd(-t) * y2, cd(-t) * y1, c, c, "T(-y)").inverse(), f);
  }
  Word that_inv_word(double t) const {
    return word_T(cd(-t) * x2, cd(-t) * x1, c, c, "T(-x)").inverse();
  }

  // P1 = T(x1,x2) U B U* Q1
  Word p1_word(double t) const {
    Word w = word_T(cd(t) * x1, cd(t) * x2, c, c, "T(x)");
    w.append(factor_const(uj, "U"));
    if (k >= 1) w.append(b_word(t));
    w.append(factor_const(ujs, "U*"));
    w.append(q1_word(t));
    return w;
  }
  // P2 = Q2 ~U* B^{-1} U* T^{-1}(-x2,-x1) U B ~T^{-1}(-y2,-y1) ~U
  Word p2_word(double t) const {
    Word w = q2_word(t);
    if (k >= 1) {
      w.append(factor_const(tjs, "~U*"));
      w.append(b_word(t).inverse());
    }
    w.append(factor_const(ujs, "U*"));
    w.append(that_inv_word(t));
    w.append(factor_const(uj, "U"));
    if (k >= 1) {
      w.append(b_word(t));
      w.append(c_inv_word(t));
      w.append(factor_const(tj, "~U"));
    }
    return w;
  }
  // S = T(x1,x2) T^{-1}(-x2,-x1) U ~T(y1,y2) ~T^{-1}(-y2,-y1) ~U
  Word v_word(double t) const {
    Word w = word_T(cd(t) * x1, cd(t) * x2, c, c, "T(x)");
    w.append(that_inv_word(t));
    w.append(factor_const(uj, "U"));
    return w;
  }
  Word w_word(double t) const {
    Word w;
    if (k >= 1) {
      w.append(b_word(t));
      w.append(c_inv_word(t));
      w.append(factor_const(tj, "~U"));
    }
    return w;
  }
};

// Validate the homotopy, pin the exact-identity endpoint, and restrict every
// sample to the two sides of the pair.
inline P1P2Context make_p1p2_context(const QuasiElement& u, const HomotopyPath& path,
                                     const ControlledMVPair& pair, double* step_out) {
  path.check();
  if (measured_dist(path.samples.front().op, u.op, NormMode::FrobeniusBound) > 1e-12)
    throw ConfigError("factor: homotopy does not start at u");
  const SpacePtr& sp = u.op.space;
  const int f = u.op.fiber;
  BandedOperator one_f = BandedOperator::identity(sp, f);

  std::vector<BandedOperator> us;
  for (const auto& s : path.samples) {
    if (s.op.propagation() > pair.r)
      throw BoundError("factor: sample propagation " + s.op.propagation().str() +
                       " exceeds the pair order r = " + pair.r.str());
    us.push_back(s.op);
  }
  double step = path.step_bound;
  double tail = one_inf_bound(us.back() - one_f);
  if (tail <= 1e-12) {
    us.back() = one_f;  // snap the endpoint
  } else {
    us.push_back(one_f);
    step = std::max(step, tail);
  }
  if (!(step < u.eps))
    throw ConfigError("factor: homotopy step bound " + std::to_string(step) +
                      " is not below eps = " + std::to_string(u.eps));
  if (step_out) *step_out = step;

  P1P2Context ctx;
  ctx.sp = sp;
  ctx.f = f;
  ctx.k = static_cast<int>(us.size()) - 1;
  ctx.c = std::sqrt(1.0 + u.eps) * (1.0 + 1e-12);

  BandedOperator chi1 = row_restrict(one_f, pair.rows1);
  BandedOperator chi2 = row_restrict(one_f, pair.rows2);
  std::vector<BandedOperator> v, w, vs, ws;
  for (const auto& s : us) {
    v.push_back(row_restrict(s, pair.rows1));
    w.push_back(row_restrict(s, pair.rows2));
    vs.push_back(adjoint(v.back()));
    ws.push_back(adjoint(w.back()));
  }
  auto dsum = [](const std::vector<BandedOperator>& xs, int from, int to) {
    std::vector<const BandedOperator*> ps;
    for (int i = from; i < to; ++i) ps.push_back(&xs[i]);
    return direct_sum(ps);
  };
  const int k = ctx.k;
  ctx.x1 = dsum(v, 0, k + 1);
  ctx.x2 = dsum(w, 0, k + 1);
  std::vector<const BandedOperator*> c1(k + 1, &chi1), c2(k + 1, &chi2);
  ctx.chi1_hi = direct_sum(c1);
  ctx.chi2_hi = direct_sum(c2);
  if (k >= 1) {
    ctx.y1 = dsum(vs, 0, k);
    ctx.y2 = dsum(ws, 0, k);
    c1.pop_back();
    c2.pop_back();
    ctx.chi1_lo = direct_sum(c1);
    ctx.chi2_lo = direct_sum(c2);
    ctx.tj = tilde_embed(elem_J(sp, k * f), f);
    ctx.tjs = adjoint(ctx.tj);
  }
  ctx.uj = elem_J(sp, (k + 1) * f);
  ctx.ujs = adjoint(ctx.uj);
  return ctx;
}

// Factor diag(u, 1, ..., 1) = P1 P2 up to 13 eps, with P1 +- 1 and P2 +- 1
// supported on the thickened family squares and norms below (2c+1)^p.
inline P1P2Result factor_p1p2(const QuasiElement& u, const HomotopyPath& path,
                              const ControlledMVPair& pair, const FactorOptions& opts = {}) {
  P1P2Result res;
  res.eps = u.eps;
  P1P2Context ctx = make_p1p2_context(u, path, pair, &res.step_bound);
  const int k = ctx.k, f = ctx.f;
  res.k = k;
  res.padding = 2 * k + 1;
  res.arg_bound = ctx.c;
  const double eps = u.eps;

  res.w1_word = ctx.p1_word(1.0);
  res.w2_word = ctx.p2_word(1.0);
  res.p1 = res.w1_word.product();
  res.p2 = res.w2_word.product();
  res.p1_inv = res.w1_word.inverse().product();
  res.p2_inv = res.w2_word.inverse().product();

  // diagnostics against the diagonal targets
  BandedOperator pad = BandedOperator::identity(ctx.sp, (2 * k + 1) * f);
  BandedOperator embed = direct_sum({&u.op, &pad});
  std::vector<BandedOperator> usamp, usamps;
  {
    // recover the pinned samples from the context diagonals
    for (int i = 0; i <= k; ++i) {
      BandedOperator s = subfiber_block(ctx.x1, i, i, f) + subfiber_block(ctx.x2, i, i, f);
      usamp.push_back(s);
      usamps.push_back(adjoint(s));
    }
  }
  std::vector<const BandedOperator*> vt_parts;
  for (auto& s : usamp) vt_parts.push_back(&s);
  for (auto& s : usamps) vt_parts.push_back(&s);
  BandedOperator vt = direct_sum(vt_parts);
  BandedOperator wt;
  if (k >= 1) {
    std::vector<const BandedOperator*> wt_parts;
    for (int i = 1; i <= k; ++i) wt_parts.push_back(&usamps[i]);
    for (int i = 0; i < k; ++i) wt_parts.push_back(&usamp[i]);
    wt = tilde_embed(direct_sum(wt_parts), f);
  } else {
    wt = BandedOperator::identity(ctx.sp, 2 * f);
  }
  BandedOperator s_op = ctx.v_word(1.0).product();
  {
    Word ww = ctx.w_word(1.0);
    if (ww.size() > 0) s_op = s_op * ww.product();
  }
  BandedOperator vtwt = vt * wt;
  res.vw_minus_embed = measured_dist(vtwt, embed, opts.mode);
  res.vw_minus_s = measured_dist(vtwt, s_op, opts.mode);
  BandedOperator p1p2 = res.p1 * res.p2;
  res.embed_minus_p1p2 = measured_dist(embed, p1p2, opts.mode);
  res.p1p2_vs_s = one_inf_bound(p1p2 - s_op);
  if (!(res.p1p2_vs_s < 1e-8))
    throw NumericError("factor: word cancellation lost precision (" +
                       std::to_string(res.p1p2_vs_s) + ")");
  if (!(res.vw_minus_embed < 4.0 * eps))
    throw BoundError("factor: ||VW - diag(u,1)|| = " + std::to_string(res.vw_minus_embed) +
                     " is not below 4 eps = " + std::to_string(4.0 * eps));
  if (!(res.vw_minus_s < 9.0 * eps))
    throw BoundError("factor: ||VW - S|| = " + std::to_string(res.vw_minus_s) +
                     " is not below 9 eps = " + std::to_string(9.0 * eps));
  if (!(res.embed_minus_p1p2 < 13.0 * eps))
    throw BoundError("factor: ||diag(u,1) - P1 P2|| = " + std::to_string(res.embed_minus_p1p2) +
                     " is not below 13 eps = " + std::to_string(13.0 * eps));

  // support: P_i - 1 and P_i^{-1} - 1 live on the thickened family squares
  BandedOperator one_tot = BandedOperator::identity(ctx.sp, 2 * (k + 1) * f);
  res.member_p1 = membership(res.p1 - one_tot, pair.nbhd1, opts.member_tol);
  res.member_p1_inv = membership(res.p1_inv - one_tot, pair.nbhd1, opts.member_tol);
  res.member_p2 = membership(res.p2 - one_tot, pair.nbhd2, opts.member_tol);
  res.member_p2_inv = membership(res.p2_inv - one_tot, pair.nbhd2, opts.member_tol);
  for (const auto* m : {&res.member_p1, &res.member_p1_inv, &res.member_p2, &res.member_p2_inv})
    if (!m->pass) throw BoundError("factor: " + m->describe());
  res.prop_p1 = rat_max(res.p1.propagation(), res.p1_inv.propagation());
  res.prop_p2 = rat_max(res.p2.propagation(), res.p2_inv.propagation());
  if (res.prop_p1 > Rat(14) * pair.r)
    throw BoundError("factor: propagation(P1) = " + res.prop_p1.str() + " exceeds 14 r");
  if (res.prop_p2 > Rat(28) * pair.r)
    throw BoundError("factor: propagation(P2) = " + res.prop_p2.str() + " exceeds 28 r");

  // norm control (2c+1)^p
  res.primitives1 = res.w1_word.primitives();
  res.primitives2 = res.w2_word.primitives();
  res.word_bound1 = res.w1_word.norm_bound();
  res.word_bound2 = res.w2_word.norm_bound();
  res.bound_2c1_p1 = std::pow(2.0 * ctx.c + 1.0, res.primitives1);
  res.bound_2c1_p2 = std::pow(2.0 * ctx.c + 1.0, res.primitives2);
  res.norm_p1 = measured_norm(res.p1, opts.mode);
  res.norm_p2 = measured_norm(res.p2, opts.mode);
  res.norm_p1_inv = measured_norm(res.p1_inv, opts.mode);
  res.norm_p2_inv = measured_norm(res.p2_inv, opts.mode);
  auto check_norm = [](double val, double word_b, double pow_b, const char* who) {
    double cap = std::min(word_b, pow_b) * (1.0 + 1e-9);
    if (!(val <= cap))
      throw BoundError(std::string("factor: ||") + who + "|| = " + std::to_string(val) +
                       " exceeds the certified bound " + std::to_string(cap));
  };
  check_norm(res.norm_p1, res.word_bound1, res.bound_2c1_p1, "P1");
  check_norm(res.norm_p1_inv, res.word_bound1, res.bound_2c1_p1, "P1^-1");
  check_norm(res.norm_p2, res.word_bound2, res.bound_2c1_p2, "P2");
  check_norm(res.norm_p2_inv, res.word_bound2, res.bound_2c1_p2, "P2^-1");

  if (opts.with_trace) {
    auto add = [&](const Word& w, const char* side) {
      for (const auto& g : w.fs) {
        FactorTraceEntry e;
        e.kind = g.kind;
        e.label = g.label;
        e.side = side;
        e.prop = g.mat.propagation().str();
        e.norm = one_inf_bound(g.mat);
        res.trace.push_back(std::move(e));
      }
    };
    add(res.w1_word, "1");
    add(res.w2_word, "2");
  }
  return res;
}

// Polar decomposition after normalizing x by g = sqrt(||x|| / ||y||), which
// balances the two norms at sqrt(kappa); the certified spectral window then
// depends only on the conditioning, not on the raw scale.
inline PolarResult polar_prescaled(const BandedOperator& x, double eps,
                                   const BandedOperator& y, NormMode mode) {
  double nx = measured_norm(x, mode), ny = measured_norm(y, mode);
  if (!(nx > 0 && ny > 0)) throw ConfigError("polar_prescaled: degenerate input");
  double g = std::sqrt(nx / ny);
  double rootk = std::sqrt(nx * ny);
  BandedOperator xs = cd(1.0 / g) * x;
  BandedOperator ys = cd(g) * y;
  double rho = std::max(measured_norm(xs * ys - BandedOperator::identity(x.space, x.fiber), mode),
                        measured_norm(ys * xs - BandedOperator::identity(x.space, x.fiber), mode));
  PolarOptions popts;
  popts.mode = mode;
  popts.t0 = 0.999 * std::pow(1.0 - rho, 2) / (rootk * rootk);
  popts.t1 = 1.001 * rootk * rootk;
  popts.oracle_check = (x.space->n * x.fiber <= 600);
  popts.measure_abs = popts.oracle_check;
  double n_cap = std::max(rootk * (1.0 + 1e-8), 1.0 + 1e-12);
  PolarResult res = polar_decompose(xs, eps, x.propagation(), n_cap, ys, popts);
  res.prescale_g = g;
  res.h = cd(g) * res.h;
  res.x_minus_uh *= g;
  res.x_minus_uh_bound *= g;
  res.norm_x = nx;
  res.norm_y = ny;
  return res;
}

struct PairFactorization {
  P1P2Result base;
  QuasiElement w1, w2;
  BandedOperator h1, h2;
  int padding = 0;
  double eps = 0;
  double achieved_bound = 0;  // ||diag(u,1) - w1 w2||
  double ceiling = 0, alpha = 0;
  double prop_ratio1 = 0, prop_ratio2 = 0;  // propagation(w_i) / r
  double h1h2_minus_1 = 0;
  MembershipReport member_w1, member_w2;  // recorded, not asserted
  HomotopyPath path_w1, path_w2;
  double path_member1 = 0, path_member2 = 0;  // worst sample defect vs neighborhoods
  PolarResult pol1, pol2;
};

// Unitary two-sided factorization: polar-correct P1 and P2* and transport the
// construction along t -> t * arguments to get homotopies w_i ~ 1.
inline PairFactorization factor_across_pair(const QuasiElement& u, const HomotopyPath& path,
                                            const ControlledMVPair& pair,
                                            const FactorOptions& opts = {}) {
  PairFactorization out;
  out.base = factor_p1p2(u, path, pair, opts);
  out.eps = u.eps;
  out.padding = out.base.padding;
  double step = 0;
  P1P2Context ctx = make_p1p2_context(u, path, pair, &step);
  const int k = ctx.k, f = ctx.f;

  out.pol1 = polar_prescaled(out.base.p1, opts.eps_polar, out.base.p1_inv, opts.mode);
  out.pol2 = polar_prescaled(adjoint(out.base.p2), opts.eps_polar, adjoint(out.base.p2_inv),
                             opts.mode);
  out.w1 = out.pol1.u;
  out.h1 = out.pol1.h;
  out.w2 = out.pol2.u;
  out.w2.op = adjoint(out.pol2.u.op);
  out.h2 = adjoint(out.pol2.h);

  BandedOperator pad = BandedOperator::identity(ctx.sp, (2 * k + 1) * f);
  BandedOperator embed = direct_sum({&u.op, &pad});
  out.achieved_bound = measured_dist(embed, out.w1.op * out.w2.op, opts.mode);
  out.ceiling = opts.w_ceiling > 0 ? opts.w_ceiling : 26.0 * u.eps;
  if (!(out.achieved_bound < out.ceiling))
    throw BoundError("factor: ||diag(u,1) - w1 w2|| = " + std::to_string(out.achieved_bound) +
                     " is not below the ceiling " + std::to_string(out.ceiling));
  out.alpha = out.achieved_bound / u.eps;
  out.prop_ratio1 = out.w1.op.propagation().to_double() / pair.r.to_double();
  out.prop_ratio2 = out.w2.op.propagation().to_double() / pair.r.to_double();
  out.h1h2_minus_1 = measured_dist(out.h1 * out.h2,
                                   BandedOperator::identity(ctx.sp, 2 * (k + 1) * f), opts.mode);

  BandedOperator one_tot = BandedOperator::identity(ctx.sp, 2 * (k + 1) * f);
  out.member_w1 = membership(out.w1.op - one_tot, pair.nbhd1, opts.member_tol);
  out.member_w2 = membership(out.w2.op - one_tot, pair.nbhd2, opts.member_tol);

  if (opts.with_w_paths) {
    const int m = std::max(1, opts.w_path_samples + 1);
    std::vector<BandedOperator> s1, s2;
    std::vector<double> res1, res2;
    for (int i = 0; i <= m; ++i) {
      double t = 1.0 - static_cast<double>(i) / m;
      BandedOperator p1t = ctx.p1_word(t).product();
      BandedOperator p2t = ctx.p2_word(t).product();
      BandedOperator p1ti = ctx.p1_word(t).inverse().product();
      BandedOperator p2ti = ctx.p2_word(t).inverse().product();
      PolarResult a = polar_prescaled(p1t, opts.eps_polar, p1ti, opts.mode);
      PolarResult b = polar_prescaled(adjoint(p2t), opts.eps_polar, adjoint(p2ti), opts.mode);
      s1.push_back(a.u.op);
      s2.push_back(adjoint(b.u.op));
      res1.push_back(a.u.residual);
      res2.push_back(b.u.residual);
    }
    auto build = [&](std::vector<BandedOperator>& ss, std::vector<double>& rr2,
                     const SupportPredicate& nb, double* worst) {
      double eps_p = 1e-15;
      Rat rmax(0);
      for (double v : rr2) eps_p = std::max(eps_p, v * 1.01 + 1e-15);
      eps_p = std::min(eps_p, 0.2499999);
      for (auto& s : ss) rmax = rat_max(rmax, s.propagation());
      HomotopyPath hp;
      for (auto& s : ss) {
        hp.samples.push_back(certify(s, QuasiElement::Kind::Unitary, eps_p, rmax, opts.mode));
        MembershipReport mr = membership(s - one_tot, nb, opts.member_tol);
        *worst = std::max(*worst, mr.pass ? 0.0 : mr.worst);
      }
      hp.measure_steps(opts.mode);
      double mx = 0;
      for (double v : hp.steps) mx = std::max(mx, v);
      hp.step_bound = std::nextafter(std::max(mx, 1e-300), 2.0);
      hp.check();
      return hp;
    };
    out.path_w1 = build(s1, res1, pair.nbhd1, &out.path_member1);
    out.path_w2 = build(s2, res2, pair.nbhd2, &out.path_member2);
  }
  return out;
}

}  // namespace qkt
