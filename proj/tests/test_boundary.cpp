#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "qkt/boundary.hpp"
#include "qkt/generators.hpp"

using namespace qkt;
using Catch::Matchers::ContainsSubstring;

namespace {

ControlledMVPair path12_pair() {
  SpacePtr sp = make_path(12);
  auto [f1, f2] = annular_two_coloring(*sp, 0, Rat(6));
  return build_pair(sp, f1, f2, Rat(1), Rat(21, 4));
}

BoundaryOptions light_opts() {
  BoundaryOptions o;
  o.fac.with_w_paths = false;  // the w-homotopies are exercised in the factor tests
  return o;
}

}  // namespace

TEST_CASE("rotation homotopy joins diag(u,v) to diag(uv,1)", "[boundary]") {
  SpacePtr sp = make_cycle(6);
  Rng rng(13, 2);
  std::vector<double> ph(6), ph2(6);
  for (auto& x : ph) x = rng.sym(0.4);
  for (auto& x : ph2) x = rng.sym(0.4);
  BandedOperator uop = phase_diag(sp, 1, ph);
  BandedOperator vop = phase_diag(sp, 1, ph2);
  QuasiElement u = certify(uop, QuasiElement::Kind::Unitary, 0.01, Rat(0));

  HomotopyPath path = rotation_path(u, vop, 8, 0.05);
  REQUIRE(path.samples.size() == 9);

  BandedOperator front_ref = direct_sum({&uop, &vop});
  BandedOperator uv = uop * vop;
  BandedOperator one = BandedOperator::identity(sp, 1);
  BandedOperator back_ref = direct_sum({&uv, &one});
  CHECK(one_inf_bound(path.samples.front().op - front_ref) < 1e-15);
  CHECK(one_inf_bound(path.samples.back().op - back_ref) < 1e-12);

  // default partner is u*: the path contracts diag(u, u*) to the identity
  HomotopyPath def = rotation_path(u, std::nullopt, 8, 0.05);
  BandedOperator one2 = BandedOperator::identity(sp, 2);
  CHECK(measured_dist(def.samples.back().op, one2, NormMode::Operator) < 1e-12);
}

TEST_CASE("odd boundary of a split diagonal phase lands in the trivial class", "[boundary]") {
  ControlledMVPair pair = path12_pair();
  Rng rng(9, 1);
  BoundaryInstance inst = boundary_instance(rng, pair, 1, 0.1, 3, 0.12);

  BoundaryClass cls = boundary_odd(inst.u, inst.path, pair, light_opts());

  CHECK(cls.n_fiber == 1);
  CHECK(cls.expected_rank == 12);
  CHECK(cls.rank == 12);
  CHECK(cls.rank_class == 0);
  CHECK(cls.scalar_exact);
  CHECK(cls.member_y.pass);
  CHECK(cls.fac.base.k == 2);
  CHECK(cls.eps_chain > 0.0);
  CHECK(cls.a_minus_b < 8.0 * cls.eps_chain + 1e-12);
  CHECK(cls.q_minus_w2pw2 < 8.0 * pair.coercity * cls.eps_chain + 1e-12);
  CHECK(cls.q.kind == QuasiElement::Kind::Projection);
  CHECK(cls.q_residual < 0.25);
  CHECK(cls.kappa_distance >= 0.0);
  CHECK(cls.psi_b_defect >= 0.0);

  // the boundary projection is scalar diag(I_f, 0) plus an intersection term
  CHECK(cls.q.op.has_scalar());
  CHECK(cls.y.propagation() >= Rat(0));
}

TEST_CASE("boundary input validation catches shape mistakes", "[boundary]") {
  ControlledMVPair pair = path12_pair();
  Rng rng(9, 3);
  BoundaryInstance inst = boundary_instance(rng, pair, 1, 0.1, 3, 0.12);

  QuasiElement proj = certify(BandedOperator::identity(pair.space, 1),
                              QuasiElement::Kind::Projection, 0.01, Rat(0));
  CHECK_THROWS_WITH(boundary_odd(proj, inst.path, pair, light_opts()),
                    ContainsSubstring("expects a unitary class"));

  HomotopyPath empty;
  CHECK_THROWS_WITH(boundary_odd(inst.u, empty, pair, light_opts()),
                    ContainsSubstring("empty homotopy"));

  CHECK_THROWS_WITH(boundary_odd(inst.u, inst.base, pair, light_opts()),
                    ContainsSubstring("doubled fiber"));

  Rng rng2(9, 4);
  BoundaryInstance other = boundary_instance(rng2, pair, 1, 0.1, 3, 0.12);
  CHECK_THROWS_WITH(boundary_odd(inst.u, other.path, pair, light_opts()),
                    ContainsSubstring("does not start at diag(u, v)"));

  // An exactly unitary sample of propagation r can never push the class beyond
  // r: the distance-2 entries of w1* p w1 - p are unitarity defects of a single
  // row and cancel identically.  A genuine eps-unitary with dust on both sides
  // of one row does exceed the order, and strict mode must say so.
  SpacePtr sp = pair.space;
  BandedOperator du = BandedOperator::identity(sp, 1);
  Dense e(1, 1);
  e.at(0, 0) = cd(0.012, 0.008);
  du.blocks[{5, 4}] = e;
  e.at(0, 0) = cd(-0.009, 0.011);
  du.blocks[{5, 6}] = e;
  e.at(0, 0) = cd(0.007, -0.013);
  du.blocks[{4, 5}] = e;
  e.at(0, 0) = cd(0.010, 0.006);
  du.blocks[{6, 5}] = e;
  QuasiElement us = certify(du, QuasiElement::Kind::Unitary, 0.1, Rat(1));
  BandedOperator vv = adjoint(du);
  BandedOperator front = direct_sum({&du, &vv});
  HomotopyPath hand;
  hand.samples.push_back(certify(front, QuasiElement::Kind::Unitary, 0.1, Rat(1)));
  hand.samples.push_back(
      certify(BandedOperator::identity(sp, 2), QuasiElement::Kind::Unitary, 0.1, Rat(1)));
  hand.measure_steps(NormMode::Operator);
  hand.step_bound = std::nextafter(hand.steps[0], 1.0);
  hand.check();

  BoundaryClass wide = boundary_odd(us, hand, pair, light_opts());
  CHECK(wide.order_exceeded);
  CHECK(wide.prop_q > pair.r);
  BoundaryOptions strict = light_opts();
  strict.strict_order = true;
  CHECK_THROWS_WITH(boundary_odd(us, hand, pair, strict),
                    ContainsSubstring("strict mode"));
}

TEST_CASE("boundary rank class survives padding by identity slots", "[boundary]") {
  ControlledMVPair pair = path12_pair();
  Rng rng(9, 5);
  BoundaryInstance inst = boundary_instance(rng, pair, 1, 0.1, 3, 0.12);
  CHECK(padding_invariance_check(inst.u, inst.path, pair, 1, light_opts()));
}

TEST_CASE("boundary class is independent of the overlap assignment", "[boundary]") {
  ControlledMVPair pair = path12_pair();
  Rng rng(9, 6);
  BoundaryInstance inst = boundary_instance(rng, pair, 1, 0.1, 3, 0.12);

  WellDefinedness wd = well_definedness_check(inst.u, inst.path, pair, light_opts());

  CHECK(wd.rank_match);
  CHECK(wd.side1.rank_class == 0);
  CHECK(wd.side2.rank_class == 0);
  CHECK(wd.v_defect < 1e-10);
  CHECK(wd.conj_gap < 1.0);  // the chain certification is the real gate
  CHECK(wd.path_eps < 0.25);

  REQUIRE(wd.connecting.samples.size() == 11);  // 2 + (4+1) + 4 for nsteps = 4
  BandedOperator zero = BandedOperator::zero(pair.space, wd.side1.q.op.fiber);
  BandedOperator big_qb = direct_sum({&wd.side2.q.op, &zero});
  BandedOperator big_qa = direct_sum({&wd.side1.q.op, &zero});
  CHECK(one_inf_bound(wd.connecting.samples.front().op - big_qb) < 1e-15);
  CHECK(one_inf_bound(wd.connecting.samples.back().op - big_qa) < 1e-15);
}

TEST_CASE("uniform projection certification guards its inputs", "[boundary]") {
  SpacePtr sp = make_path(3);
  Dense d(1, 1);
  d.at(0, 0) = 1.0;
  BandedOperator p = BandedOperator::from_scalar(sp, d);
  HomotopyPath hp = uniform_projection_path({p, p}, 0.01, NormMode::Operator);
  CHECK(hp.samples.size() == 2);
  CHECK(hp.steps[0] == 0.0);

  Dense bad(1, 1);
  bad.at(0, 0) = 0.746;  // residual |a^2 - a| = 0.189
  BandedOperator pb = BandedOperator::from_scalar(sp, bad);
  CHECK_THROWS_AS(uniform_projection_path({pb}, 0.05, NormMode::Operator), BoundError);
}

TEST_CASE("equal and conjugated projections connect through the z-formula", "[boundary]") {
  SpacePtr sp = make_path(3);
  Dense d(2, 2);
  d.at(0, 0) = 1.0;
  QuasiElement q = certify(BandedOperator::from_scalar(sp, d),
                           QuasiElement::Kind::Projection, 0.01, Rat(0));

  MiddleExactness me = check_middle_exactness(q, q);
  CHECK(me.status == MiddleExactness::Status::Connected);
  CHECK(me.conjugator == "z-formula");
  CHECK(me.rank1 == 3);
  CHECK(me.rank2 == 3);
  CHECK(me.kdist == 0.0);
  CHECK(me.intertwine <= 1e-10);
  CHECK(me.conj_gap < 1e-12);
  REQUIRE(me.connecting.samples.size() == 19);  // 5 + 1 + 5 + 4 + 4

  // a genuinely rotated copy still connects: z = k2 k1 + (1-k2)(1-k1)
  SpacePtr s2 = make_path(2);
  BandedOperator e00 = BandedOperator::zero(s2, 1);
  Dense one1(1, 1);
  one1.at(0, 0) = 1.0;
  e00.blocks[{0, 0}] = one1;
  std::vector<RotationSpec> specs{{0, 0, 1, 0, 0.4}};
  BandedOperator v = rotations_op(s2, 1, specs);
  BandedOperator rot = v * e00 * adjoint(v);
  QuasiElement q1 = certify(e00, QuasiElement::Kind::Projection, 1e-3, Rat(0));
  QuasiElement q2 = certify(rot, QuasiElement::Kind::Projection, 1e-3, Rat(1));
  MiddleExactness me2 = check_middle_exactness(q1, q2);
  CHECK(me2.status == MiddleExactness::Status::Connected);
  CHECK(me2.conjugator == "z-formula");
  CHECK(me2.kdist > 0.1);
  CHECK(me2.conj_gap < 1e-10);
}

TEST_CASE("orthogonal rank-one projections need a supplied conjugator", "[boundary]") {
  SpacePtr sp = make_path(2);
  BandedOperator e00 = BandedOperator::zero(sp, 1), e11 = BandedOperator::zero(sp, 1);
  Dense one1(1, 1);
  one1.at(0, 0) = 1.0;
  e00.blocks[{0, 0}] = one1;
  e11.blocks[{1, 1}] = one1;
  QuasiElement q1 = certify(e00, QuasiElement::Kind::Projection, 1e-3, Rat(0));
  QuasiElement q2 = certify(e11, QuasiElement::Kind::Projection, 1e-3, Rat(0));

  // kdist = 1 rules out the z-formula and the identity does not intertwine
  MiddleExactness blind = check_middle_exactness(q1, q2);
  CHECK(blind.status == MiddleExactness::Status::Inconclusive);
  CHECK(blind.kdist >= 1.0 - 1e-12);

  // the swap permutation connects them explicitly
  BandedOperator swap = BandedOperator::zero(sp, 1);
  swap.blocks[{0, 1}] = one1;
  swap.blocks[{1, 0}] = one1;
  MiddleExactness me = check_middle_exactness(q1, q2, swap);
  CHECK(me.status == MiddleExactness::Status::Connected);
  CHECK(me.conjugator == "supplied");
  CHECK(me.conj_gap < 1e-12);

  // different kappa0 ranks cannot be probed at all
  QuasiElement qid = certify(BandedOperator::identity(sp, 1),
                             QuasiElement::Kind::Projection, 1e-3, Rat(0));
  CHECK_THROWS_WITH(check_middle_exactness(q1, qid), ContainsSubstring("ranks differ"));
}
