#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qkt/generators.hpp"
#include "qkt/quasi.hpp"

using namespace qkt;

namespace {

BandedOperator scalar1(const SpacePtr& sp, double v) {
  Dense d(1, 1);
  d.at(0, 0) = v;
  return BandedOperator::from_scalar(sp, d);
}

}  // namespace

TEST_CASE("measured norms bound the operator norm", "[quasi]") {
  SpacePtr sp = make_cycle(4);
  Rng rng(3, 1);
  BandedOperator a = BandedOperator::zero(sp, 2);
  for (int p = 0; p < 4; ++p) {
    Dense b(2, 2);
    for (auto& v : b.a) v = cd(rng.sym(1.0), rng.sym(1.0));
    a.blocks[{p, (p + 1) % 4}] = std::move(b);
  }
  double op = measured_norm(a, NormMode::Operator);
  CHECK(op <= measured_norm(a, NormMode::FrobeniusBound) * (1 + 1e-12));
  CHECK(op <= measured_norm(a, NormMode::OneInfBound) * (1 + 1e-12));
  CHECK(measured_dist(a, a, NormMode::Operator) == 0.0);
}

TEST_CASE("certify enforces every inequality strictly", "[quasi]") {
  SpacePtr sp = make_path(4);
  BandedOperator one = BandedOperator::identity(sp, 1);

  CHECK_THROWS_AS(certify(one, QuasiElement::Kind::Projection, 0.25, Rat(0)), ConfigError);
  CHECK_THROWS_AS(certify(one, QuasiElement::Kind::Projection, 0.0, Rat(0)), ConfigError);
  CHECK_THROWS_AS(certify(one, QuasiElement::Kind::Projection, -0.1, Rat(0)), ConfigError);

  // propagation above r
  BandedOperator far = BandedOperator::zero(sp, 1);
  Dense v(1, 1);
  v.at(0, 0) = 0.01;
  far.blocks[{0, 3}] = v;
  CHECK_THROWS_AS(certify(one + far, QuasiElement::Kind::Projection, 0.1, Rat(1)), BoundError);

  // self-adjointness gate for projections
  BandedOperator skew = BandedOperator::zero(sp, 1);
  Dense iv(1, 1);
  iv.at(0, 0) = cd(0, 1);
  skew.blocks[{0, 0}] = iv;
  CHECK_THROWS_AS(certify(skew, QuasiElement::Kind::Projection, 0.1, Rat(0)), BoundError);

  // residual gates
  CHECK_THROWS_AS(certify(scalar1(sp, 0.5), QuasiElement::Kind::Projection, 0.2, Rat(0)),
                  BoundError);
  CHECK_THROWS_AS(certify(cd(2) * one, QuasiElement::Kind::Unitary, 0.2, Rat(0)), BoundError);

  QuasiElement ok = certify(scalar1(sp, 0.1), QuasiElement::Kind::Projection, 0.1, Rat(0));
  CHECK(std::abs(ok.residual - 0.09) < 1e-14);
  CHECK_FALSE(ok.residual_is_bound);
}

TEST_CASE("certify in bound modes never underestimates", "[quasi]") {
  SpacePtr sp = make_path(5);
  BandedOperator u = phase_diag(sp, 2, std::vector<double>(10, 0.4));
  QuasiElement a = certify(u, QuasiElement::Kind::Unitary, 1e-6, Rat(0), NormMode::Operator);
  QuasiElement b = certify(u, QuasiElement::Kind::Unitary, 1e-6, Rat(0), NormMode::OneInfBound);
  QuasiElement c = certify(u, QuasiElement::Kind::Unitary, 1e-6, Rat(0), NormMode::FrobeniusBound);
  CHECK_FALSE(a.residual_is_bound);
  CHECK(b.residual_is_bound);
  CHECK(c.residual_is_bound);
  CHECK(a.residual <= b.residual + 1e-15);
  CHECK(a.residual <= c.residual + 1e-15);
}

TEST_CASE("control pairs validate their shape", "[quasi]") {
  ControlPair cp;
  cp.lambda = 2.0;
  cp.h = {{0.1, 5.0}, {0.2, 3.0}};
  cp.validate();
  CHECK(cp.eval(0.05) == 5.0);
  CHECK(cp.eval(0.15) == 5.0);
  CHECK(cp.eval(0.25) == 3.0);

  ControlPair bad = cp;
  bad.lambda = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cp;
  bad.h = {{0.2, 5.0}, {0.1, 3.0}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cp;
  bad.h = {{0.1, 3.0}, {0.2, 5.0}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("homotopy paths check sample agreement and steps", "[quasi]") {
  SpacePtr sp = make_path(2);
  QuasiElement p = certify(scalar1(sp, 0.02), QuasiElement::Kind::Projection, 0.1, Rat(0));

  HomotopyPath short_path;
  short_path.samples = {p};
  CHECK_THROWS_AS(short_path.check(), ConfigError);

  HomotopyPath mixed;
  mixed.samples = {p, certify(p.op, QuasiElement::Kind::Projection, 0.2, Rat(0))};
  mixed.measure_steps();
  mixed.step_bound = 1.0;
  CHECK_THROWS_AS(mixed.check(), ConfigError);  // eps disagrees across samples

  HomotopyPath unmeasured;
  unmeasured.samples = {p, p};
  unmeasured.step_bound = 1.0;
  CHECK_THROWS_AS(unmeasured.check(), ConfigError);

  HomotopyPath tight;
  tight.samples = {p, p};
  tight.measure_steps();
  tight.step_bound = 0.0;  // steps are 0, bound is not strict
  CHECK_THROWS_AS(tight.check(), BoundError);
}

TEST_CASE("linear_path interpolates with equal steps", "[quasi]") {
  SpacePtr sp = make_path(2);
  BandedOperator a = scalar1(sp, 0.02);
  BandedOperator b = BandedOperator::zero(sp, 1);
  HomotopyPath path = linear_path(a, b, 4, QuasiElement::Kind::Projection, 0.02, Rat(0));
  REQUIRE(path.samples.size() == 5);
  REQUIRE(path.steps.size() == 4);
  for (double s : path.steps) CHECK(std::abs(s - 0.005) < 1e-15);
  path.check();
  CHECK(exact_equal(path.samples.back().op, b));
}

TEST_CASE("kappa0 collapses scalar spectra to the right rank", "[quasi]") {
  SpacePtr sp = make_path(1);

  QuasiElement low = certify(scalar1(sp, 0.3), QuasiElement::Kind::Projection, 0.24, Rat(0));
  Kappa0Result k0 = kappa0(low, true, true);
  CHECK(k0.rank == 0);
  CHECK(std::abs(k0.distance - 0.3) < 1e-9);
  CHECK(k0.idempotency < 1e-12);
  CHECK(k0.idempotency_op >= 0.0);

  QuasiElement high = certify(scalar1(sp, 0.7), QuasiElement::Kind::Projection, 0.24, Rat(0));
  Kappa0Result k1 = kappa0(high);
  CHECK(k1.rank == 1);
  CHECK(std::abs(k1.distance - 0.3) < 1e-9);

  CHECK(kappa0_rank(high) == 1);
  CHECK(rank_class(high, 1) == 0);
  CHECK(rank_class(high, 0) == 1);
}

TEST_CASE("kappa0 recovers an engineered spectral projection", "[quasi]") {
  // p = 0.9 q + 0.05 with q an exact rank-one projection: spectrum {0.95, 0.05}
  SpacePtr sp = make_path(1);
  double c = std::cos(0.4), s = std::sin(0.4);
  Dense q(2, 2);
  q.at(0, 0) = c * c;
  q.at(0, 1) = c * s;
  q.at(1, 0) = c * s;
  q.at(1, 1) = s * s;
  Dense op = 0.9 * q + 0.05 * Dense::eye(2);
  QuasiElement p = certify(BandedOperator::from_scalar(sp, op),
                           QuasiElement::Kind::Projection, 0.1, Rat(0));
  CHECK(std::abs(p.residual - 0.0475) < 1e-12);

  Kappa0Result kr = kappa0(p, true, false);
  CHECK(kr.rank == 1);
  CHECK(std::abs(kr.distance - 0.05) < 1e-9);
  CHECK(max_abs(kr.p.assemble() - q) < 1e-9);
}

TEST_CASE("kappa0 gates its inputs", "[quasi]") {
  SpacePtr sp = make_path(1);
  QuasiElement fake;  // hand-built: residual exactly 1/4, no spectral gap
  fake.op = scalar1(sp, 0.5);
  fake.kind = QuasiElement::Kind::Projection;
  fake.eps = 0.24;
  fake.r = Rat(0);
  CHECK_THROWS_AS(kappa0(fake), BoundError);

  QuasiElement u = certify(BandedOperator::identity(sp, 1), QuasiElement::Kind::Unitary, 0.1,
                           Rat(0));
  CHECK_THROWS_AS(kappa0(u), ConfigError);
}

TEST_CASE("kappa0 rank matches the generator on a real instance", "[quasi]") {
  Rng rng(17, 5);
  SpacePtr sp = make_cycle(8);
  ProjectionInstance inst = random_projection(rng, sp, 2, Rat(2), 0.1);
  Kappa0Result kr = kappa0(inst.p, true, false);
  CHECK(kr.rank == inst.rank);
  CHECK(kr.distance < 2.0 * 0.1);
  CHECK(kr.idempotency < 1e-12);
}

TEST_CASE("sparsify round-trips dense matrices", "[quasi]") {
  SpacePtr sp = make_path(3);
  Rng rng(5, 9);
  Dense d(6, 6);
  for (auto& v : d.a) v = cd(rng.sym(1.0), rng.sym(1.0));
  BandedOperator a = sparsify(d, sp, 2);
  CHECK(max_abs(a.assemble() - d) == 0.0);
  CHECK_FALSE(a.has_scalar());
}

TEST_CASE("perturb_projection certifies the move at 5 eps", "[quasi]") {
  SpacePtr sp = make_path(2);
  BandedOperator p_op = BandedOperator::zero(sp, 1);
  Dense one_v(1, 1), small_v(1, 1);
  one_v.at(0, 0) = 1.0;
  small_v.at(0, 0) = 0.03;
  p_op.blocks[{0, 0}] = one_v;
  p_op.blocks[{1, 1}] = small_v;
  QuasiElement p = certify(p_op, QuasiElement::Kind::Projection, 0.04, Rat(0));

  BandedOperator q_op = BandedOperator::zero(sp, 1);
  q_op.blocks[{0, 0}] = one_v;  // snap the 0.03 slot to zero
  PerturbResult res = perturb_projection(p, q_op, Rat(0));
  CHECK(res.q.eps == 5.0 * 0.04);
  CHECK(exact_equal(res.q.op, q_op));
  REQUIRE(res.path.samples.size() == 5);
  CHECK(exact_equal(res.path.samples.front().op, p_op));
  res.path.check();

  // eps gate: 5 eps must stay below 1/4
  QuasiElement hot = p;
  hot.eps = 0.06;
  CHECK_THROWS_AS(perturb_projection(hot, q_op, Rat(0)), ConfigError);

  // candidate must be self-adjoint
  BandedOperator skew = q_op;
  Dense iv(1, 1);
  iv.at(0, 0) = cd(0, 0.01);
  skew.blocks[{1, 1}] = iv;
  CHECK_THROWS_AS(perturb_projection(p, skew, Rat(0)), BoundError);

  // candidate propagation above r
  BandedOperator wide = q_op;
  Dense tiny(1, 1);
  tiny.at(0, 0) = 0.001;
  wide.blocks[{0, 1}] = tiny;
  CHECK_THROWS_AS(perturb_projection(p, wide, Rat(0)), BoundError);

  // candidate too far: ||p - q|| must stay below eps
  CHECK_THROWS_AS(perturb_projection(p, BandedOperator::zero(sp, 1), Rat(0)), BoundError);
}

TEST_CASE("standard_form snaps the scalar part to diag(I_k, 0)", "[quasi]") {
  SpacePtr sp = make_path(3);

  // already standard: the homotopy is trivial
  Dense d10(2, 2);
  d10.at(0, 0) = 1;
  QuasiElement trivial = certify(BandedOperator::from_scalar(sp, d10),
                                 QuasiElement::Kind::Projection, 0.02, Rat(0));
  StandardFormResult triv = standard_form(trivial, 1);
  CHECK(triv.k == 1);
  CHECK(triv.scalar_move == 0.0);
  CHECK(triv.q.eps == 9.0 * 0.02);
  CHECK(max_abs(triv.q.op.scalar - d10) == 0.0);
  CHECK(triv.path.samples.size() == 2);

  // rotated: scalar [[0.98, 0.05], [0.05, 0.02]] has residual exactly 0.0171
  Dense lam(2, 2);
  lam.at(0, 0) = 0.98;
  lam.at(0, 1) = 0.05;
  lam.at(1, 0) = 0.05;
  lam.at(1, 1) = 0.02;
  QuasiElement q = certify(BandedOperator::from_scalar(sp, lam),
                           QuasiElement::Kind::Projection, 0.025, Rat(0));
  CHECK(std::abs(q.residual - 0.0171) < 1e-12);

  StandardFormResult out = standard_form(q, 1);
  REQUIRE(out.q.op.has_scalar());
  CHECK(max_abs(out.q.op.scalar - d10) == 0.0);  // exactly diag(1, 0)
  CHECK(out.q.eps == 9.0 * 0.025);
  CHECK(out.scalar_move > 0.0);
  out.path.check();
  CHECK(exact_equal(out.path.samples.back().op, out.q.op));
  CHECK(exact_equal(out.path.samples.front().op, q.op));

  CHECK_THROWS_AS(standard_form(q, 2), BoundError);   // scalar rank is 1
  CHECK_THROWS_AS(standard_form(q, 3), ConfigError);  // out of range

  QuasiElement wide = certify(BandedOperator::from_scalar(sp, lam),
                              QuasiElement::Kind::Projection, 0.03, Rat(0));
  CHECK_THROWS_AS(standard_form(wide, 1), ConfigError);  // 9 eps would reach 0.27
}

TEST_CASE("conjugation_path lands on the conjugated projection", "[quasi]") {
  SpacePtr sp = make_path(3);
  BandedOperator q_op = BandedOperator::zero(sp, 1);
  Dense one_v(1, 1);
  one_v.at(0, 0) = 1.0;
  q_op.blocks[{0, 0}] = one_v;
  QuasiElement q = certify(q_op, QuasiElement::Kind::Projection, 1e-6, Rat(0));

  BandedOperator v = phase_diag(sp, 1, {0.3, -0.2, 0.9});
  HomotopyPath path = conjugation_path(q, v, 1e-6);
  path.check();

  BandedOperator zero = BandedOperator::zero(sp, 1);
  BandedOperator front = direct_sum({&q_op, &zero});
  CHECK(one_inf_bound(path.samples.front().op - front) == 0.0);

  BandedOperator conj = adjoint(v) * q_op * v;
  BandedOperator target = direct_sum({&conj, &zero});
  CHECK(one_inf_bound(path.samples.back().op - target) < 1e-12);
}
