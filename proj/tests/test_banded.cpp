#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qkt/banded.hpp"
#include "qkt/metric_space.hpp"
#include "qkt/rng.hpp"

using namespace qkt;

namespace {

Dense blk2(cd a, cd b, cd c, cd d) {
  Dense m(2, 2);
  m.at(0, 0) = a;
  m.at(0, 1) = b;
  m.at(1, 0) = c;
  m.at(1, 1) = d;
  return m;
}

// deterministic banded operator with blocks on all pairs within reach
BandedOperator seeded_op(const SpacePtr& sp, int fiber, const Rat& reach, std::uint64_t stream) {
  Rng rng(9, stream);
  BandedOperator a = BandedOperator::zero(sp, fiber);
  for (int p = 0; p < sp->n; ++p)
    for (int q = 0; q < sp->n; ++q) {
      if (sp->d(p, q) > reach) continue;
      Dense b(fiber, fiber);
      for (auto& v : b.a) v = cd(rng.sym(1.0), rng.sym(1.0));
      a.blocks[{p, q}] = std::move(b);
    }
  return a;
}

}  // namespace

TEST_CASE("constructors and assemble layout", "[banded]") {
  SpacePtr sp = make_path(3);
  BandedOperator one = BandedOperator::identity(sp, 2);
  CHECK(max_abs(one.assemble() - Dense::eye(6)) == 0.0);
  CHECK(one.propagation() == Rat(0));

  Dense c = blk2(1, 2, 3, 4);
  BandedOperator s = BandedOperator::from_scalar(sp, c);
  CHECK(s.fiber == 2);
  Dense d = s.assemble();
  // the scalar repeats on every diagonal block and nowhere else
  for (int p = 0; p < 3; ++p) {
    CHECK(d.at(2 * p, 2 * p) == cd(1, 0));
    CHECK(d.at(2 * p, 2 * p + 1) == cd(2, 0));
    CHECK(d.at(2 * p + 1, 2 * p) == cd(3, 0));
  }
  CHECK(d.at(0, 2) == cd(0, 0));
  CHECK_THROWS_AS(BandedOperator::from_scalar(sp, Dense(2, 3)), ConfigError);

  BandedOperator b = BandedOperator::zero(sp, 2);
  b.set_block(0, 2, blk2(5, 0, 0, 0));
  CHECK(b.assemble().at(0, 4) == cd(5, 0));
  CHECK(b.get_block(0, 2) != nullptr);
  CHECK(b.get_block(2, 0) == nullptr);
  CHECK_THROWS_AS(b.set_block(0, 1, Dense(1, 1)), ConfigError);
}

TEST_CASE("propagation ignores exact zeros", "[banded]") {
  SpacePtr sp = make_path(5);
  BandedOperator a = BandedOperator::zero(sp, 1);
  Dense v(1, 1);
  v.at(0, 0) = 1;
  a.blocks[{0, 2}] = v;
  a.blocks[{0, 4}] = Dense(1, 1);  // exactly zero block, must not count
  CHECK(a.propagation() == Rat(2));
  a.prune();
  CHECK(a.blocks.size() == 1);

  // set_block drops exact zeros up front
  BandedOperator b = BandedOperator::zero(sp, 1);
  b.set_block(1, 4, Dense(1, 1));
  CHECK(b.blocks.empty());

  BandedOperator t = truncate(a, Rat(1));
  CHECK(t.blocks.empty());
  CHECK(truncate(a, Rat(2)).blocks.size() == 1);
}

TEST_CASE("arithmetic agrees with the assembled matrices", "[banded]") {
  SpacePtr sp = make_cycle(5);
  BandedOperator a = seeded_op(sp, 2, Rat(1), 1);
  BandedOperator b = seeded_op(sp, 2, Rat(2), 2);
  a.scalar = blk2(cd(0, 1), 0, 0, cd(2, 0));

  CHECK(max_abs((a + b).assemble() - (a.assemble() + b.assemble())) < 1e-14);
  CHECK(max_abs((a - b).assemble() - (a.assemble() - b.assemble())) < 1e-14);
  CHECK(max_abs((cd(2, -1) * a).assemble() - cd(2, -1) * a.assemble()) < 1e-14);
  CHECK(max_abs((a * b).assemble() - a.assemble() * b.assemble()) < 1e-12);
  CHECK(max_abs(adjoint(a).assemble() - adjoint(a.assemble())) == 0.0);

  // propagation is subadditive under products
  Rat pa = a.propagation(), pb = b.propagation();
  CHECK((a * b).propagation() <= pa + pb);

  BandedOperator other = seeded_op(make_path(5), 2, Rat(1), 3);
  CHECK_THROWS_AS(a + other, ConfigError);
  BandedOperator f3 = seeded_op(sp, 3, Rat(1), 4);
  CHECK_THROWS_AS(a * f3, ConfigError);
}

TEST_CASE("folded moves the scalar into diagonal blocks", "[banded]") {
  SpacePtr sp = make_path(4);
  BandedOperator a = seeded_op(sp, 2, Rat(1), 5);
  a.scalar = blk2(1, 0, 0, -1);
  BandedOperator f = a.folded();
  CHECK_FALSE(f.has_scalar());
  CHECK(max_abs(f.assemble() - a.assemble()) == 0.0);
  CHECK(exact_equal(f, a));
}

TEST_CASE("row_restrict splits exactly along rows", "[banded]") {
  SpacePtr sp = make_path(3);
  BandedOperator a = BandedOperator::identity(sp, 1);
  Dense v(1, 1);
  v.at(0, 0) = 7;
  a.blocks[{0, 1}] = v;
  a.blocks[{2, 1}] = v;

  std::vector<char> rows = {1, 0, 0};
  BandedOperator r1 = row_restrict(a, rows);
  // keeps row 0: the folded identity block at (0,0) and the (0,1) entry
  CHECK(r1.blocks.count({0, 0}) == 1);
  CHECK(r1.blocks.count({0, 1}) == 1);
  CHECK(r1.blocks.count({1, 1}) == 0);
  CHECK(r1.blocks.count({2, 1}) == 0);
  CHECK_FALSE(r1.has_scalar());

  std::vector<char> rest = {0, 1, 1};
  BandedOperator r2 = row_restrict(a, rest);
  CHECK(max_abs((r1 + r2).assemble() - a.assemble()) == 0.0);
}

TEST_CASE("direct_sum stacks heterogeneous fibers", "[banded]") {
  SpacePtr sp = make_path(2);
  BandedOperator u = BandedOperator::zero(sp, 1);
  Dense v(1, 1);
  v.at(0, 0) = cd(0, 3);
  u.blocks[{0, 1}] = v;
  BandedOperator m = BandedOperator::identity(sp, 2);

  BandedOperator ds = direct_sum({&u, &m});
  CHECK(ds.fiber == 3);
  Dense d = ds.assemble();
  CHECK(d.at(0, 3) == cd(0, 3));  // fiber slot 0, points 0 -> 1
  CHECK(d.at(1, 1) == cd(1, 0));  // identity summand occupies slots 1,2
  CHECK(d.at(2, 2) == cd(1, 0));
  CHECK(d.at(4, 4) == cd(1, 0));
  CHECK(d.at(0, 0) == cd(0, 0));
  CHECK(d.at(1, 4) == cd(0, 0));

  // tilde-style sandwich 1 (+) m (+) 1 with fibers 1,2,1
  BandedOperator pad = BandedOperator::identity(sp, 1);
  BandedOperator tilde = direct_sum({&pad, &m, &pad});
  CHECK(tilde.fiber == 4);
  CHECK(max_abs(tilde.assemble() - Dense::eye(8)) == 0.0);

  BandedOperator foreign = BandedOperator::identity(make_path(3), 1);
  CHECK_THROWS_AS(direct_sum({&u, &foreign}), ConfigError);
  CHECK_THROWS_AS(direct_sum({}), ConfigError);
}

TEST_CASE("block_matrix arranges equal-fiber cells", "[banded]") {
  SpacePtr sp = make_path(2);
  BandedOperator one = BandedOperator::identity(sp, 1);
  BandedOperator zero = BandedOperator::zero(sp, 1);
  BandedOperator none = cd(-1) * one;
  BandedOperator j = block_matrix({{&zero, &none}, {&one, &zero}});
  CHECK(j.fiber == 2);
  Dense d = j.assemble();
  CHECK(d.at(0, 1) == cd(-1, 0));
  CHECK(d.at(1, 0) == cd(1, 0));
  CHECK(d.at(2, 3) == cd(-1, 0));
  CHECK(max_abs((j * j).assemble() + Dense::eye(4)) == 0.0);  // J^2 = -1
}

TEST_CASE("kron_const and subfiber_block round trip", "[banded]") {
  SpacePtr sp = make_path(3);
  BandedOperator a = seeded_op(sp, 1, Rat(1), 6);
  Dense c = blk2(1, 2, 0, 1);
  BandedOperator k = kron_const(c, a);
  CHECK(k.fiber == 2);
  for (const auto& [pq, blk] : a.blocks) {
    const Dense* kb = k.get_block(pq.first, pq.second);
    REQUIRE(kb != nullptr);
    CHECK(max_abs(*kb - kron(c, blk)) == 0.0);
  }

  BandedOperator b = seeded_op(sp, 1, Rat(2), 7);
  BandedOperator ds = direct_sum({&a, &b});
  CHECK(exact_equal(subfiber_block(ds, 0, 0, 1), a));
  CHECK(exact_equal(subfiber_block(ds, 1, 1, 1), b));
  CHECK(subfiber_block(ds, 0, 1, 1).blocks.empty());
  CHECK_THROWS_AS(subfiber_block(ds, 0, 0, 3), ConfigError);
}

TEST_CASE("one_inf_bound dominates the operator norm", "[banded]") {
  SpacePtr sp = make_cycle(6);

  // single entry: the Schur bound is tight
  BandedOperator single = BandedOperator::zero(sp, 1);
  Dense v(1, 1);
  v.at(0, 0) = cd(3, 4);
  single.blocks[{0, 1}] = v;
  CHECK(std::abs(one_inf_bound(single) - 5.0) < 1e-14);
  CHECK(std::abs(operator_norm(single) - 5.0) < 1e-12);

  for (std::uint64_t t = 0; t < 5; ++t) {
    BandedOperator a = seeded_op(sp, 2, Rat(2), 20 + t);
    if (t % 2 == 0) a.scalar = blk2(cd(0.3, 0.1), 0, 0.2, -1);
    double schur = one_inf_bound(a);
    double op = operator_norm(a);
    CHECK(op <= schur * (1.0 + 1e-12));
  }

  CHECK(one_inf_bound(BandedOperator::zero(sp, 2)) == 0.0);
}

TEST_CASE("trace counts the scalar once per point", "[banded]") {
  SpacePtr sp = make_path(4);
  CHECK(trace(BandedOperator::identity(sp, 3)) == cd(12, 0));
  BandedOperator a = BandedOperator::identity(sp, 1);
  Dense v(1, 1);
  v.at(0, 0) = cd(0, 2);
  a.blocks[{2, 2}] = v;
  a.blocks[{0, 1}] = v;  // off-diagonal, no trace contribution
  CHECK(trace(a) == cd(4, 2));
}

TEST_CASE("exact_equal is exact", "[banded]") {
  SpacePtr sp = make_path(3);
  BandedOperator a = seeded_op(sp, 2, Rat(1), 8);
  BandedOperator b = a;
  CHECK(exact_equal(a, b));
  cd& z = b.blocks.begin()->second.at(0, 0);
  z = cd(std::nextafter(z.real(), 1e9), z.imag());  // one ulp is enough
  CHECK_FALSE(exact_equal(a, b));
  CHECK_FALSE(exact_equal(a, BandedOperator::zero(sp, 1)));
}
