#pragma once

#include <string>
#include <vector>

#include "qkt/quasi.hpp"
#include "qkt/support.hpp"

namespace qkt {

// A controlled Mayer-Vietoris pair over a two-family cover:
//   - the two families jointly cover the space,
//   - within each family the pieces are pairwise separated by more than 2s,
//   - the control inequalities 5r < s and 2s < R hold strictly.
// Elements of propagation <= r split across the families by row restriction;
// the projection Psi compresses onto the s-thickened family-2 squares.
struct ControlledMVPair {
  SpacePtr space;
  Rat r, s, R;                 // R = min separation over both families (computed)
  double coercity = 1.0;       // splitting constant of the row restriction
  bool overlap_to_2 = false;   // which family absorbs the overlap rows
  CoverFamily fam1, fam2;
  std::vector<char> rows1, rows2;               // row assignment (overlap resolved)
  std::vector<std::vector<char>> thick1, thick2;  // s-thickened piece indicators
  SupportPredicate delta1, delta2;  // s-thickened squares per family
  SupportPredicate nbhd1, nbhd2;    // 21r- / 35r-thickened squares (factor support side)
  SupportPredicate inter;           // pairwise intersections of thickened pieces
};

inline std::vector<std::vector<char>> thick_indicators(const FiniteMetricSpace& sp,
                                                       const CoverFamily& fam, const Rat& t) {
  std::vector<std::vector<char>> out;
  for (const auto& piece : fam.pieces) {
    std::vector<char> ind(sp.n, 0);
    for (int x = 0; x < sp.n; ++x)
      if (point_to_piece(sp, x, piece) <= t) ind[x] = 1;
    out.push_back(std::move(ind));
  }
  return out;
}

inline ControlledMVPair build_pair(const SpacePtr& sp, CoverFamily fam1, CoverFamily fam2,
                                   const Rat& r, const Rat& s, bool overlap_to_2 = false) {
  if (!(r > Rat(0))) throw ConfigError("pair: r must be positive");
  if (!(Rat(5) * r < s))
    throw ConfigError("pair: control inequality 5r < s fails (r = " + r.str() +
                      ", s = " + s.str() + ")");

  ControlledMVPair pair;
  pair.space = sp;
  pair.r = r;
  pair.s = s;
  pair.overlap_to_2 = overlap_to_2;
  fill_family_stats(*sp, fam1);
  fill_family_stats(*sp, fam2);
  pair.R = rat_min(fam1.r_disjoint, fam2.r_disjoint);
  if (!(Rat(2) * s < pair.R))
    throw ConfigError("pair: control inequality 2s < R fails (s = " + s.str() +
                      ", R = " + pair.R.str() + ")");

  // coverage
  std::vector<char> in1(sp->n, 0), in2(sp->n, 0);
  for (const auto& piece : fam1.pieces)
    for (int x : piece) in1[x] = 1;
  for (const auto& piece : fam2.pieces)
    for (int x : piece) in2[x] = 1;
  for (int x = 0; x < sp->n; ++x)
    if (!in1[x] && !in2[x])
      throw ConfigError("pair: point " + std::to_string(x) + " is uncovered");

  pair.thick1 = thick_indicators(*sp, fam1, s);
  pair.thick2 = thick_indicators(*sp, fam2, s);
  pair.delta1 = SupportPredicate::from_squares(pair.thick1, "Delta1");
  pair.delta2 = SupportPredicate::from_squares(pair.thick2, "Delta2");
  pair.nbhd1 = SupportPredicate::from_squares(thick_indicators(*sp, fam1, Rat(21) * r), "N1");
  pair.nbhd2 = SupportPredicate::from_squares(thick_indicators(*sp, fam2, Rat(35) * r), "N2");

  std::vector<std::vector<char>> inter_sq;
  for (const auto& a : pair.thick1)
    for (const auto& b : pair.thick2) {
      std::vector<char> ind(sp->n, 0);
      bool any = false;
      for (int x = 0; x < sp->n; ++x)
        if (a[x] && b[x]) ind[x] = any = true;
      if (any) inter_sq.push_back(std::move(ind));
    }
  pair.inter = SupportPredicate::from_squares(std::move(inter_sq), "Delta1 ∩ Delta2");

  pair.rows1.assign(sp->n, 0);
  pair.rows2.assign(sp->n, 0);
  for (int x = 0; x < sp->n; ++x) {
    bool overlap = in1[x] && in2[x];
    bool side1 = overlap ? !overlap_to_2 : in1[x] != 0;
    pair.rows1[x] = side1 ? 1 : 0;
    pair.rows2[x] = side1 ? 0 : 1;
  }
  pair.fam1 = std::move(fam1);
  pair.fam2 = std::move(fam2);
  return pair;
}

// Split an element of propagation <= r into row-restricted halves
// x = x1 + x2 with x1 supported on the side-1 rows.
inline std::pair<BandedOperator, BandedOperator> decompose_element(const ControlledMVPair& pair,
                                                                   const BandedOperator& x) {
  if (x.propagation() > pair.r)
    throw BoundError("pair: element propagation " + x.propagation().str() +
                     " exceeds r = " + pair.r.str());
  return {row_restrict(x, pair.rows1), row_restrict(x, pair.rows2)};
}

// Compression onto the union of squares of the s-thickened family-2 pieces.
// Because those pieces are pairwise disjoint this equals sum_i chi_i x chi_i
// and is norm-nonincreasing (coercity constant 1).
inline BandedOperator cia_project(const ControlledMVPair& pair, const BandedOperator& x) {
  BandedOperator f = x.folded();
  const FiniteMetricSpace& sp = *pair.space;
  std::vector<int> piece_of(sp.n, -1);
  for (size_t i = 0; i < pair.thick2.size(); ++i)
    for (int p = 0; p < sp.n; ++p)
      if (pair.thick2[i][p]) {
        if (piece_of[p] >= 0) throw NumericError("pair: thickened family-2 pieces overlap");
        piece_of[p] = static_cast<int>(i);
      }
  BandedOperator out = BandedOperator::zero(x.space, x.fiber);
  for (const auto& [pq, blk] : f.blocks) {
    auto [p, q] = pq;
    if (piece_of[p] >= 0 && piece_of[p] == piece_of[q]) out.blocks[pq] = blk;
  }
  out.prune();
  return out;
}

struct CIAReport {
  BandedOperator z;
  double dist = 0;          // ||x1 - x2||
  double z_minus_x2 = 0;    // must be <= c ||x1 - x2||, c = 1
  double z_minus_x1 = 0;    // must be <= (c+1) ||x1 - x2||
  double psi_fixes_x2 = 0;  // ||Psi(x2) - x2||, exact 0 for a true Delta2-side element
  MembershipReport member_inter, member_x1, member_x2;
  bool pass = true;
};

// Complete intersection approximation: given x1 on the Delta1 side and x2 on
// the Delta2 side with x1 close to x2, z = Psi(x1) lies in the intersection
// exactly and is (c+1)-close to x1, c-close to x2.
inline CIAReport cia_approximate(const ControlledMVPair& pair, const BandedOperator& x1,
                                 const BandedOperator& x2,
                                 NormMode mode = NormMode::Operator) {
  CIAReport rep;
  rep.member_x1 = membership(x1, pair.delta1, 1e-10);
  rep.member_x2 = membership(x2, pair.delta2, 1e-10);
  if (!rep.member_x1.pass)
    throw BoundError("cia: x1 is not Delta1-side: " + rep.member_x1.describe());
  if (!rep.member_x2.pass)
    throw BoundError("cia: x2 is not Delta2-side: " + rep.member_x2.describe());

  BandedOperator px2 = cia_project(pair, x2);
  rep.psi_fixes_x2 = measured_dist(px2, x2, mode);
  if (rep.psi_fixes_x2 > 1e-12)
    throw BoundError("cia: Psi does not fix the Delta2-side input (defect " +
                     std::to_string(rep.psi_fixes_x2) + ")");

  rep.z = cia_project(pair, x1);
  rep.dist = measured_dist(x1, x2, mode);
  rep.z_minus_x2 = measured_dist(rep.z, x2, mode);
  rep.z_minus_x1 = measured_dist(rep.z, x1, mode);
  rep.member_inter = membership(rep.z, pair.inter, 0.0);

  double slack = 1e-12 + 1e-12 * rep.dist;
  if (!(rep.z_minus_x2 <= rep.dist + slack))
    throw BoundError("cia: ||z - x2|| = " + std::to_string(rep.z_minus_x2) +
                     " exceeds c ||x1 - x2|| = " + std::to_string(rep.dist));
  if (!(rep.z_minus_x1 <= 2.0 * rep.dist + slack))
    throw BoundError("cia: ||z - x1|| = " + std::to_string(rep.z_minus_x1) +
                     " exceeds (c+1) ||x1 - x2|| = " + std::to_string(2.0 * rep.dist));
  if (!rep.member_inter.pass)
    throw BoundError("cia: z leaves the intersection: " + rep.member_inter.describe());
  rep.pass = true;
  return rep;
}

}  // namespace qkt
