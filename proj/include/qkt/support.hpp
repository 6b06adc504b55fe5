#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qkt/banded.hpp"
#include "qkt/metric_space.hpp"

namespace qkt {

// Support predicates for the three subalgebra shapes that occur in the
// decomposition machinery:
//   - Full: no constraint.
//   - Rows: support has rows in a fixed point set and bounded propagation
//     (the ideal-like piece; its membership is not unitalized, so a nonzero
//     scalar part is a violation).
//   - Squares: support inside the union of thickened-piece squares
//     X_i x X_i (unitalized: the scalar part is exempt).
//   - Intersection of two predicates (unitalized iff both are).
struct SupportPredicate {
  enum class Kind { Full, Rows, Squares, Intersection };
  Kind kind = Kind::Full;
  std::string name = "full";
  bool unitalized = true;

  std::vector<char> rows;  // Rows
  Rat prop_bound;          // Rows

  std::vector<std::vector<char>> squares;  // Squares: indicator per thickened piece

  std::shared_ptr<const SupportPredicate> left, right;  // Intersection

  bool allows(const FiniteMetricSpace& sp, int p, int q) const {
    switch (kind) {
      case Kind::Full:
        return true;
      case Kind::Rows:
        return rows[p] && sp.d(p, q) <= prop_bound;
      case Kind::Squares:
        for (const auto& ind : squares)
          if (ind[p] && ind[q]) return true;
        return false;
      case Kind::Intersection:
        return left->allows(sp, p, q) && right->allows(sp, p, q);
    }
    return false;
  }

  static SupportPredicate full() { return SupportPredicate{}; }

  static SupportPredicate row_set(std::vector<char> r, Rat prop, std::string nm) {
    SupportPredicate p;
    p.kind = Kind::Rows;
    p.unitalized = false;
    p.rows = std::move(r);
    p.prop_bound = prop;
    p.name = std::move(nm);
    return p;
  }

  // squares over the pieces of a family, each thickened by `thick`
  static SupportPredicate thickened_squares(const FiniteMetricSpace& sp, const CoverFamily& fam,
                                            const Rat& thick, std::string nm) {
    SupportPredicate p;
    p.kind = Kind::Squares;
    p.unitalized = true;
    p.name = std::move(nm);
    for (const auto& piece : fam.pieces) {
      std::vector<char> ind(sp.n, 0);
      for (int x = 0; x < sp.n; ++x)
        if (point_to_piece(sp, x, piece) <= thick) ind[x] = 1;
      p.squares.push_back(std::move(ind));
    }
    return p;
  }

  static SupportPredicate from_squares(std::vector<std::vector<char>> sq, std::string nm) {
    SupportPredicate p;
    p.kind = Kind::Squares;
    p.unitalized = true;
    p.name = std::move(nm);
    p.squares = std::move(sq);
    return p;
  }

  static SupportPredicate intersect(std::shared_ptr<const SupportPredicate> a,
                                    std::shared_ptr<const SupportPredicate> b) {
    SupportPredicate p;
    p.kind = Kind::Intersection;
    p.unitalized = a->unitalized && b->unitalized;
    p.name = a->name + " ∩ " + b->name;
    p.left = std::move(a);
    p.right = std::move(b);
    return p;
  }
};

struct MembershipReport {
  bool pass = true;
  double worst = 0.0;      // largest offending block norm (or scalar norm)
  int row = -1, col = -1;  // worst offending block; (-1,-1) with scalar_violation
  bool scalar_violation = false;
  std::string predicate;

  std::string describe() const {
    if (pass) return "member of " + predicate;
    if (scalar_violation)
      return "scalar part violates " + predicate + " (norm " + std::to_string(worst) + ")";
    return "block (" + std::to_string(row) + "," + std::to_string(col) + ") violates " +
           predicate + " (norm " + std::to_string(worst) + ")";
  }
};

// Check that all support of `a` outside the predicate is below `tol` in norm.
// The engine's own outputs are exactly supported, so they pass with tol 0;
// the default 1e-10 covers results of floating-point cancellation.
inline MembershipReport membership(const BandedOperator& a, const SupportPredicate& pred,
                                   double tol = 1e-10) {
  MembershipReport rep;
  rep.predicate = pred.name;
  if (!pred.unitalized && a.has_scalar()) {
    double s = operator_norm_dense(a.scalar);
    if (s > tol) {
      rep.pass = false;
      rep.scalar_violation = true;
      rep.worst = s;
      return rep;
    }
  }
  for (const auto& [pq, blk] : a.blocks) {
    if (pred.allows(*a.space, pq.first, pq.second)) continue;
    double s = operator_norm_dense(blk);
    if (s > tol && s > rep.worst) {
      rep.pass = false;
      rep.worst = s;
      rep.row = pq.first;
      rep.col = pq.second;
    }
  }
  return rep;
}

}  // namespace qkt
