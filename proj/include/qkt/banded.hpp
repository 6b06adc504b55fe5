#pragma once

#include <map>
#include <utility>
#include <vector>

#include "qkt/dense.hpp"
#include "qkt/jacobi.hpp"
#include "qkt/metric_space.hpp"

namespace qkt {

// Finite-propagation operator over a finite metric space: a fiber x fiber
// matrix block per pair of points, plus a constant ("scalar") fiber matrix
// standing for Lambda (x) 1 in the unitalization.  Blocks that are exactly
// zero are never stored, so propagation reads off the stored support.
struct BandedOperator {
  SpacePtr space;
  int fiber = 1;
  Dense scalar;  // fiber x fiber; empty means 0
  std::map<std::pair<int, int>, Dense> blocks;

  static BandedOperator zero(SpacePtr sp, int fiber) {
    BandedOperator a;
    a.space = std::move(sp);
    a.fiber = fiber;
    return a;
  }

  static BandedOperator identity(SpacePtr sp, int fiber) {
    BandedOperator a = zero(std::move(sp), fiber);
    a.scalar = Dense::eye(fiber);
    return a;
  }

  static BandedOperator from_scalar(SpacePtr sp, Dense c) {
    BandedOperator a = zero(std::move(sp), c.n);
    if (c.n != c.m) throw ConfigError("from_scalar: not square");
    a.scalar = std::move(c);
    return a;
  }

  bool has_scalar() const { return !scalar.empty(); }

  void set_block(int p, int q, Dense b) {
    if (b.n != fiber || b.m != fiber) throw ConfigError("set_block: fiber mismatch");
    if (max_abs(b) == 0.0) return;
    blocks[{p, q}] = std::move(b);
  }

  const Dense* get_block(int p, int q) const {
    auto it = blocks.find({p, q});
    return it == blocks.end() ? nullptr : &it->second;
  }

  void prune() {
    for (auto it = blocks.begin(); it != blocks.end();)
      it = (max_abs(it->second) == 0.0) ? blocks.erase(it) : std::next(it);
  }

  Rat propagation() const {
    Rat m(0);
    for (const auto& [pq, b] : blocks)
      if (max_abs(b) != 0.0) m = rat_max(m, space->d(pq.first, pq.second));
    return m;
  }

  // self map with scalar folded into the diagonal blocks (zero scalar part)
  BandedOperator folded() const {
    BandedOperator r = *this;
    if (!has_scalar()) return r;
    for (int p = 0; p < space->n; ++p) {
      auto it = r.blocks.find({p, p});
      if (it == r.blocks.end())
        r.blocks[{p, p}] = scalar;
      else
        it->second = it->second + scalar;
    }
    r.scalar = Dense();
    r.prune();
    return r;
  }

  Dense assemble() const {
    const int n = space->n;
    Dense d(n * fiber, n * fiber);
    if (has_scalar())
      for (int p = 0; p < n; ++p)
        for (int i = 0; i < fiber; ++i)
          for (int j = 0; j < fiber; ++j) d.at(p * fiber + i, p * fiber + j) = scalar.at(i, j);
    for (const auto& [pq, b] : blocks)
      for (int i = 0; i < fiber; ++i)
        for (int j = 0; j < fiber; ++j)
          d.at(pq.first * fiber + i, pq.second * fiber + j) += b.at(i, j);
    return d;
  }
};

inline bool same_space(const BandedOperator& a, const BandedOperator& b) {
  if (a.space == b.space) return true;
  return a.space && b.space && a.space->n == b.space->n && a.space->name == b.space->name;
}

inline void check_compatible(const BandedOperator& a, const BandedOperator& b,
                             const char* what) {
  if (!same_space(a, b)) throw ConfigError(std::string(what) + ": different spaces");
  if (a.fiber != b.fiber) throw ConfigError(std::string(what) + ": fiber mismatch");
}

inline BandedOperator operator+(const BandedOperator& a, const BandedOperator& b) {
  check_compatible(a, b, "add");
  BandedOperator r = a;
  if (b.has_scalar()) r.scalar = r.has_scalar() ? r.scalar + b.scalar : b.scalar;
  for (const auto& [pq, blk] : b.blocks) {
    auto it = r.blocks.find(pq);
    if (it == r.blocks.end())
      r.blocks[pq] = blk;
    else
      it->second = it->second + blk;
  }
  r.prune();
  return r;
}

inline BandedOperator operator-(const BandedOperator& a, const BandedOperator& b) {
  check_compatible(a, b, "sub");
  BandedOperator nb = b;
  if (nb.has_scalar())
    for (auto& v : nb.scalar.a) v = -v;
  for (auto& [pq, blk] : nb.blocks)
    for (auto& v : blk.a) v = -v;
  return a + nb;
}

inline BandedOperator operator*(const cd& s, const BandedOperator& a) {
  BandedOperator r = a;
  if (r.has_scalar())
    for (auto& v : r.scalar.a) v *= s;
  for (auto& [pq, blk] : r.blocks)
    for (auto& v : blk.a) v *= s;
  r.prune();
  return r;
}

inline BandedOperator operator*(const BandedOperator& a, const BandedOperator& b) {
  check_compatible(a, b, "mul");
  BandedOperator r = BandedOperator::zero(a.space, a.fiber);
  if (a.has_scalar() && b.has_scalar()) r.scalar = a.scalar * b.scalar;
  if (a.has_scalar())
    for (const auto& [pq, blk] : b.blocks) r.blocks[pq] = a.scalar * blk;
  if (b.has_scalar())
    for (const auto& [pq, blk] : a.blocks) {
      auto it = r.blocks.find(pq);
      Dense v = blk * b.scalar;
      if (it == r.blocks.end())
        r.blocks[pq] = std::move(v);
      else
        it->second = it->second + v;
    }
  // index b's blocks by row point
  std::map<int, std::vector<std::pair<int, const Dense*>>> brows;
  for (const auto& [pq, blk] : b.blocks) brows[pq.first].push_back({pq.second, &blk});
  for (const auto& [pq, blk] : a.blocks) {
    auto it = brows.find(pq.second);
    if (it == brows.end()) continue;
    for (const auto& [col, bblk] : it->second) {
      Dense v = blk * (*bblk);
      auto rt = r.blocks.find({pq.first, col});
      if (rt == r.blocks.end())
        r.blocks[{pq.first, col}] = std::move(v);
      else
        rt->second = rt->second + v;
    }
  }
  r.prune();
  return r;
}

inline BandedOperator adjoint(const BandedOperator& a) {
  BandedOperator r = BandedOperator::zero(a.space, a.fiber);
  if (a.has_scalar()) r.scalar = adjoint(a.scalar);
  for (const auto& [pq, blk] : a.blocks) r.blocks[{pq.second, pq.first}] = adjoint(blk);
  return r;
}

inline BandedOperator truncate(const BandedOperator& a, const Rat& r) {
  BandedOperator t = a;
  for (auto it = t.blocks.begin(); it != t.blocks.end();)
    it = (t.space->d(it->first.first, it->first.second) > r) ? t.blocks.erase(it)
                                                             : std::next(it);
  return t;
}

// Keep only rows in the given point set.  The scalar part is folded first, so
// row_restrict(a, S) + row_restrict(a, complement S) == a exactly.
inline BandedOperator row_restrict(const BandedOperator& a, const std::vector<char>& rows) {
  BandedOperator f = a.folded();
  for (auto it = f.blocks.begin(); it != f.blocks.end();)
    it = (!rows[it->first.first]) ? f.blocks.erase(it) : std::next(it);
  return f;
}

inline double operator_norm(const BandedOperator& a) { return operator_norm_dense(a.assemble()); }

inline double dist_norm(const BandedOperator& a, const BandedOperator& b) {
  return operator_norm(a - b);
}

inline double frobenius(const BandedOperator& a) { return frobenius(a.assemble()); }

// Schur bound ||a|| <= sqrt(||a||_1 ||a||_inf), computed without assembling.
inline double one_inf_bound(const BandedOperator& a) {
  BandedOperator f = a.folded();
  const int n = f.space->n, fb = f.fiber;
  std::vector<double> row_sum(static_cast<size_t>(n) * fb, 0.0);
  std::vector<double> col_sum(static_cast<size_t>(n) * fb, 0.0);
  for (const auto& [pq, blk] : f.blocks) {
    auto [p, q] = pq;
    for (int i = 0; i < fb; ++i)
      for (int j = 0; j < fb; ++j) {
        double m = std::abs(blk.at(i, j));
        row_sum[static_cast<size_t>(p) * fb + i] += m;
        col_sum[static_cast<size_t>(q) * fb + j] += m;
      }
  }
  double rmax = 0, cmax = 0;
  for (double v : row_sum) rmax = std::max(rmax, v);
  for (double v : col_sum) cmax = std::max(cmax, v);
  return std::sqrt(rmax * cmax);
}

inline cd trace(const BandedOperator& a) {
  cd t(0, 0);
  if (a.has_scalar()) t += static_cast<double>(a.space->n) * trace(a.scalar);
  for (const auto& [pq, blk] : a.blocks)
    if (pq.first == pq.second) t += trace(blk);
  return t;
}

inline bool exact_equal(const BandedOperator& a, const BandedOperator& b) {
  if (!same_space(a, b) || a.fiber != b.fiber) return false;
  Dense da = a.assemble(), db = b.assemble();
  for (size_t i = 0; i < da.a.size(); ++i)
    if (da.a[i] != db.a[i]) return false;
  return true;
}

// fiber-level direct sum: diag(ops[0], ops[1], ...)
inline BandedOperator direct_sum(const std::vector<const BandedOperator*>& ops) {
  if (ops.empty()) throw ConfigError("direct_sum: empty");
  int total = 0;
  for (auto* o : ops) total += o->fiber;
  BandedOperator r = BandedOperator::zero(ops[0]->space, total);
  bool any_scalar = false;
  for (auto* o : ops) any_scalar = any_scalar || o->has_scalar();
  if (any_scalar) r.scalar = Dense(total, total);
  int off = 0;
  for (auto* o : ops) {
    if (!same_space(*ops[0], *o)) throw ConfigError("direct_sum: different spaces");
    if (o->has_scalar())
      for (int i = 0; i < o->fiber; ++i)
        for (int j = 0; j < o->fiber; ++j) r.scalar.at(off + i, off + j) = o->scalar.at(i, j);
    for (const auto& [pq, blk] : o->blocks) {
      auto& tgt = r.blocks[pq];
      if (tgt.empty()) tgt = Dense(total, total);
      for (int i = 0; i < o->fiber; ++i)
        for (int j = 0; j < o->fiber; ++j) tgt.at(off + i, off + j) = blk.at(i, j);
    }
    off += o->fiber;
  }
  r.prune();
  return r;
}

// fiber-level block matrix from an m x m grid of equal-fiber cells
inline BandedOperator block_matrix(const std::vector<std::vector<const BandedOperator*>>& cells) {
  if (cells.empty()) throw ConfigError("block_matrix: empty");
  size_t m = cells.size();
  int f = cells[0][0]->fiber;
  const BandedOperator& ref = *cells[0][0];
  BandedOperator r = BandedOperator::zero(ref.space, static_cast<int>(m) * f);
  bool any_scalar = false;
  for (const auto& row : cells) {
    if (row.size() != m) throw ConfigError("block_matrix: ragged grid");
    for (auto* o : row) {
      if (o->fiber != f) throw ConfigError("block_matrix: mixed fibers");
      if (o != &ref) check_compatible(ref, *o, "block_matrix");
      any_scalar = any_scalar || o->has_scalar();
    }
  }
  if (any_scalar) r.scalar = Dense(r.fiber, r.fiber);
  for (size_t I = 0; I < m; ++I)
    for (size_t J = 0; J < m; ++J) {
      const BandedOperator& o = *cells[I][J];
      int oi = static_cast<int>(I) * f, oj = static_cast<int>(J) * f;
      if (o.has_scalar())
        for (int i = 0; i < f; ++i)
          for (int j = 0; j < f; ++j) r.scalar.at(oi + i, oj + j) = o.scalar.at(i, j);
      for (const auto& [pq, blk] : o.blocks) {
        auto& tgt = r.blocks[pq];
        if (tgt.empty()) tgt = Dense(r.fiber, r.fiber);
        for (int i = 0; i < f; ++i)
          for (int j = 0; j < f; ++j) tgt.at(oi + i, oj + j) = blk.at(i, j);
      }
    }
  r.prune();
  return r;
}

// constant k x k matrix tensored with an operator: fiber becomes k * a.fiber
inline BandedOperator kron_const(const Dense& c, const BandedOperator& a) {
  BandedOperator r = BandedOperator::zero(a.space, c.n * a.fiber);
  if (c.n != c.m) throw ConfigError("kron_const: not square");
  if (a.has_scalar()) r.scalar = kron(c, a.scalar);
  for (const auto& [pq, blk] : a.blocks) r.blocks[pq] = kron(c, blk);
  r.prune();
  return r;
}

// view the operator as a matrix over sub-fiber f and extract entry (i, j)
inline BandedOperator subfiber_block(const BandedOperator& a, int i, int j, int f) {
  if (a.fiber % f != 0) throw ConfigError("subfiber_block: fiber not divisible");
  BandedOperator r = BandedOperator::zero(a.space, f);
  auto cut = [&](const Dense& big) {
    Dense d(f, f);
    for (int u = 0; u < f; ++u)
      for (int v = 0; v < f; ++v) d.at(u, v) = big.at(i * f + u, j * f + v);
    return d;
  };
  if (a.has_scalar()) {
    Dense d = cut(a.scalar);
    if (max_abs(d) != 0.0) r.scalar = std::move(d);
  }
  for (const auto& [pq, blk] : a.blocks) {
    Dense d = cut(blk);
    if (max_abs(d) != 0.0) r.blocks[pq] = std::move(d);
  }
  return r;
}

}  // namespace qkt
