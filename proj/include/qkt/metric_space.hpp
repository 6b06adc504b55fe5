#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "qkt/errors.hpp"
#include "qkt/rational.hpp"

namespace qkt {

struct FiniteMetricSpace {
  std::string name;             // e.g. "path(10)", used when serializing instances
  int n = 0;
  std::vector<Rat> dist;        // row-major n*n, exact

  const Rat& d(int i, int j) const { return dist[static_cast<size_t>(i) * n + j]; }
  Rat& d(int i, int j) { return dist[static_cast<size_t>(i) * n + j]; }

  Rat diameter() const {
    Rat m(0);
    for (const Rat& x : dist) m = rat_max(m, x);
    return m;
  }

  void validate() const {
    if (n <= 0 || dist.size() != static_cast<size_t>(n) * n)
      throw ConfigError("metric space: bad dimensions");
    for (int i = 0; i < n; ++i) {
      if (d(i, i) != Rat(0)) throw ConfigError("metric space: nonzero self-distance");
      for (int j = 0; j < n; ++j) {
        if (d(i, j) != d(j, i)) throw ConfigError("metric space: asymmetric distance");
        if (i != j && !(d(i, j) > Rat(0))) throw ConfigError("metric space: non-positive distance");
      }
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          if (d(i, k) > d(i, j) + d(j, k))
            throw ConfigError("metric space: triangle inequality fails");
  }
};

using SpacePtr = std::shared_ptr<const FiniteMetricSpace>;

inline SpacePtr make_path(int n) {
  if (n < 1) throw ConfigError("path: need n >= 1");
  auto s = std::make_shared<FiniteMetricSpace>();
  s->name = "path(" + std::to_string(n) + ")";
  s->n = n;
  s->dist.assign(static_cast<size_t>(n) * n, Rat(0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s->d(i, j) = Rat(i > j ? i - j : j - i);
  return s;
}

inline SpacePtr make_cycle(int n) {
  if (n < 3) throw ConfigError("cycle: need n >= 3");
  auto s = std::make_shared<FiniteMetricSpace>();
  s->name = "cycle(" + std::to_string(n) + ")";
  s->n = n;
  s->dist.assign(static_cast<size_t>(n) * n, Rat(0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      int a = i > j ? i - j : j - i;
      s->d(i, j) = Rat(std::min(a, n - a));
    }
  return s;
}

inline SpacePtr make_grid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ConfigError("grid: need positive sides");
  auto s = std::make_shared<FiniteMetricSpace>();
  s->name = "grid(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
  s->n = rows * cols;
  s->dist.assign(static_cast<size_t>(s->n) * s->n, Rat(0));
  for (int i = 0; i < s->n; ++i)
    for (int j = 0; j < s->n; ++j) {
      int r1 = i / cols, c1 = i % cols, r2 = j / cols, c2 = j % cols;
      s->d(i, j) = Rat(std::abs(r1 - r2) + std::abs(c1 - c2));
    }
  return s;
}

// Complete binary tree on n nodes (children of i are 2i+1, 2i+2), unit edges.
inline SpacePtr make_tree(int n) {
  if (n < 1) throw ConfigError("tree: need n >= 1");
  auto s = std::make_shared<FiniteMetricSpace>();
  s->name = "tree(" + std::to_string(n) + ")";
  s->n = n;
  s->dist.assign(static_cast<size_t>(n) * n, Rat(0));
  std::vector<std::vector<int>> adj(n);
  for (int i = 1; i < n; ++i) {
    adj[i].push_back((i - 1) / 2);
    adj[(i - 1) / 2].push_back(i);
  }
  for (int src = 0; src < n; ++src) {
    std::vector<int> dd(n, -1);
    std::queue<int> q;
    q.push(src);
    dd[src] = 0;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int w : adj[v])
        if (dd[w] < 0) {
          dd[w] = dd[v] + 1;
          q.push(w);
        }
    }
    for (int j = 0; j < n; ++j) s->d(src, j) = Rat(dd[j]);
  }
  return s;
}

inline SpacePtr generate_space(const std::string& kind, int size, int cols = -1) {
  if (kind == "path") return make_path(size);
  if (kind == "cycle") return make_cycle(size);
  if (kind == "grid") return make_grid(size, cols > 0 ? cols : size);
  if (kind == "tree") return make_tree(size);
  throw ConfigError("unknown space kind: " + kind);
}

// ---------------------------------------------------------------------------

struct CoverFamily {
  std::vector<std::vector<int>> pieces;  // each sorted ascending
  Rat r_disjoint;                        // min gap between distinct pieces (kNoGap if < 2 pieces)
  Rat max_diameter;
};

inline const Rat kNoGap = Rat(1000000007);

inline Rat piece_diameter(const FiniteMetricSpace& sp, const std::vector<int>& piece) {
  Rat m(0);
  for (size_t a = 0; a < piece.size(); ++a)
    for (size_t b = a + 1; b < piece.size(); ++b) m = rat_max(m, sp.d(piece[a], piece[b]));
  return m;
}

inline Rat piece_gap(const FiniteMetricSpace& sp, const std::vector<int>& p,
                     const std::vector<int>& q) {
  Rat m = kNoGap;
  for (int a : p)
    for (int b : q) m = rat_min(m, sp.d(a, b));
  return m;
}

inline Rat point_to_piece(const FiniteMetricSpace& sp, int x, const std::vector<int>& piece) {
  Rat m = kNoGap;
  for (int b : piece) m = rat_min(m, sp.d(x, b));
  return m;
}

inline void fill_family_stats(const FiniteMetricSpace& sp, CoverFamily& f) {
  f.r_disjoint = kNoGap;
  f.max_diameter = Rat(0);
  for (size_t i = 0; i < f.pieces.size(); ++i) {
    f.max_diameter = rat_max(f.max_diameter, piece_diameter(sp, f.pieces[i]));
    for (size_t j = i + 1; j < f.pieces.size(); ++j)
      f.r_disjoint = rat_min(f.r_disjoint, piece_gap(sp, f.pieces[i], f.pieces[j]));
  }
}

// Two-coloring of a space by annuli around a basepoint: family 1 collects the
// shells 2kR <= d <= (2k+1)R, family 2 the shells (2k+1)R <= d <= (2k+2)R.
// Shell boundaries (d an exact multiple of R) land in both families, which is
// what makes the two families jointly cover and individually R-disjoint.
inline std::pair<CoverFamily, CoverFamily> annular_two_coloring(const FiniteMetricSpace& sp,
                                                                int basepoint, const Rat& R) {
  if (basepoint < 0 || basepoint >= sp.n) throw ConfigError("annular: bad basepoint");
  if (!(R > Rat(0))) throw ConfigError("annular: need R > 0");
  CoverFamily f1, f2;
  Rat diam = sp.diameter();
  for (int k = 0; Rat(2 * k) * R <= diam; ++k) {
    std::vector<int> p1, p2;
    Rat lo1 = Rat(2 * k) * R, hi1 = Rat(2 * k + 1) * R;
    Rat lo2 = hi1, hi2 = Rat(2 * k + 2) * R;
    for (int x = 0; x < sp.n; ++x) {
      const Rat& dx = sp.d(basepoint, x);
      if (lo1 <= dx && dx <= hi1) p1.push_back(x);
      if (lo2 <= dx && dx <= hi2) p2.push_back(x);
    }
    if (!p1.empty()) f1.pieces.push_back(std::move(p1));
    if (!p2.empty()) f2.pieces.push_back(std::move(p2));
  }
  fill_family_stats(sp, f1);
  fill_family_stats(sp, f2);
  return {f1, f2};
}

struct CoverCertificate {
  bool pass = true;
  std::string violation;  // empty when pass
  int witness_a = -1, witness_b = -1;
  Rat witness_value;
  struct FamilyStats {
    int pieces = 0;
    Rat min_gap;
    Rat max_diameter;
  };
  std::vector<FamilyStats> families;
};

// Checks that the families jointly cover the space and that each family's
// pieces are pairwise r-disjoint (gap >= r).  The first violation found is
// reported with a concrete witness.
inline CoverCertificate verify_cover(const std::vector<CoverFamily>& families,
                                     const FiniteMetricSpace& sp, const Rat& r) {
  CoverCertificate cert;
  std::vector<char> covered(sp.n, 0);
  for (const auto& f : families)
    for (const auto& piece : f.pieces)
      for (int x : piece) {
        if (x < 0 || x >= sp.n) throw ConfigError("verify_cover: point out of range");
        covered[x] = 1;
      }
  for (int x = 0; x < sp.n; ++x)
    if (!covered[x]) {
      cert.pass = false;
      cert.violation = "point " + std::to_string(x) + " not covered";
      cert.witness_a = x;
      return cert;
    }
  for (size_t fi = 0; fi < families.size(); ++fi) {
    const auto& f = families[fi];
    CoverCertificate::FamilyStats st;
    st.pieces = static_cast<int>(f.pieces.size());
    st.min_gap = kNoGap;
    st.max_diameter = Rat(0);
    for (const auto& piece : f.pieces)
      st.max_diameter = rat_max(st.max_diameter, piece_diameter(sp, piece));
    for (size_t i = 0; i < f.pieces.size(); ++i)
      for (size_t j = i + 1; j < f.pieces.size(); ++j) {
        for (int a : f.pieces[i])
          for (int b : f.pieces[j]) {
            const Rat& dd = sp.d(a, b);
            st.min_gap = rat_min(st.min_gap, dd);
            if (dd < r && cert.pass) {
              cert.pass = false;
              cert.violation = "family " + std::to_string(fi) + " pieces " + std::to_string(i) +
                               "," + std::to_string(j) + " are not r-disjoint";
              cert.witness_a = a;
              cert.witness_b = b;
              cert.witness_value = dd;
            }
          }
      }
    cert.families.push_back(st);
    if (!cert.pass) return cert;
  }
  return cert;
}

}  // namespace qkt
