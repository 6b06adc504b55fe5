#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qkt/banded.hpp"

namespace qkt {

// Doubled-fiber elementary matrices. An operator a of fiber f embeds into
// fiber 2f as the 2x2 block pattern indicated by each constructor; the block
// layout is [ [0,0] [0,1] ; [1,0] [1,1] ] with index = (outer * f + inner).

inline BandedOperator two_by_two(const BandedOperator& a00, const BandedOperator& a01,
                                 const BandedOperator& a10, const BandedOperator& a11) {
  return block_matrix({{&a00, &a01}, {&a10, &a11}});
}

inline BandedOperator elem_X(const BandedOperator& x) {
  BandedOperator one = BandedOperator::identity(x.space, x.fiber);
  BandedOperator zero = BandedOperator::zero(x.space, x.fiber);
  return two_by_two(one, x, zero, one);
}

inline BandedOperator elem_Y(const BandedOperator& y) {
  BandedOperator one = BandedOperator::identity(y.space, y.fiber);
  BandedOperator zero = BandedOperator::zero(y.space, y.fiber);
  return two_by_two(one, zero, y, one);
}

// Z(x,y) = X(x) Y(y) X(-x) Y(-y) in closed form.
inline BandedOperator elem_Z(const BandedOperator& x, const BandedOperator& y) {
  BandedOperator one = BandedOperator::identity(x.space, x.fiber);
  BandedOperator xy = x * y;
  return two_by_two(one + xy + xy * xy, cd(-1) * (xy * x), (y * x) * y, one - y * x);
}

// Z'(x,y) = Y(-y) X(-x) Y(y) X(x) in closed form;  Z(x,y)^{-1} = Z'(-x,-y).
inline BandedOperator elem_Zprime(const BandedOperator& x, const BandedOperator& y) {
  BandedOperator one = BandedOperator::identity(x.space, x.fiber);
  BandedOperator yx = y * x;
  return two_by_two(one - x * y, cd(-1) * ((x * y) * x), (y * x) * y, one + yx + yx * yx);
}

// J = [[0,-1],[1,0]] at the given fiber.
inline BandedOperator elem_J(const SpacePtr& sp, int fiber) {
  BandedOperator one = BandedOperator::identity(sp, fiber);
  BandedOperator zero = BandedOperator::zero(sp, fiber);
  return two_by_two(zero, cd(-1) * one, one, zero);
}

// Witness of an almost unitary u:
//   W(u) = X(u) Y(-u*) X(u) J = [[2u - u u* u,  u u* - 1], [1 - u* u,  u*]],
// which is ||.||-close to diag(u, u*) when u is an eps-unitary.
inline BandedOperator witness(const BandedOperator& u) {
  BandedOperator one = BandedOperator::identity(u.space, u.fiber);
  BandedOperator us = adjoint(u);
  BandedOperator uus = u * us;
  return two_by_two(cd(2) * u - uus * u, uus - one, one - us * u, us);
}

// ---------------------------------------------------------------------------
// Words of elementary factors with tracked inverses, norm bounds and
// primitive counts (number of X/Y moves each factor expands into).

struct WordFactor {
  std::string kind;     // "X", "Y", "Z", "Z'", "const"
  std::string label;
  BandedOperator mat, inv;
  int primitives = 1;
  double norm_bound = 1.0;      // valid upper bound for ||mat||
  double inv_norm_bound = 1.0;  // and for ||inv||
};

inline WordFactor factor_X(const BandedOperator& x, double arg_bound, std::string label = "") {
  WordFactor f;
  f.kind = "X";
  f.label = std::move(label);
  f.mat = elem_X(x);
  f.inv = elem_X(cd(-1) * x);
  f.primitives = 1;
  f.norm_bound = f.inv_norm_bound = 1.0 + arg_bound;
  return f;
}

inline WordFactor factor_Y(const BandedOperator& y, double arg_bound, std::string label = "") {
  WordFactor f;
  f.kind = "Y";
  f.label = std::move(label);
  f.mat = elem_Y(y);
  f.inv = elem_Y(cd(-1) * y);
  f.primitives = 1;
  f.norm_bound = f.inv_norm_bound = 1.0 + arg_bound;
  return f;
}

inline WordFactor factor_Z(const BandedOperator& x, const BandedOperator& y, double bx, double by,
                           std::string label = "") {
  WordFactor f;
  f.kind = "Z";
  f.label = std::move(label);
  f.mat = elem_Z(x, y);
  f.inv = elem_Zprime(cd(-1) * x, cd(-1) * y);
  f.primitives = 4;
  f.norm_bound = f.inv_norm_bound = std::pow(1.0 + bx, 2) * std::pow(1.0 + by, 2);
  return f;
}

inline WordFactor factor_Zprime(const BandedOperator& x, const BandedOperator& y, double bx,
                                double by, std::string label = "") {
  WordFactor f;
  f.kind = "Z'";
  f.label = std::move(label);
  f.mat = elem_Zprime(x, y);
  f.inv = elem_Z(cd(-1) * x, cd(-1) * y);
  f.primitives = 4;
  f.norm_bound = f.inv_norm_bound = std::pow(1.0 + bx, 2) * std::pow(1.0 + by, 2);
  return f;
}

inline WordFactor factor_const(const BandedOperator& c, std::string label = "") {
  WordFactor f;
  f.kind = "const";
  f.label = std::move(label);
  f.mat = c;
  f.inv = adjoint(c);  // constants used here are signed permutations
  f.primitives = 0;
  f.norm_bound = f.inv_norm_bound = 1.0;
  return f;
}

struct Word {
  std::vector<WordFactor> fs;

  void append(WordFactor f) { fs.push_back(std::move(f)); }
  void append(const Word& w) { fs.insert(fs.end(), w.fs.begin(), w.fs.end()); }

  BandedOperator product() const {
    if (fs.empty()) throw ConfigError("word: empty product");
    BandedOperator p = fs.front().mat;
    for (size_t i = 1; i < fs.size(); ++i) p = p * fs[i].mat;
    return p;
  }

  Word inverse() const {
    Word w;
    for (auto it = fs.rbegin(); it != fs.rend(); ++it) {
      WordFactor g = *it;
      std::swap(g.mat, g.inv);
      std::swap(g.norm_bound, g.inv_norm_bound);
      if (g.kind == "Z")
        g.kind = "Z'";
      else if (g.kind == "Z'")
        g.kind = "Z";
      g.label += "^-1";
      w.fs.push_back(std::move(g));
    }
    return w;
  }

  double norm_bound() const {
    double b = 1.0;
    for (const auto& f : fs) b *= f.norm_bound;
    return b;
  }

  int primitives() const {
    int n = 0;
    for (const auto& f : fs) n += f.primitives;
    return n;
  }

  size_t size() const { return fs.size(); }
};

}  // namespace qkt
