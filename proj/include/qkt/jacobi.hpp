#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qkt/dense.hpp"
#include "qkt/errors.hpp"

namespace qkt {

// Cyclic-by-rows Jacobi eigensolver for complex Hermitian matrices, with a
// per-element skip threshold so late sweeps only touch surviving entries.
// This is the library's only spectral routine: operator norms, spectral
// projections and inverse square roots all reduce to it.  Deterministic by
// construction (fixed rotation order, no randomized starts).
struct EigResult {
  std::vector<double> values;  // ascending
  Dense vectors;               // columns; empty unless requested
  int sweeps = 0;
};

inline EigResult jacobi_eigen(Dense h, bool want_vectors, double rel_tol = 1e-13,
                              int max_sweeps = 100) {
  if (h.n != h.m) throw NumericError("jacobi: not square");
  const int n = h.n;
  EigResult res;
  if (n == 0) return res;
  if (hermitian_defect(h) > 1e-10 * std::max(1.0, max_abs(h)))
    throw NumericError("jacobi: input is not Hermitian");
  // enforce exact Hermitian symmetry so rotations stay consistent
  for (int i = 0; i < n; ++i) {
    h.at(i, i) = cd(h.at(i, i).real(), 0.0);
    for (int j = i + 1; j < n; ++j) h.at(j, i) = std::conj(h.at(i, j));
  }
  Dense v;
  if (want_vectors) v = Dense::eye(n);

  double base = frobenius(h);
  if (base == 0.0) {
    res.values.assign(n, 0.0);
    if (want_vectors) res.vectors = std::move(v);
    return res;
  }
  const double goal = rel_tol * base;
  const double elem_thresh = goal / n;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += std::norm(h.at(i, j));
    off = std::sqrt(2.0 * off);
    res.sweeps = sweep;
    if (off <= goal) break;
    if (sweep == max_sweeps - 1) throw NumericError("jacobi: no convergence");

    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const cd apq = h.at(p, q);
        const double beta = std::abs(apq);
        if (beta <= elem_thresh) continue;
        const double app = h.at(p, p).real();
        const double aqq = h.at(q, q).real();
        const cd phase = apq / beta;
        const double tau = (aqq - app) / (2.0 * beta);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::hypot(1.0, tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cd jpp = phase * c, jpq = phase * s;

        // H <- J* H J  with J = I except J(p,p)=jpp, J(p,q)=jpq, J(q,p)=-s, J(q,q)=c
        for (int i = 0; i < n; ++i) {
          const cd hip = h.at(i, p), hiq = h.at(i, q);
          h.at(i, p) = jpp * hip - s * hiq;
          h.at(i, q) = jpq * hip + c * hiq;
        }
        for (int j = 0; j < n; ++j) {
          const cd hpj = h.at(p, j), hqj = h.at(q, j);
          h.at(p, j) = std::conj(jpp) * hpj - s * hqj;
          h.at(q, j) = std::conj(jpq) * hpj + c * hqj;
        }
        h.at(p, q) = cd(0, 0);
        h.at(q, p) = cd(0, 0);
        h.at(p, p) = cd(h.at(p, p).real(), 0.0);
        h.at(q, q) = cd(h.at(q, q).real(), 0.0);

        if (want_vectors)
          for (int i = 0; i < n; ++i) {
            const cd vip = v.at(i, p), viq = v.at(i, q);
            v.at(i, p) = jpp * vip - s * viq;
            v.at(i, q) = jpq * vip + c * viq;
          }
      }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = h.at(i, i).real();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return diag[a] < diag[b]; });
  res.values.resize(n);
  for (int i = 0; i < n; ++i) res.values[i] = diag[order[i]];
  if (want_vectors) {
    res.vectors = Dense(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) res.vectors.at(i, j) = v.at(i, order[j]);
  }
  return res;
}

inline double hermitian_norm(const Dense& h) {
  if (h.n == 0) return 0.0;
  EigResult e = jacobi_eigen(h, false);
  return std::max(std::abs(e.values.front()), std::abs(e.values.back()));
}

// Operator (spectral) norm of a general square matrix via the Hermitian form
// x*x; Hermitian inputs take the direct route.  Relative accuracy tracks the
// Jacobi tolerance (<= 1e-8 comfortably).
inline double operator_norm_dense(const Dense& x) {
  if (x.n == 0 || x.m == 0) return 0.0;
  if (x.n == x.m && hermitian_defect(x) <= 1e-13 * std::max(1.0, max_abs(x)))
    return hermitian_norm(x);
  return std::sqrt(std::max(0.0, jacobi_eigen(adjoint(x) * x, false).values.back()));
}

inline Dense sqrt_psd(const Dense& h, double floor = 0.0) {
  EigResult e = jacobi_eigen(h, true);
  Dense r(h.n, h.n);
  for (int k = 0; k < h.n; ++k) {
    double lam = e.values[k];
    if (lam < -1e-10) throw NumericError("sqrt_psd: negative spectrum");
    double root = std::sqrt(std::max(lam, floor));
    for (int i = 0; i < h.n; ++i)
      for (int j = 0; j < h.n; ++j)
        r.at(i, j) += root * e.vectors.at(i, k) * std::conj(e.vectors.at(j, k));
  }
  return r;
}

inline Dense inv_sqrt_psd(const Dense& h) {
  EigResult e = jacobi_eigen(h, true);
  Dense r(h.n, h.n);
  for (int k = 0; k < h.n; ++k) {
    double lam = e.values[k];
    if (lam <= 0.0) throw NumericError("inv_sqrt_psd: spectrum not positive");
    double root = 1.0 / std::sqrt(lam);
    for (int i = 0; i < h.n; ++i)
      for (int j = 0; j < h.n; ++j)
        r.at(i, j) += root * e.vectors.at(i, k) * std::conj(e.vectors.at(j, k));
  }
  return r;
}

// Paterson-Stockmeyer evaluation of sum_k coef[k] * S^k with S = (H - t1)/t1.
// Zero structure is preserved exactly: products and sums of banded matrices
// never create nonzero entries outside the accumulated band.
inline Dense poly_eval_shifted(const Dense& h, const std::vector<double>& coef, double t1) {
  const int n = h.n;
  const int l = static_cast<int>(coef.size()) - 1;
  Dense s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s.at(i, j) = (h.at(i, j) - (i == j ? cd(t1, 0) : cd(0, 0))) / t1;
  if (l <= 0) {
    Dense r(n, n);
    if (l == 0)
      for (int i = 0; i < n; ++i) r.at(i, i) = coef[0];
    return r;
  }
  int block = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(l + 1)))));
  std::vector<Dense> pw(block + 1);
  pw[0] = Dense::eye(n);
  pw[1] = s;
  for (int k = 2; k <= block; ++k) pw[k] = pw[k - 1] * s;

  const int nblocks = (l + block) / block;  // ceil((l+1)/block)
  Dense acc;
  for (int b = nblocks - 1; b >= 0; --b) {
    Dense part(n, n);
    for (int i = 0; i < block; ++i) {
      int k = b * block + i;
      if (k > l) break;
      if (coef[k] == 0.0) continue;
      for (size_t idx = 0; idx < part.a.size(); ++idx) part.a[idx] += coef[k] * pw[i].a[idx];
    }
    if (b == nblocks - 1)
      acc = std::move(part);
    else
      acc = acc * pw[block] + part;
  }
  return acc;
}

}  // namespace qkt
