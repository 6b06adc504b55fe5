#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "qkt/errors.hpp"

namespace qkt {

using cd = std::complex<double>;

struct Dense {
  int n = 0, m = 0;       // rows, cols
  std::vector<cd> a;      // row-major

  Dense() = default;
  Dense(int rows, int cols) : n(rows), m(cols), a(static_cast<size_t>(rows) * cols, cd(0, 0)) {}

  cd& at(int i, int j) { return a[static_cast<size_t>(i) * m + j]; }
  const cd& at(int i, int j) const { return a[static_cast<size_t>(i) * m + j]; }

  static Dense eye(int n) {
    Dense d(n, n);
    for (int i = 0; i < n; ++i) d.at(i, i) = cd(1, 0);
    return d;
  }

  bool empty() const { return n == 0 || m == 0; }
};

inline Dense operator+(const Dense& x, const Dense& y) {
  if (x.n != y.n || x.m != y.m) throw NumericError("dense add: shape mismatch");
  Dense r = x;
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

inline Dense operator-(const Dense& x, const Dense& y) {
  if (x.n != y.n || x.m != y.m) throw NumericError("dense sub: shape mismatch");
  Dense r = x;
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
  return r;
}

inline Dense operator*(const cd& s, const Dense& x) {
  Dense r = x;
  for (auto& v : r.a) v *= s;
  return r;
}

inline Dense operator*(const Dense& x, const Dense& y) {
  if (x.m != y.n) throw NumericError("dense mul: shape mismatch");
  Dense r(x.n, y.m);
  for (int i = 0; i < x.n; ++i) {
    const cd* xi = &x.a[static_cast<size_t>(i) * x.m];
    cd* ri = &r.a[static_cast<size_t>(i) * y.m];
    for (int k = 0; k < x.m; ++k) {
      const cd f = xi[k];
      if (f.real() == 0.0 && f.imag() == 0.0) continue;
      const cd* yk = &y.a[static_cast<size_t>(k) * y.m];
      for (int j = 0; j < y.m; ++j) ri[j] += f * yk[j];
    }
  }
  return r;
}

inline Dense adjoint(const Dense& x) {
  Dense r(x.m, x.n);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.m; ++j) r.at(j, i) = std::conj(x.at(i, j));
  return r;
}

inline cd trace(const Dense& x) {
  cd t(0, 0);
  for (int i = 0; i < std::min(x.n, x.m); ++i) t += x.at(i, i);
  return t;
}

inline double frobenius(const Dense& x) {
  double s = 0;
  for (const cd& v : x.a) s += std::norm(v);
  return std::sqrt(s);
}

inline double max_abs(const Dense& x) {
  double s = 0;
  for (const cd& v : x.a) s = std::max(s, std::abs(v));
  return s;
}

inline double hermitian_defect(const Dense& x) {
  double s = 0;
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.m; ++j) s = std::max(s, std::abs(x.at(i, j) - std::conj(x.at(j, i))));
  return s;
}

inline Dense kron(const Dense& x, const Dense& y) {
  Dense r(x.n * y.n, x.m * y.m);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.m; ++j) {
      const cd f = x.at(i, j);
      if (f.real() == 0.0 && f.imag() == 0.0) continue;
      for (int k = 0; k < y.n; ++k)
        for (int l = 0; l < y.m; ++l) r.at(i * y.n + k, j * y.m + l) = f * y.at(k, l);
    }
  return r;
}

// Gauss-Jordan inverse with partial pivoting.
inline Dense gauss_inverse(Dense x) {
  if (x.n != x.m) throw NumericError("inverse: not square");
  const int n = x.n;
  Dense inv = Dense::eye(n);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(x.at(col, col));
    for (int r = col + 1; r < n; ++r)
      if (std::abs(x.at(r, col)) > best) {
        best = std::abs(x.at(r, col));
        piv = r;
      }
    if (best == 0.0) throw NumericError("inverse: singular matrix");
    if (piv != col)
      for (int j = 0; j < n; ++j) {
        std::swap(x.at(piv, j), x.at(col, j));
        std::swap(inv.at(piv, j), inv.at(col, j));
      }
    const cd d = x.at(col, col);
    for (int j = 0; j < n; ++j) {
      x.at(col, j) /= d;
      inv.at(col, j) /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const cd f = x.at(r, col);
      if (f.real() == 0.0 && f.imag() == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        x.at(r, j) -= f * x.at(col, j);
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

}  // namespace qkt
