#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "qkt/quasi.hpp"

namespace qkt {

// Coefficients of (1+s)^{-1/2} = sum a_k s^k:  a_0 = 1, a_k = -a_{k-1}(2k-1)/(2k).
// On s in [-1, 0] every term a_k s^k is nonnegative, so partial sums increase
// towards the limit and sum_k |a_k| q^k = (1-q)^{-1/2} gives a closed-form tail.
inline std::vector<double> series_coefficients(int n) {
  std::vector<double> a(static_cast<size_t>(n) + 1);
  a[0] = 1.0;
  for (int k = 1; k <= n; ++k) a[k] = -a[k - 1] * (2.0 * k - 1.0) / (2.0 * k);
  return a;
}

inline double series_tail(int l, double q) {
  if (!(q >= 0.0 && q < 1.0)) throw ConfigError("series_tail: need q in [0,1)");
  double limit = 1.0 / std::sqrt(1.0 - q);
  double partial = 0.0, a = 1.0, p = 1.0;
  for (int k = 0; k <= l; ++k) {
    partial += std::abs(a) * p;
    a *= -(2.0 * k + 1.0) / (2.0 * k + 2.0);
    p *= q;
  }
  return std::max(0.0, limit - partial);
}

// Smallest even degree whose closed-form tail at q is below `bound`.
inline int choose_degree(double q, double bound, int cap = 10000) {
  if (!(bound > 0.0)) throw ConfigError("choose_degree: bound must be positive");
  double limit = 1.0 / std::sqrt(1.0 - q);
  double partial = 0.0, a = 1.0, p = 1.0;
  for (int k = 0; k <= cap; ++k) {
    partial += std::abs(a) * p;
    a *= -(2.0 * k + 1.0) / (2.0 * k + 2.0);
    p *= q;
    if (k % 2 == 0 && limit - partial < bound) return k;
  }
  throw NumericError("choose_degree: degree cap " + std::to_string(cap) +
                     " reached (tail " + std::to_string(limit - partial) + ")");
}

struct PolarOptions {
  std::optional<double> t0, t1;  // override the default spectral window
  int degree_cap = 10000;
  bool oracle_check = true;          // compare Q(x*x) against the exact inverse sqrt
  bool measure_abs = true;           // report || |x| - h ||
  NormMode mode = NormMode::Operator;
};

struct PolarResult {
  QuasiElement u;          // almost unitary, propagation <= (2 deg + 1) r
  BandedOperator h;        // almost positive part x*x Q(x*x)
  std::vector<double> coef_s;  // polynomial in s = (t - t1)/t1, constant adjusted so Q(1) = 1
  double t0 = 0, t1 = 0;
  double shift_c0 = 0;     // the Q(1)=1 adjustment added to the constant term
  int degree = 0;
  double norm_x = 0, norm_y = 0, inv_defect = 0;
  double x_minus_uh = 0;       // measured
  double x_minus_uh_bound = 0; // engine bound  ||x|| N eps (2 + N eps)
  double abs_x_minus_h = -1;   // measured when requested
  double q_vs_invsqrt = -1;    // measured when oracle_check
  double q_at_one = 0;         // Q(1), must be 1 within 1e-12
  double prescale_g = 1.0;     // set when the input was normalized first
};

// Polynomial polar decomposition of an eps-r-N-invertible x: u = x Q(x*x),
// h = x*x Q(x*x), where Q is a truncated binomial series for the inverse
// square root on the certified spectral window.
inline PolarResult polar_decompose(const BandedOperator& x, double eps, const Rat& r, double N,
                                   const std::optional<BandedOperator>& y_supplied = std::nullopt,
                                   PolarOptions opts = {}) {
  if (!(eps > 0.0 && eps < 0.25)) throw ConfigError("polar: eps must lie in (0, 1/4)");
  if (!(N >= 1.0)) throw ConfigError("polar: need N >= 1");
  if (x.propagation() > r)
    throw BoundError("polar: propagation " + x.propagation().str() + " exceeds r = " + r.str());

  PolarResult res;
  Dense xd = x.assemble();
  res.norm_x = operator_norm_dense(xd);
  if (!(res.norm_x <= N * (1.0 + 1e-12)))
    throw BoundError("polar: ||x|| = " + std::to_string(res.norm_x) + " exceeds N = " +
                     std::to_string(N));
  BandedOperator y = y_supplied ? *y_supplied
                                : sparsify(gauss_inverse(xd), x.space, x.fiber);
  Dense yd = y.assemble();
  res.norm_y = operator_norm_dense(yd);
  if (!(res.norm_y <= N * (1.0 + 1e-12)))
    throw BoundError("polar: ||y|| = " + std::to_string(res.norm_y) + " exceeds N = " +
                     std::to_string(N));
  Dense eyeN = Dense::eye(xd.n);
  res.inv_defect = std::max(measured_norm(xd * yd - eyeN, opts.mode),
                            measured_norm(yd * xd - eyeN, opts.mode));
  if (!(res.inv_defect < eps))
    throw BoundError("polar: max(||xy-1||, ||yx-1||) = " + std::to_string(res.inv_defect) +
                     " is not below eps = " + std::to_string(eps));

  // spectral window: spec(x*x) in [ (1-defect)^2 / ||y||^2 , ||x||^2 ]
  double lam_min_cert = std::pow(1.0 - res.inv_defect, 2) / (res.norm_y * res.norm_y);
  double lam_max_cert = res.norm_x * res.norm_x;
  res.t0 = opts.t0 ? *opts.t0 : 1.0 / (8.0 * N * N);
  res.t1 = opts.t1 ? *opts.t1 : 2.0 * std::max(N * N, 1.0);
  if (!(res.t0 > 0.0 && res.t0 <= 1.0))
    throw ConfigError("polar: t0 must lie in (0, 1]");
  if (res.t0 > lam_min_cert * (1.0 + 1e-9))
    throw BoundError("polar: t0 = " + std::to_string(res.t0) +
                     " exceeds the certified spectral floor " + std::to_string(lam_min_cert));
  if (res.t1 < lam_max_cert * (1.0 - 1e-9))
    throw BoundError("polar: t1 = " + std::to_string(res.t1) +
                     " is below the certified spectral ceiling " + std::to_string(lam_max_cert));

  double qhat = 1.0 - res.t0 / res.t1;
  double tail_goal = 0.5 * eps * std::min(std::sqrt(res.t1), 1.0);
  res.degree = choose_degree(qhat, tail_goal, opts.degree_cap);
  std::vector<double> a = series_coefficients(res.degree);

  // partial sums stay above 1/2 on the whole window (all terms of the series
  // are nonnegative for s <= 0, so this is a grid-checked sanity invariant)
  for (int g = 0; g <= 64; ++g) {
    double s = -qhat * g / 64.0;
    double val = 0.0, p = 1.0;
    for (int k = 0; k <= res.degree; ++k) {
      val += a[k] * p;
      p *= s;
    }
    if (!(val >= 0.5))
      throw NumericError("polar: partial sum " + std::to_string(val) + " below 1/2 on window");
  }

  double rt1 = std::sqrt(res.t1);
  res.coef_s.resize(a.size());
  for (size_t k = 0; k < a.size(); ++k) res.coef_s[k] = a[k] / rt1;
  // adjust the constant term so that Q(1) = 1 exactly
  double s1 = (1.0 - res.t1) / res.t1;
  double q1 = 0.0, p = 1.0;
  for (size_t k = 0; k < res.coef_s.size(); ++k) {
    q1 += res.coef_s[k] * p;
    p *= s1;
  }
  res.shift_c0 = 1.0 - q1;
  res.coef_s[0] += res.shift_c0;
  {
    double check = 0.0, pp = 1.0;
    for (size_t k = 0; k < res.coef_s.size(); ++k) {
      check += res.coef_s[k] * pp;
      pp *= s1;
    }
    res.q_at_one = check;
    if (std::abs(check - 1.0) > 1e-12)
      throw NumericError("polar: Q(1) normalization failed");
  }

  BandedOperator H = adjoint(x) * x;
  Dense Hd = H.assemble();
  Dense Qd = poly_eval_shifted(Hd, res.coef_s, res.t1);
  BandedOperator Qop = sparsify(Qd, x.space, x.fiber);

  BandedOperator u = x * Qop;
  Rat prop_cap = Rat(2 * res.degree + 1) * r;
  if (u.propagation() > prop_cap)
    throw NumericError("polar: propagation exceeded (2 deg + 1) r");

  Dense ud = u.assemble();
  Dense hd = Hd * Qd;
  for (int i = 0; i < hd.n; ++i)
    for (int j = i; j < hd.n; ++j) {
      cd v = 0.5 * (hd.at(i, j) + std::conj(hd.at(j, i)));
      hd.at(i, j) = v;
      hd.at(j, i) = std::conj(v);
    }
  res.h = sparsify(hd, x.space, x.fiber);

  res.x_minus_uh = measured_norm(xd - ud * hd, opts.mode);
  res.x_minus_uh_bound = res.norm_x * N * eps * (2.0 + N * eps);
  if (!(res.x_minus_uh <= res.x_minus_uh_bound))
    throw BoundError("polar: ||x - uh|| = " + std::to_string(res.x_minus_uh) +
                     " exceeds the engine bound " + std::to_string(res.x_minus_uh_bound));

  if (opts.oracle_check) {
    res.q_vs_invsqrt = operator_norm_dense(Qd - inv_sqrt_psd(Hd));
    if (!(res.q_vs_invsqrt < eps))
      throw BoundError("polar: ||Q(x*x) - (x*x)^{-1/2}|| = " + std::to_string(res.q_vs_invsqrt) +
                       " is not below eps");
  }
  if (opts.measure_abs) res.abs_x_minus_h = operator_norm_dense(sqrt_psd(Hd) - hd);

  double res_u = std::max(measured_norm(adjoint(ud) * ud - Dense::eye(ud.n), opts.mode),
                          measured_norm(ud * adjoint(ud) - Dense::eye(ud.n), opts.mode));
  if (!(res_u < 0.25))
    throw BoundError("polar: u is not an almost unitary (residual " + std::to_string(res_u) +
                     ")");
  double eps_u = std::min(std::max(res_u * (1.0 + 1e-9) + 1e-15, 1e-15), 0.2499999);
  res.u = certify(u, QuasiElement::Kind::Unitary, eps_u, prop_cap, opts.mode);
  return res;
}

}  // namespace qkt
