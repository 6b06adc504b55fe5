#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qkt/banded.hpp"
#include "qkt/support.hpp"

namespace qkt {

// Norm backend for certification.  Operator is the honest spectral norm
// (Jacobi).  FrobeniusBound and OneInfBound certify against the Frobenius
// norm and the Schur bound sqrt(||.||_1 ||.||_inf); both dominate the
// operator norm, so a passing certificate is still a proof -- they are used
// on instances where a full eigensolve per measurement would dominate the
// runtime.
enum class NormMode { Operator, FrobeniusBound, OneInfBound };

inline double measured_norm(const Dense& d, NormMode mode) {
  switch (mode) {
    case NormMode::Operator: return operator_norm_dense(d);
    case NormMode::FrobeniusBound: return frobenius(d);
    default: break;
  }
  double rmax = 0, cmax = 0;
  for (int i = 0; i < d.n; ++i) {
    double s = 0;
    for (int j = 0; j < d.m; ++j) s += std::abs(d.at(i, j));
    rmax = std::max(rmax, s);
  }
  for (int j = 0; j < d.m; ++j) {
    double s = 0;
    for (int i = 0; i < d.n; ++i) s += std::abs(d.at(i, j));
    cmax = std::max(cmax, s);
  }
  return std::sqrt(rmax * cmax);
}

inline double measured_norm(const BandedOperator& a, NormMode mode) {
  if (mode == NormMode::OneInfBound) return one_inf_bound(a);
  return measured_norm(a.assemble(), mode);
}

inline double measured_dist(const BandedOperator& a, const BandedOperator& b, NormMode mode) {
  return measured_norm(a - b, mode);
}

struct QuasiElement {
  enum class Kind { Projection, Unitary };
  BandedOperator op;
  Kind kind = Kind::Projection;
  double eps = 0.0;
  Rat r;
  double residual = 0.0;       // measured defect
  bool residual_is_bound = false;  // true when certified via Frobenius bound
};

inline const char* kind_name(QuasiElement::Kind k) {
  return k == QuasiElement::Kind::Projection ? "projection" : "unitary";
}

// Certify op as an eps-r-projection or eps-r-unitary.  All inequalities are
// strict; violations throw BoundError naming the inequality and its value.
inline QuasiElement certify(const BandedOperator& op, QuasiElement::Kind kind, double eps,
                            const Rat& r, NormMode mode = NormMode::Operator) {
  if (!(eps > 0.0 && eps < 0.25))
    throw ConfigError("certify: eps must lie in (0, 1/4), got " + std::to_string(eps));
  Rat prop = op.propagation();
  if (prop > r)
    throw BoundError("certify: propagation " + prop.str() + " exceeds r = " + r.str());
  double res = 0.0;
  if (mode == NormMode::OneInfBound) {
    // banded path: never assembles the full matrix
    BandedOperator star = adjoint(op);
    if (kind == QuasiElement::Kind::Projection) {
      double sym = one_inf_bound(op - star);
      if (sym > 1e-12)
        throw BoundError("certify: ||p - p*|| = " + std::to_string(sym) + " exceeds 1e-12");
      res = one_inf_bound(op * op - op);
      if (!(res < eps))
        throw BoundError("certify: ||p^2 - p|| = " + std::to_string(res) +
                         " is not below eps = " + std::to_string(eps));
    } else {
      BandedOperator one = BandedOperator::identity(op.space, op.fiber);
      res = std::max(one_inf_bound(star * op - one), one_inf_bound(op * star - one));
      if (!(res < eps))
        throw BoundError("certify: max(||u*u-1||, ||uu*-1||) = " + std::to_string(res) +
                         " is not below eps = " + std::to_string(eps));
    }
  } else if (kind == QuasiElement::Kind::Projection) {
    Dense d = op.assemble();
    double sym = hermitian_defect(d);
    if (sym > 1e-12)
      throw BoundError("certify: ||p - p*|| = " + std::to_string(sym) + " exceeds 1e-12");
    res = measured_norm(d * d - d, mode);
    if (!(res < eps))
      throw BoundError("certify: ||p^2 - p|| = " + std::to_string(res) +
                       " is not below eps = " + std::to_string(eps));
  } else {
    Dense d = op.assemble();
    Dense du = adjoint(d);
    Dense eyeN = Dense::eye(d.n);
    double r1 = measured_norm(du * d - eyeN, mode);
    double r2 = measured_norm(d * du - eyeN, mode);
    res = std::max(r1, r2);
    if (!(res < eps))
      throw BoundError("certify: max(||u*u-1||, ||uu*-1||) = " + std::to_string(res) +
                       " is not below eps = " + std::to_string(eps));
  }
  QuasiElement e;
  e.op = op;
  e.kind = kind;
  e.eps = eps;
  e.r = r;
  e.residual = res;
  e.residual_is_bound = (mode != NormMode::Operator);
  return e;
}

// Control pair (lambda, h): the rescaling data attached to quantitative
// statements.  The library records measured values; this type carries them
// through reports.
struct ControlPair {
  double lambda = 1.0;
  std::vector<std::pair<double, double>> h;  // (eps, value), non-increasing in eps

  void validate() const {
    if (!(lambda > 1.0)) throw ConfigError("control pair: lambda must exceed 1");
    for (size_t i = 0; i + 1 < h.size(); ++i) {
      if (!(h[i].first < h[i + 1].first)) throw ConfigError("control pair: eps grid not increasing");
      if (h[i].second < h[i + 1].second - 1e-15)
        throw ConfigError("control pair: h must be non-increasing");
    }
  }

  double eval(double eps) const {
    if (h.empty()) return 1.0;
    double v = h.front().second;
    for (const auto& [e, val] : h)
      if (e <= eps) v = val;
    return v;
  }
};

struct HomotopyPath {
  std::vector<QuasiElement> samples;
  double step_bound = 0.0;     // claimed bound on consecutive distances
  std::vector<double> steps;   // measured consecutive distances

  void measure_steps(NormMode mode = NormMode::Operator) {
    steps.clear();
    for (size_t i = 0; i + 1 < samples.size(); ++i)
      steps.push_back(measured_norm(samples[i].op - samples[i + 1].op, mode));
  }

  void check() const {
    if (samples.size() < 2) throw ConfigError("homotopy path: need at least two samples");
    for (const auto& s : samples) {
      if (s.kind != samples[0].kind || s.eps != samples[0].eps || !(s.r == samples[0].r))
        throw ConfigError("homotopy path: samples disagree on (kind, eps, r)");
    }
    if (steps.size() + 1 != samples.size())
      throw ConfigError("homotopy path: steps not measured");
    for (double s : steps)
      if (!(s < step_bound))
        throw BoundError("homotopy path: step " + std::to_string(s) +
                         " is not below the bound " + std::to_string(step_bound));
  }
};

inline HomotopyPath linear_path(const BandedOperator& a, const BandedOperator& b, int nsteps,
                                QuasiElement::Kind kind, double eps, const Rat& r,
                                NormMode mode = NormMode::Operator) {
  HomotopyPath path;
  for (int i = 0; i <= nsteps; ++i) {
    double t = static_cast<double>(i) / nsteps;
    BandedOperator x = (cd(1.0 - t, 0)) * a + (cd(t, 0)) * b;
    path.samples.push_back(certify(x, kind, eps, r, mode));
  }
  path.measure_steps(mode);
  double mx = 0;
  for (double s : path.steps) mx = std::max(mx, s);
  path.step_bound = std::nextafter(std::max(mx, 1e-300), 2.0);
  return path;
}

// --------------------------------------------------------------------------
// kappa0: spectral projection by the cubic fixed-point iteration
// x -> 3x^2 - 2x^3.  Needs ||p^2 - p|| < 1/4 so the spectrum avoids 1/2.

struct Kappa0Result {
  BandedOperator p;          // exact projection (to working precision)
  int rank = 0;              // round(trace)
  int iterations = 0;
  double idempotency = 0.0;  // Frobenius bound on ||p^2 - p|| at exit
  double idempotency_op = -1.0;  // operator norm, if measured
  double distance = -1.0;        // ||p - kappa0(p)||, if measured
};

inline Dense kappa0_dense(Dense h, int* iters_out = nullptr, double tol = 1e-12,
                          int max_iters = 200) {
  if (hermitian_defect(h) > 1e-10)
    throw ConfigError("kappa0: input not self-adjoint");
  // symmetrize so the iteration stays exactly Hermitian
  for (int i = 0; i < h.n; ++i)
    for (int j = i; j < h.n; ++j) {
      cd v = 0.5 * (h.at(i, j) + std::conj(h.at(j, i)));
      h.at(i, j) = v;
      h.at(j, i) = std::conj(v);
    }
  int it = 0;
  for (; it < max_iters; ++it) {
    Dense h2 = h * h;
    if (frobenius(h2 - h) < tol) break;
    // 3 h^2 - 2 h^3 = h^2 (3 - 2h)
    Dense f(h.n, h.n);
    for (int i = 0; i < h.n; ++i)
      for (int j = 0; j < h.n; ++j) f.at(i, j) = (i == j ? cd(3, 0) : cd(0, 0)) - 2.0 * h.at(i, j);
    h = h2 * f;
    for (int i = 0; i < h.n; ++i)
      for (int j = i; j < h.n; ++j) {
        cd v = 0.5 * (h.at(i, j) + std::conj(h.at(j, i)));
        h.at(i, j) = v;
        h.at(j, i) = std::conj(v);
      }
  }
  if (it == max_iters) throw NumericError("kappa0: no convergence within 200 iterations");
  if (iters_out) *iters_out = it;
  return h;
}

inline BandedOperator sparsify(const Dense& d, const SpacePtr& sp, int fiber) {
  BandedOperator r = BandedOperator::zero(sp, fiber);
  for (int p = 0; p < sp->n; ++p)
    for (int q = 0; q < sp->n; ++q) {
      Dense blk(fiber, fiber);
      bool nonzero = false;
      for (int i = 0; i < fiber; ++i)
        for (int j = 0; j < fiber; ++j) {
          cd v = d.at(p * fiber + i, q * fiber + j);
          blk.at(i, j) = v;
          nonzero = nonzero || (v.real() != 0.0 || v.imag() != 0.0);
        }
      if (nonzero) r.blocks[{p, q}] = std::move(blk);
    }
  return r;
}

inline Kappa0Result kappa0(const QuasiElement& p, bool measure_distance = true,
                           bool measure_op_idempotency = false) {
  if (p.kind != QuasiElement::Kind::Projection)
    throw ConfigError("kappa0: expects a projection-kind element");
  Dense d = p.op.assemble();
  double res = hermitian_norm(d * d - d);
  if (!(res < 0.25))
    throw BoundError("kappa0: ||p^2 - p|| = " + std::to_string(res) +
                     " leaves no spectral gap at 1/2");
  Kappa0Result out;
  Dense k = kappa0_dense(d, &out.iterations);
  out.idempotency = frobenius(k * k - k);
  if (measure_op_idempotency) out.idempotency_op = hermitian_norm(k * k - k);
  if (measure_distance) out.distance = hermitian_norm(d - k);
  double tr = trace(k).real();
  out.rank = static_cast<int>(std::lround(tr));
  if (std::abs(tr - out.rank) > 1e-6)
    throw NumericError("kappa0: trace " + std::to_string(tr) + " is not near an integer");
  out.p = sparsify(k, p.op.space, p.op.fiber);
  return out;
}

inline int kappa0_rank(const QuasiElement& p) { return kappa0(p, false, false).rank; }

// difference of kappa0-rank and the reference rank l
inline int rank_class(const QuasiElement& p, int l) { return kappa0_rank(p) - l; }

// --------------------------------------------------------------------------
// Lemma-style moves on almost-projections.

struct PerturbResult {
  QuasiElement q;
  HomotopyPath path;  // linear homotopy p -> q through (5 eps, r)-projections
};

// Replace p by a nearby candidate q_op with propagation <= r; certifies q at
// (5 eps, r) and returns the linear homotopy.
inline PerturbResult perturb_projection(const QuasiElement& p, const BandedOperator& q_op,
                                        const Rat& r, int nsteps = 4,
                                        NormMode mode = NormMode::Operator) {
  if (!(p.eps < 0.05))
    throw ConfigError("perturb_projection: need eps < 1/20 so 5*eps stays below 1/4");
  if (p.op.propagation() > r)
    throw ConfigError("perturb_projection: p does not satisfy the target propagation");
  Dense dq = q_op.assemble();
  if (hermitian_defect(dq) > 1e-12)
    throw BoundError("perturb_projection: candidate is not self-adjoint within 1e-12");
  if (q_op.propagation() > r)
    throw BoundError("perturb_projection: candidate propagation " + q_op.propagation().str() +
                     " exceeds r = " + r.str());
  double delta = operator_norm_dense((p.op - q_op).assemble());
  if (!(delta < p.eps))
    throw BoundError("perturb_projection: ||p - q|| = " + std::to_string(delta) +
                     " is not below eps = " + std::to_string(p.eps));
  PerturbResult out;
  out.path = linear_path(p.op, q_op, nsteps, QuasiElement::Kind::Projection, 5.0 * p.eps, r, mode);
  out.q = out.path.samples.back();
  return out;
}

// --------------------------------------------------------------------------
// Givens-chain representation of a constant unitary: a product of plane
// rotations and diagonal phases, each of which scales smoothly to the
// identity.  Gives exact-unitary homotopies U(t) with U(0)=1, U(1)=U.

struct GivensChain {
  struct Rot {
    int p, q;
    double theta;
    cd s_dir;  // unit modulus direction of the sine entry
  };
  int dim = 0;
  std::vector<Rot> rots;
  std::vector<double> phases;

  Dense at(double t) const {
    Dense u = Dense::eye(dim);
    for (const auto& g : rots) {
      double c = std::cos(t * g.theta), s = std::sin(t * g.theta);
      Dense r = Dense::eye(dim);
      r.at(g.p, g.p) = c;
      r.at(g.q, g.q) = c;
      r.at(g.p, g.q) = s * g.s_dir;
      r.at(g.q, g.p) = -s * std::conj(g.s_dir);
      u = u * r;
    }
    Dense ph = Dense::eye(dim);
    for (int i = 0; i < dim; ++i) ph.at(i, i) = std::exp(cd(0, t * phases[i]));
    return u * ph;
  }

  double total_angle() const {
    double a = 0;
    for (const auto& g : rots) a += std::abs(g.theta);
    for (double p : phases) a += std::abs(p);
    return a;
  }
};

inline GivensChain factor_unitary_givens(const Dense& u_in) {
  if (u_in.n != u_in.m) throw ConfigError("givens: not square");
  Dense u = u_in;
  const int n = u.n;
  GivensChain chain;
  chain.dim = n;
  // Reduce u to diagonal phases by left rotations; record their inverses.
  std::vector<GivensChain::Rot> elims;
  for (int j = 0; j < n; ++j)
    for (int i = j + 1; i < n; ++i) {
      cd a = u.at(j, j), b = u.at(i, j);
      double ab = std::abs(a), bb = std::abs(b);
      if (bb < 1e-300) continue;
      double r = std::hypot(ab, bb);
      double c = ab / r;
      cd s_dir = (ab < 1e-300) ? std::conj(b) / bb : (a / ab) * (std::conj(b) / bb);
      double theta = std::atan2(bb, ab);
      // rows (j, i): row_j <- c row_j + s conj? apply G with entries
      // G(j,j)=c, G(j,i)=s_dir*sin, G(i,j)=-conj(s_dir)*sin, G(i,i)=c
      double s = std::sin(theta);
      for (int col = 0; col < n; ++col) {
        cd xj = u.at(j, col), xi = u.at(i, col);
        u.at(j, col) = c * xj + s * s_dir * xi;
        u.at(i, col) = -s * std::conj(s_dir) * xj + c * xi;
      }
      elims.push_back({j, i, theta, s_dir});
    }
  chain.phases.resize(n);
  for (int i = 0; i < n; ++i) chain.phases[i] = std::arg(u.at(i, i));
  // u_in = (product of G_k^{-1} in reverse) * phases; G^{-1} has angle -theta.
  for (auto it = elims.rbegin(); it != elims.rend(); ++it)
    chain.rots.push_back({it->p, it->q, -it->theta, it->s_dir});
  double err = max_abs(chain.at(1.0) - u_in);
  if (err > 1e-10) throw NumericError("givens: factorization error " + std::to_string(err));
  return chain;
}

// --------------------------------------------------------------------------
// standard_form: rotate the scalar part of an almost-projection to exactly
// diag(I_k, 0) and certify the result at (9 eps, r), together with a sampled
// homotopy staying at the same size.

struct StandardFormResult {
  QuasiElement q;      // scalar part exactly diag(I_k, 0)
  HomotopyPath path;   // from the input to q through (9 eps, r)-projections
  int k = 0;
  double scalar_move = 0.0;  // || D - U Lambda U* ||
};

inline StandardFormResult standard_form(const QuasiElement& q_in, int k,
                                        NormMode mode = NormMode::Operator) {
  if (!(q_in.eps < 1.0 / 36.0))
    throw ConfigError("standard_form: need eps < 1/36 so 9*eps stays below 1/4");
  const int f = q_in.op.fiber;
  if (k < 0 || k > f) throw ConfigError("standard_form: k out of range");
  Dense lambda = q_in.op.has_scalar() ? q_in.op.scalar : Dense(f, f);
  if (hermitian_defect(lambda) > 1e-12)
    throw BoundError("standard_form: scalar part not self-adjoint");
  double lres = operator_norm_dense(lambda * lambda - lambda);
  if (!(lres < 0.25))
    throw BoundError("standard_form: scalar part has no spectral gap (residual " +
                     std::to_string(lres) + ")");
  Dense klam = kappa0_dense(lambda);
  double tr = trace(klam).real();
  int rank = static_cast<int>(std::lround(tr));
  if (rank != k)
    throw BoundError("standard_form: scalar rank " + std::to_string(rank) +
                     " does not match k = " + std::to_string(k));
  Dense D(f, f);
  for (int i = 0; i < k; ++i) D.at(i, i) = cd(1, 0);

  StandardFormResult out;
  out.k = k;
  double already = 0.0;
  for (int i = 0; i < f; ++i)
    for (int j = 0; j < f; ++j) already = std::max(already, std::abs(lambda.at(i, j) - D.at(i, j)));
  double nine = 9.0 * q_in.eps;
  if (already == 0.0) {
    out.q = certify(q_in.op, QuasiElement::Kind::Projection, nine, q_in.r, mode);
    out.path.samples = {out.q, out.q};
    out.path.measure_steps(mode);
    out.path.step_bound = 1e-15;
    return out;
  }

  // unitary sorting kappa0(Lambda) to D: columns = eigenvectors, descending
  EigResult eig = jacobi_eigen(klam, true);
  Dense u(f, f);
  for (int c = 0; c < f; ++c) {
    int src = f - 1 - c;  // descending eigenvalues
    for (int i = 0; i < f; ++i) u.at(c, i) = std::conj(eig.vectors.at(i, src));
  }
  if (operator_norm_dense(u * klam * adjoint(u) - D) > 1e-9)
    throw NumericError("standard_form: eigenvector rotation failed to sort the scalar");

  // q' = U q U* with the scalar replaced by exactly D; the replacement is the
  // constant correction D - U Lambda U*.
  BandedOperator conj_q = BandedOperator::zero(q_in.op.space, f);
  {
    Dense ustar = adjoint(u);
    if (q_in.op.has_scalar()) conj_q.scalar = u * q_in.op.scalar * ustar;
    for (const auto& [pq, blk] : q_in.op.blocks) conj_q.blocks[pq] = u * blk * ustar;
    conj_q.prune();
  }
  out.scalar_move = operator_norm_dense(D - (conj_q.has_scalar() ? conj_q.scalar : Dense(f, f)));
  BandedOperator qprime = conj_q;
  qprime.scalar = D;
  out.q = certify(qprime, QuasiElement::Kind::Projection, nine, q_in.r, mode);

  // homotopy: q -> q + const(kappa0(Lambda) - Lambda) -> rotate -> snap scalar
  BandedOperator qhat = q_in.op;
  qhat.scalar = klam;  // replace scalar by its spectral projection
  HomotopyPath& path = out.path;
  auto push = [&](const BandedOperator& op) {
    path.samples.push_back(certify(op, QuasiElement::Kind::Projection, nine, q_in.r, mode));
  };
  push(q_in.op);
  push(cd(0.5, 0) * (q_in.op + qhat));
  push(qhat);
  GivensChain chain = factor_unitary_givens(u);
  int m = std::max(3, static_cast<int>(std::ceil(chain.total_angle() / 0.4)));
  for (int i = 1; i < m; ++i) {
    double t = static_cast<double>(i) / m;
    Dense ut = chain.at(t);
    Dense ustar = adjoint(ut);
    BandedOperator sample = BandedOperator::zero(q_in.op.space, f);
    sample.scalar = ut * qhat.scalar * ustar;
    for (const auto& [pq, blk] : qhat.blocks) sample.blocks[pq] = ut * blk * ustar;
    sample.prune();
    push(sample);
  }
  path.samples.push_back(out.q);  // endpoint: rotated scalar snapped onto D
  path.measure_steps(mode);
  double mx = 0;
  for (double s : path.steps) mx = std::max(mx, s);
  path.step_bound = std::nextafter(std::max(mx, 1e-300), 2.0);
  path.check();
  return out;
}

// --------------------------------------------------------------------------
// Conjugation homotopy diag(q,0) ~ diag(v* q v, 0) in doubled fiber, by the
// standard rotation trick W_t = diag(v,1) R_t diag(v*,1) R_t^{-1}.

inline HomotopyPath conjugation_path(const QuasiElement& q, const BandedOperator& v,
                                     double cert_eps, int nsteps = 4,
                                     NormMode mode = NormMode::FrobeniusBound) {
  check_compatible(q.op, v, "conjugation_path");
  const int f = q.op.fiber;
  BandedOperator one = BandedOperator::identity(q.op.space, f);
  BandedOperator zero = BandedOperator::zero(q.op.space, f);
  BandedOperator big_q = direct_sum({&q.op, &zero});

  auto w_at = [&](double ang) {
    Dense r2(2, 2);
    r2.at(0, 0) = std::cos(ang);
    r2.at(0, 1) = -std::sin(ang);
    r2.at(1, 0) = std::sin(ang);
    r2.at(1, 1) = std::cos(ang);
    BandedOperator rt = kron_const(r2, one);
    Dense r2i = adjoint(r2);
    BandedOperator rti = kron_const(r2i, one);
    BandedOperator vs = adjoint(v);
    BandedOperator dv = direct_sum({&v, &one});
    BandedOperator dvs = direct_sum({&vs, &one});
    return dv * rt * dvs * rti;
  };

  HomotopyPath path;
  auto push = [&](const BandedOperator& op) {
    path.samples.push_back(
        certify(op, QuasiElement::Kind::Projection, cert_eps, op.propagation(), mode));
  };
  push(big_q);
  // bridge to W_0* diag(q,0) W_0 = diag(vv* q vv*, 0)
  BandedOperator w0 = w_at(0.0);
  BandedOperator p0 = adjoint(w0) * big_q * w0;
  push(cd(0.5, 0) * (big_q + p0));
  for (int i = 0; i <= nsteps; ++i) {
    double ang = (3.14159265358979323846 / 2.0) * i / nsteps;
    BandedOperator wt = w_at(ang);
    push(adjoint(wt) * big_q * wt);
  }
  path.measure_steps(mode);
  double mx = 0;
  for (double s : path.steps) mx = std::max(mx, s);
  path.step_bound = std::nextafter(std::max(mx, 1e-300), 2.0);
  // uniform (kind, eps, r): renormalize r to the max over samples
  Rat rmax(0);
  for (auto& s : path.samples) rmax = rat_max(rmax, s.r);
  for (auto& s : path.samples) s.r = rmax;
  path.check();
  return path;
}

}  // namespace qkt
