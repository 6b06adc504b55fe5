#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "qkt/mv_pair.hpp"
#include "qkt/quasi.hpp"
#include "qkt/rng.hpp"

namespace qkt {

// ---------------------------------------------------------------------------
// Exactly unitary building blocks.  Instances are assembled from diagonal
// phases and localized plane rotations so that defects, ranks and inverses are
// known in closed form, independent of the machinery under test.

// diag(exp(i scale phase_k)) over the n*fiber slots; propagation 0.
inline BandedOperator phase_diag(const SpacePtr& sp, int fiber,
                                 const std::vector<double>& phases, double scale = 1.0) {
  BandedOperator out = BandedOperator::zero(sp, fiber);
  for (int p = 0; p < sp->n; ++p) {
    Dense blk(fiber, fiber);
    for (int i = 0; i < fiber; ++i) {
      double ph = scale * phases[static_cast<size_t>(p) * fiber + i];
      blk.at(i, i) = cd(std::cos(ph), std::sin(ph));
    }
    out.blocks[{p, p}] = std::move(blk);
  }
  return out;
}

// Plane rotation between slots (p, ip) and (q, iq):
//   cos t on the two diagonals, i sin t across; exactly unitary.
struct RotationSpec {
  int p = 0, ip = 0, q = 0, iq = 0;
  double theta = 0.0;
};

// Product of rotations with pairwise disjoint point supports (one pass);
// exactly unitary, propagation = max d(p, q) over specs with sin != 0.
inline BandedOperator rotations_op(const SpacePtr& sp, int fiber,
                                   const std::vector<RotationSpec>& specs, double scale = 1.0) {
  BandedOperator out = BandedOperator::identity(sp, fiber);
  for (const auto& rs : specs) {
    double c = std::cos(scale * rs.theta), s = std::sin(scale * rs.theta);
    auto& dpp = out.blocks[{rs.p, rs.p}];
    if (dpp.empty()) dpp = Dense(fiber, fiber);
    auto& dqq = out.blocks[{rs.q, rs.q}];
    if (dqq.empty()) dqq = Dense(fiber, fiber);
    dpp.at(rs.ip, rs.ip) = dpp.at(rs.ip, rs.ip) + cd(c - 1.0, 0);
    dqq.at(rs.iq, rs.iq) = dqq.at(rs.iq, rs.iq) + cd(c - 1.0, 0);
    if (s != 0.0) {
      auto& dpq = out.blocks[{rs.p, rs.q}];
      if (dpq.empty()) dpq = Dense(fiber, fiber);
      auto& dqp = out.blocks[{rs.q, rs.p}];
      if (dqp.empty()) dqp = Dense(fiber, fiber);
      dpq.at(rs.ip, rs.iq) = dpq.at(rs.ip, rs.iq) + cd(0, s);
      dqp.at(rs.iq, rs.ip) = dqp.at(rs.iq, rs.ip) + cd(0, s);
    }
  }
  return out;
}

// Pick up to `count` rotations on slot pairs whose points are at distance
// <= reach and pairwise unused, so the product stays a single layer.
inline std::vector<RotationSpec> random_disjoint_rotations(Rng& rng, const FiniteMetricSpace& sp,
                                                           int fiber, const Rat& reach, int count,
                                                           double amp) {
  std::vector<std::pair<int, int>> cand;
  for (int p = 0; p < sp.n; ++p)
    for (int q = p + (fiber >= 2 ? 0 : 1); q < sp.n; ++q)
      if (sp.d(p, q) <= reach) cand.emplace_back(p, q);
  std::vector<char> used(sp.n, 0);
  std::vector<RotationSpec> specs;
  for (int tries = 0; tries < 8 * count && static_cast<int>(specs.size()) < count; ++tries) {
    if (cand.empty()) break;
    auto [p, q] = cand[rng.below(static_cast<int>(cand.size()))];
    if (used[p] || used[q]) continue;
    RotationSpec rs;
    rs.p = p;
    rs.q = q;
    if (p == q) {
      rs.ip = rng.below(fiber);
      rs.iq = rng.below(fiber - 1);
      if (rs.iq >= rs.ip) ++rs.iq;
    } else {
      rs.ip = rng.below(fiber);
      rs.iq = rng.below(fiber);
    }
    rs.theta = amp * (0.25 + 0.75 * rng.u01()) * (rng.coin() ? 1.0 : -1.0);
    used[p] = used[q] = 1;
    specs.push_back(rs);
  }
  return specs;
}

// ---------------------------------------------------------------------------
// eps-r-unitaries with an honest defect of known size:
// u = phases * rotations * (1 + diag(eta)), residual ~ max |(1+eta)^2 - 1|.
inline QuasiElement random_eps_unitary(Rng& rng, const SpacePtr& sp, int fiber, const Rat& r,
                                       double eps, NormMode mode = NormMode::Operator) {
  const int n = sp->n;
  std::vector<double> phases(static_cast<size_t>(n) * fiber);
  for (auto& ph : phases) ph = rng.angle();
  auto specs = random_disjoint_rotations(rng, *sp, fiber, r, std::max(1, n / 3), 0.8);
  BandedOperator u = phase_diag(sp, fiber, phases) * rotations_op(sp, fiber, specs);

  double target = eps * (0.35 + 0.5 * rng.u01());
  BandedOperator stretch = BandedOperator::zero(sp, fiber);
  for (int p = 0; p < n; ++p) {
    Dense blk(fiber, fiber);
    for (int i = 0; i < fiber; ++i) {
      double res = target * (0.2 + 0.8 * rng.u01());
      double factor = std::sqrt(1.0 + (rng.coin() ? res : -res));
      blk.at(i, i) = factor;
    }
    stretch.blocks[{p, p}] = std::move(blk);
  }
  return certify(u * stretch, QuasiElement::Kind::Unitary, eps, r, mode);
}

// ---------------------------------------------------------------------------
// Exactly unitary u with the homotopy u_t (phases and rotation angles scaled
// by 1-t) down to the exact identity; every sample is exactly unitary.
struct UnitaryInstance {
  QuasiElement u;
  HomotopyPath path;  // path.samples.front() == u, back() == 1 exactly
};

inline UnitaryInstance random_unitary_with_path(Rng& rng, const SpacePtr& sp, int fiber,
                                                const Rat& r, double eps, int nsamples,
                                                double phase_amp, int nrot, double rot_amp,
                                                NormMode mode = NormMode::Operator) {
  if (nsamples < 2) throw ConfigError("generator: need at least two samples");
  const int n = sp->n;
  std::vector<double> phases(static_cast<size_t>(n) * fiber);
  for (auto& ph : phases) ph = rng.sym(phase_amp);
  auto specs = random_disjoint_rotations(rng, *sp, fiber, r, nrot, rot_amp);

  UnitaryInstance inst;
  for (int i = 0; i < nsamples; ++i) {
    double scale = 1.0 - static_cast<double>(i) / (nsamples - 1);
    BandedOperator op = scale == 0.0
                            ? BandedOperator::identity(sp, fiber)
                            : phase_diag(sp, fiber, phases, scale) *
                                  rotations_op(sp, fiber, specs, scale);
    inst.path.samples.push_back(certify(op, QuasiElement::Kind::Unitary, eps, r, mode));
  }
  inst.path.measure_steps(mode);
  double mx = 0;
  for (double s : inst.path.steps) mx = std::max(mx, s);
  if (!(mx < eps))
    throw ConfigError("generator: homotopy step " + std::to_string(mx) +
                      " reaches eps; increase samples or shrink amplitudes");
  inst.path.step_bound = std::nextafter(std::max(mx, 1e-300), 2.0);
  inst.path.check();
  inst.u = inst.path.samples.front();
  return inst;
}

// diag(s_t, s_t*) over a path of unitaries: the doubled input for the
// boundary map, running from diag(u, u*) to the identity.
inline HomotopyPath double_path(const HomotopyPath& path, NormMode mode = NormMode::Operator) {
  HomotopyPath out;
  for (const auto& s : path.samples) {
    BandedOperator a = adjoint(s.op);
    BandedOperator d = direct_sum({&s.op, &a});
    out.samples.push_back(certify(d, QuasiElement::Kind::Unitary, s.eps, s.r, mode));
  }
  out.measure_steps(mode);
  double mx = 0;
  for (double s : out.steps) mx = std::max(mx, s);
  out.step_bound = std::nextafter(std::max(mx, 1e-300), 2.0);
  out.check();
  return out;
}

// ---------------------------------------------------------------------------
// eps-r-projections with engineered residual and known kappa0 rank:
// conjugate diag values {0, 1, (1 +- sqrt(1-4 res))/2} by disjoint rotations.
struct ProjectionInstance {
  QuasiElement p;
  int rank = 0;         // exact rank of the nearby true projection
  double residual = 0;  // exact sup |a^2 - a| over the diagonal
};

inline ProjectionInstance random_projection(Rng& rng, const SpacePtr& sp, int fiber, const Rat& r,
                                            double eps, NormMode mode = NormMode::Operator) {
  const int n = sp->n;
  double res = eps * (0.3 + 0.55 * rng.u01());
  double split = std::sqrt(1.0 - 4.0 * res);
  ProjectionInstance inst;
  inst.residual = 0.0;
  BandedOperator d = BandedOperator::zero(sp, fiber);
  for (int p = 0; p < n; ++p) {
    Dense blk(fiber, fiber);
    for (int i = 0; i < fiber; ++i) {
      bool one = rng.coin();
      double a = one ? 1.0 : 0.0;
      if (rng.u01() < 0.4) {
        a = one ? 0.5 * (1.0 + split) : 0.5 * (1.0 - split);
        inst.residual = std::max(inst.residual, std::abs(a * a - a));
      }
      if (one) ++inst.rank;
      blk.at(i, i) = a;
    }
    d.blocks[{p, p}] = std::move(blk);
  }
  Rat half = r / Rat(2);
  auto specs = random_disjoint_rotations(rng, *sp, fiber, half, std::max(1, n / 3), 0.7);
  BandedOperator uu = rotations_op(sp, fiber, specs);
  BandedOperator p_op = uu * d * adjoint(uu);
  p_op = cd(0.5, 0) * (p_op + adjoint(p_op));  // kill floating-point asymmetry
  inst.p = certify(p_op, QuasiElement::Kind::Projection, eps, r, mode);
  return inst;
}

// ---------------------------------------------------------------------------
// eps-r-N-invertibles with an exact inverse witness:
// x = u (1 + diag(delta)), y = (1 + diag(delta))^{-1} u*, N = 2.
struct InvertibleInstance {
  BandedOperator x, y;
  double norm_cap = 2.0;
};

inline InvertibleInstance random_invertible(Rng& rng, const SpacePtr& sp, int fiber,
                                            const Rat& r) {
  const int n = sp->n;
  std::vector<double> phases(static_cast<size_t>(n) * fiber);
  for (auto& ph : phases) ph = rng.angle();
  auto specs = random_disjoint_rotations(rng, *sp, fiber, r, std::max(1, n / 3), 0.9);
  BandedOperator u = phase_diag(sp, fiber, phases) * rotations_op(sp, fiber, specs);

  BandedOperator st = BandedOperator::zero(sp, fiber);
  BandedOperator st_inv = BandedOperator::zero(sp, fiber);
  for (int p = 0; p < n; ++p) {
    Dense blk(fiber, fiber), inv(fiber, fiber);
    for (int i = 0; i < fiber; ++i) {
      double delta = -0.35 + 0.8 * rng.u01();
      blk.at(i, i) = 1.0 + delta;
      inv.at(i, i) = 1.0 / (1.0 + delta);
    }
    st.blocks[{p, p}] = std::move(blk);
    st_inv.blocks[{p, p}] = std::move(inv);
  }
  InvertibleInstance inst;
  inst.x = u * st;
  inst.y = st_inv * adjoint(u);
  return inst;
}

// ---------------------------------------------------------------------------
// Random element supported exactly inside a predicate.
inline BandedOperator random_supported(Rng& rng, const SpacePtr& sp, int fiber,
                                       const SupportPredicate& pred, int nentries, double amp) {
  std::vector<std::pair<int, int>> allowed;
  for (int p = 0; p < sp->n; ++p)
    for (int q = 0; q < sp->n; ++q)
      if (pred.allows(*sp, p, q)) allowed.emplace_back(p, q);
  BandedOperator out = BandedOperator::zero(sp, fiber);
  if (allowed.empty()) return out;
  for (int k = 0; k < nentries; ++k) {
    auto [p, q] = allowed[rng.below(static_cast<int>(allowed.size()))];
    auto& blk = out.blocks[{p, q}];
    if (blk.empty()) blk = Dense(fiber, fiber);
    blk.at(rng.below(fiber), rng.below(fiber)) = cd(rng.sym(amp), rng.sym(amp));
  }
  return out;
}

// Pair (x1, x2) for the intersection approximation: common core in the
// intersection squares plus side-specific perturbations of size ~ delta.
struct CIAInstance {
  BandedOperator x1, x2;
};

inline CIAInstance cia_instance(Rng& rng, const ControlledMVPair& pair, int fiber, double delta) {
  const SpacePtr& sp = pair.space;
  BandedOperator z0 = random_supported(rng, sp, fiber, pair.inter, 2 * sp->n, 1.0);
  BandedOperator e1 = random_supported(rng, sp, fiber, pair.delta1, sp->n, 1.0);
  BandedOperator e2 = random_supported(rng, sp, fiber, pair.delta2, sp->n, 1.0);
  double n1 = operator_norm(e1), n2 = operator_norm(e2);
  CIAInstance inst;
  inst.x1 = n1 > 0 ? z0 + cd(0.45 * delta / n1, 0) * e1 : z0;
  inst.x2 = n2 > 0 ? z0 + cd(0.45 * delta / n2, 0) * e2 : z0;
  return inst;
}

// ---------------------------------------------------------------------------
// Boundary instances: diagonal-phase unitary split as a product of one factor
// supported on the family-1 rows and one on the family-2 rows, with the
// phase-shrink homotopy; every sample is exactly unitary with propagation 0.
struct BoundaryInstance {
  QuasiElement u;        // the product v1 v2 at the base fiber
  HomotopyPath path;     // doubled: diag(u_t, u_t*) down to the identity
  HomotopyPath base;     // undoubled phase-shrink path of u itself
};

inline BoundaryInstance boundary_instance(Rng& rng, const ControlledMVPair& pair, int fiber,
                                          double eps, int nsamples, double phase_amp,
                                          NormMode mode = NormMode::Operator) {
  const SpacePtr& sp = pair.space;
  const int n = sp->n;
  std::vector<double> phases(static_cast<size_t>(n) * fiber, 0.0);
  for (int p = 0; p < n; ++p)
    for (int i = 0; i < fiber; ++i) {
      // v1 carries the family-1 rows, v2 the family-2 rows; u = v1 v2
      phases[static_cast<size_t>(p) * fiber + i] = rng.sym(phase_amp);
    }
  BoundaryInstance inst;
  for (int i = 0; i < nsamples; ++i) {
    double scale = 1.0 - static_cast<double>(i) / (nsamples - 1);
    BandedOperator op = scale == 0.0 ? BandedOperator::identity(sp, fiber)
                                     : phase_diag(sp, fiber, phases, scale);
    inst.base.samples.push_back(certify(op, QuasiElement::Kind::Unitary, eps, Rat(0), mode));
  }
  inst.base.measure_steps(mode);
  double mx = 0;
  for (double s : inst.base.steps) mx = std::max(mx, s);
  if (!(mx < eps))
    throw ConfigError("generator: boundary homotopy step " + std::to_string(mx) +
                      " reaches eps; increase samples or shrink amplitudes");
  inst.base.step_bound = std::nextafter(std::max(mx, 1e-300), 2.0);
  inst.base.check();
  inst.u = inst.base.samples.front();
  inst.path = double_path(inst.base, mode);
  return inst;
}

}  // namespace qkt
