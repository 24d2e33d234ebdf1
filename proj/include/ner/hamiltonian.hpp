#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ner/constants.hpp"
#include "ner/efg.hpp"
#include "ner/spin.hpp"
#include "ner/types.hpp"

namespace ner {

struct NucleusParams {
  SpinQuantum s;
  double q_moment_m2 = 0.0;  // electric quadrupole moment Q
  double gamma_n = 0.0;      // rad/(s T)

  void validate() const {
    if (s.two_s == 1 && q_moment_m2 != 0.0) {
      throw std::invalid_argument(
          "NucleusParams: spin 1/2 carries no quadrupole moment; q_moment_m2 must be 0");
    }
    if (!std::isfinite(q_moment_m2) || !std::isfinite(gamma_n)) {
      throw std::invalid_argument("NucleusParams: parameters must be finite");
    }
  }

  /// Coupling of the dimensionless spin matrices to the field gradient:
  /// e Q / (2S(2S-1) hbar), in rad/s per (V/m^2). Zero for spin 1/2.
  double quad_coupling(const PhysicalConstants& pc = codata()) const {
    validate();
    if (s.two_s == 1) return 0.0;
    const double sv = s.value();
    return pc.e_charge * q_moment_m2 / (2.0 * sv * (2.0 * sv - 1.0) * pc.hbar);
  }
};

struct DriveParams {
  double e_amp = 0.0;      // V/m, oscillating amplitude
  double omega = 0.0;      // rad/s
  double phi = 0.0;        // rad
  double e0_static = 0.0;  // V/m, static z field
  double b0 = 0.0;         // T
  // The integrated drive field carries constant -cos(phi), -sin(phi) offsets;
  // they are dropped by default and kept only for quantifying the approximation.
  bool keep_dc_terms = false;

  void validate() const {
    if (e_amp < 0.0) throw std::invalid_argument("DriveParams: e_amp >= 0 required");
    if (e_amp > 0.0 && !(omega > 0.0)) {
      throw std::invalid_argument("DriveParams: omega > 0 required when driving");
    }
  }
};

/// Time-parameterized Hermitian matrix in angular-frequency units (H/hbar).
/// `breakpoints` lists times where eval is not smooth (integrators align
/// steps to them); `drive_vanishes` flags a model whose transverse drive is
/// identically zero (spin 1/2).
struct HamiltonianModel {
  int dim = 0;
  std::function<Matrix(double)> eval;
  std::vector<double> breakpoints;
  bool drive_vanishes = false;
};

/// Quadrupole coupling to a field-gradient tensor, full symmetric form:
/// -(1/2) (eQ/(2S(2S-1)hbar)) sum_{ab} g(a,b) {s_a, s_b}.
inline Matrix h_quadrupole(const NucleusParams& nucleus, const SpinOperators& ops,
                           const EfgTensor& g, const PhysicalConstants& pc = codata()) {
  nucleus.validate();
  if (ops.s.two_s != nucleus.s.two_s) {
    throw std::invalid_argument("h_quadrupole: spin operators do not match nucleus spin");
  }
  const double qc = nucleus.quad_coupling(pc);
  const int d = ops.s.dim();
  Matrix h = Matrix::Zero(d, d);
  if (qc == 0.0) return h;
  const Matrix* axes[3] = {&ops.sx, &ops.sy, &ops.sz};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (g(a, b) == 0.0) continue;
      h -= 0.5 * qc * g(a, b) * anticommutator(*axes[a], *axes[b]);
    }
  }
  return h;
}

/// Zeeman term plus quadrupole coupling: gamma_n b . s + h_quadrupole.
inline Matrix h_total(const NucleusParams& nucleus, const SpinOperators& ops,
                      const RealVector3& b_field, const EfgTensor& g,
                      const PhysicalConstants& pc = codata()) {
  Matrix h = h_quadrupole(nucleus, ops, g, pc);
  h += nucleus.gamma_n * (b_field.x() * ops.sx + b_field.y() * ops.sy + b_field.z() * ops.sz);
  return h;
}

namespace detail {

/// Shared builder for the resonance Hamiltonians: static diagonal part
/// gamma_n B0 sz + 3 qc c_eff sz^2 plus the rotating transverse drive
/// 3 qc A E [{sx,sz} cos(wt+phi) + {sy,sz} sin(wt+phi)].
inline HamiltonianModel drive_model(const NucleusParams& nucleus, const SpinOperators& ops,
                                    double a_coeff, double c_eff, const DriveParams& drive,
                                    const PhysicalConstants& pc) {
  nucleus.validate();
  drive.validate();
  const double qc = nucleus.quad_coupling(pc);
  const int d = ops.s.dim();
  Matrix h_static = nucleus.gamma_n * drive.b0 * ops.sz + 3.0 * qc * c_eff * ops.sz * ops.sz;
  Matrix op_x = 3.0 * qc * a_coeff * drive.e_amp * anticommutator(ops.sx, ops.sz);
  Matrix op_y = 3.0 * qc * a_coeff * drive.e_amp * anticommutator(ops.sy, ops.sz);

  HamiltonianModel model;
  model.dim = d;
  model.drive_vanishes = (nucleus.s.two_s == 1) || op_x.norm() == 0.0;
  const double omega = drive.omega;
  const double phi = drive.phi;
  const bool keep_dc = drive.keep_dc_terms;
  model.eval = [=](double t) {
    Matrix h = h_static;
    const double cx = std::cos(omega * t + phi) - (keep_dc ? std::cos(phi) : 0.0);
    const double sy = std::sin(omega * t + phi) - (keep_dc ? std::sin(phi) : 0.0);
    h += cx * op_x + sy * op_y;
    return h;
  };
  return model;
}

}  // namespace detail

/// Resonance Hamiltonian for the pure oscillating drive (no static z field).
/// For spin 1/2 the drive operator vanishes identically and the model is
/// flagged drive_vanishes.
inline HamiltonianModel h_ner(const NucleusParams& nucleus, const SpinOperators& ops,
                              const EfgCoefficients& coeffs, const DriveParams& drive,
                              const PhysicalConstants& pc = codata()) {
  if (drive.e0_static != 0.0) {
    throw std::invalid_argument("h_ner: static field not allowed here; use h_single");
  }
  return detail::drive_model(nucleus, ops, coeffs.a, coeffs.c, drive, pc);
}

/// Static-field level Hamiltonian: gamma_n B0 sz + 3 qc (C + B' E0) sz^2,
/// diagonal in the m basis.
inline Matrix h_lqse(const NucleusParams& nucleus, const SpinOperators& ops,
                     const EfgCoefficients& coeffs, double e0, double b0,
                     const PhysicalConstants& pc = codata()) {
  nucleus.validate();
  const double qc = nucleus.quad_coupling(pc);
  return nucleus.gamma_n * b0 * ops.sz +
         3.0 * qc * (coeffs.c + coeffs.b_prime * e0) * ops.sz * ops.sz;
}

/// Combined drive: oscillating transverse drive on top of the static-field
/// levels (C replaced by C + B' E0 in the sz^2 coefficient).
inline HamiltonianModel h_single(const NucleusParams& nucleus, const SpinOperators& ops,
                                 const EfgCoefficients& coeffs, const DriveParams& drive,
                                 const PhysicalConstants& pc = codata()) {
  return detail::drive_model(nucleus, ops, coeffs.a,
                             coeffs.c + coeffs.b_prime * drive.e0_static, drive, pc);
}

/// Level splitting between m = S and m = S-1 under h_lqse:
/// gamma_n B0 + 3 (2S-1) qc (C + B' E0), in rad/s.
inline double resonance_omega_single(const NucleusParams& nucleus, const EfgCoefficients& coeffs,
                                     double e0, double b0,
                                     const PhysicalConstants& pc = codata()) {
  nucleus.validate();
  const double qc = nucleus.quad_coupling(pc);
  return nucleus.gamma_n * b0 +
         3.0 * (nucleus.s.two_s - 1.0) * qc * (coeffs.c + coeffs.b_prime * e0);
}

/// Piecewise-constant scalar schedule: value(t) on consecutive segments from
/// t = 0, zero after the last segment.
struct PiecewiseConstant {
  struct Segment {
    double duration = 0.0;
    double value = 0.0;
  };
  std::vector<Segment> segments;

  void validate() const {
    for (const auto& seg : segments) {
      if (!(seg.duration >= 0.0) || !std::isfinite(seg.value)) {
        throw std::invalid_argument("PiecewiseConstant: bad segment");
      }
    }
  }

  double value_at(double t) const {
    double t0 = 0.0;
    for (const auto& seg : segments) {
      if (t >= t0 && t < t0 + seg.duration) return seg.value;
      t0 += seg.duration;
    }
    return 0.0;
  }

  /// Exact integral of the schedule over [0, t].
  double integral(double t) const {
    double t0 = 0.0, acc = 0.0;
    for (const auto& seg : segments) {
      if (t <= t0) break;
      acc += seg.value * (std::min(t, t0 + seg.duration) - t0);
      t0 += seg.duration;
    }
    return acc;
  }

  std::vector<double> edges() const {
    std::vector<double> e;
    double t0 = 0.0;
    for (const auto& seg : segments) {
      t0 += seg.duration;
      e.push_back(t0);
    }
    return e;
  }

  double total_duration() const {
    double t0 = 0.0;
    for (const auto& seg : segments) t0 += seg.duration;
    return t0;
  }
};

struct TwoQubitParams {
  NucleusParams nucleus1, nucleus2;
  double c1 = 0.0, c2 = 0.0;            // V/m^2
  double b_prime1 = 0.0, b_prime2 = 0.0;  // 1/m
  double e1 = 0.0, e2 = 0.0;            // V/m, static z fields
  PiecewiseConstant j_schedule;         // Hz
  double b0 = 0.0;                      // T

  void validate() const {
    nucleus1.validate();
    nucleus2.validate();
    if (nucleus1.s.two_s != nucleus2.s.two_s) {
      throw std::invalid_argument("TwoQubitParams: both nuclei must share the same spin");
    }
    j_schedule.validate();
  }
};

/// Two-nucleus Hamiltonian with z controls and the secular coupling
/// 2 pi J(t) s1z s2z; diagonal in the product m basis.
inline Matrix h_two(const TwoQubitParams& p, double t, const PhysicalConstants& pc = codata()) {
  p.validate();
  const SpinOperators ops = make_spin_operators(p.nucleus1.s);
  const int d = ops.s.dim();
  const Matrix id = Matrix::Identity(d, d);
  const Matrix sz2 = ops.sz * ops.sz;
  const double qc1 = p.nucleus1.quad_coupling(pc);
  const double qc2 = p.nucleus2.quad_coupling(pc);
  Matrix h1 = p.nucleus1.gamma_n * p.b0 * ops.sz + 3.0 * qc1 * (p.c1 + p.b_prime1 * p.e1) * sz2;
  Matrix h2 = p.nucleus2.gamma_n * p.b0 * ops.sz + 3.0 * qc2 * (p.c2 + p.b_prime2 * p.e2) * sz2;
  const double j = p.j_schedule.value_at(t);
  return two_spin_embed(h1, id) + two_spin_embed(id, h2) +
         2.0 * M_PI * j * two_spin_embed(ops.sz, ops.sz);
}

inline HamiltonianModel h_two_model(const TwoQubitParams& p,
                                    const PhysicalConstants& pc = codata()) {
  p.validate();
  const SpinOperators ops = make_spin_operators(p.nucleus1.s);
  const Matrix h_static = h_two(p, -1.0, pc);  // J(t<0) = 0: static part only
  const Matrix j_op = 2.0 * M_PI * two_spin_embed(ops.sz, ops.sz);
  HamiltonianModel model;
  model.dim = p.nucleus1.s.dim() * p.nucleus2.s.dim();
  model.breakpoints = p.j_schedule.edges();
  const PiecewiseConstant sched = p.j_schedule;
  model.eval = [h_static, j_op, sched](double t) -> Matrix {
    return h_static + sched.value_at(t) * j_op;
  };
  return model;
}

}  // namespace ner
