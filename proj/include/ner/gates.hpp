#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ner/dynamics.hpp"
#include "ner/hamiltonian.hpp"
#include "ner/types.hpp"

namespace ner {

/// One resonant transverse pulse: amplitude, axis phase, carrier frequency
/// and duration.
struct PulseSpec {
  double e_amp = 0.0;    // V/m
  double phi = 0.0;      // rad, rotation axis in the x-y plane
  double omega = 0.0;    // rad/s
  double duration = 0.0; // s
};

/// Control schedule for one- and two-qubit gates. Segments are applied in
/// list order; drive phases are referenced to absolute time, so segment
/// boundaries need no extra phase bookkeeping.
struct GateSchedule {
  enum class Kind { kDrive1, kDrive2, kZShift1, kZShift2, kJWindow };
  struct Segment {
    Kind kind = Kind::kJWindow;
    double duration = 0.0;  // s
    double e1 = 0.0;        // V/m, static z field on nucleus 1
    double e2 = 0.0;        // V/m, static z field on nucleus 2
    double j_hz = 0.0;      // Hz, constant over the segment (J windows only)
    PulseSpec pulse;        // drive segments only
    double a_per_m = 0.0;   // drive coefficient assumed by the pulse
  };
  std::vector<Segment> segments;

  double total_duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }
};

struct GateFidelityReport {
  double fidelity = 0.0;
  double leakage = 0.0;
  std::string target_name;
};

inline double wrap_angle(double x) {
  double y = std::fmod(x, 2.0 * M_PI);
  if (y <= -M_PI) y += 2.0 * M_PI;
  if (y > M_PI) y -= 2.0 * M_PI;
  return y;
}

/// Resonant pulse realizing a rotation by `angle` about the axis `axis_phi`
/// in the qubit subspace {S, S-1}. Angles are normalized to [0, 2pi); a
/// negative Rabi rate (negative Q or A) is absorbed into the duration.
inline PulseSpec pulse_for_rotation(const NucleusParams& nucleus, const EfgCoefficients& coeffs,
                                    double e_amp, double axis_phi, double angle, double b0,
                                    double e0_static = 0.0,
                                    const PhysicalConstants& pc = codata()) {
  nucleus.validate();
  if (nucleus.s.two_s < 2) {
    throw std::invalid_argument("pulse_for_rotation: no transverse drive exists for spin 1/2");
  }
  if (!(e_amp > 0.0)) throw std::invalid_argument("pulse_for_rotation: e_amp > 0 required");
  const double rate = rabi_rate(nucleus, coeffs, e_amp, pc);
  if (rate == 0.0) {
    throw std::invalid_argument("pulse_for_rotation: zero drive (A or Q vanishes)");
  }
  double theta = std::fmod(angle, 2.0 * M_PI);
  if (theta < 0.0) theta += 2.0 * M_PI;
  PulseSpec p;
  p.e_amp = e_amp;
  p.phi = axis_phi;
  p.omega = resonance_omega_single(nucleus, coeffs, e0_static, b0, pc);
  p.duration = (rate > 0.0) ? theta / rate : (theta - 2.0 * M_PI) / rate;
  if (theta == 0.0) p.duration = 0.0;
  return p;
}

/// |trace(target^dag actual)| / d. Requires both inputs unitary.
inline double gate_fidelity(const Matrix& u_actual, const Matrix& u_target) {
  if (u_actual.rows() != u_target.rows() || u_actual.cols() != u_target.cols() ||
      u_actual.rows() != u_actual.cols()) {
    throw std::invalid_argument("gate_fidelity: need square matrices of equal dimension");
  }
  const int d = static_cast<int>(u_actual.rows());
  const Matrix id = Matrix::Identity(d, d);
  if ((u_actual.adjoint() * u_actual - id).cwiseAbs().maxCoeff() > 1e-6 ||
      (u_target.adjoint() * u_target - id).cwiseAbs().maxCoeff() > 1e-6) {
    throw std::invalid_argument("gate_fidelity: inputs must be unitary");
  }
  return std::abs((u_target.adjoint() * u_actual).trace()) / d;
}

inline Matrix ideal_cz() {
  Matrix u = Matrix::Identity(4, 4);
  u(3, 3) = -1.0;
  return u;
}

inline Matrix ideal_cnot() {
  Matrix u = Matrix::Zero(4, 4);
  u(0, 0) = 1.0;
  u(1, 1) = 1.0;
  u(2, 3) = 1.0;
  u(3, 2) = 1.0;
  return u;
}

/// Controlled-Z from one J window plus compensating z shifts.
/// The J window accumulates the two-qubit phase integral(2 pi J) = pi (so its
/// duration is 1/(2|J|)); each qubit then needs net single-qubit phase
/// -sign(J) pi/2, delivered by static-field segments.
inline GateSchedule synthesize_cz(const TwoQubitParams& params, double j_const,
                                  const PhysicalConstants& pc = codata()) {
  params.validate();
  if (j_const == 0.0) throw std::invalid_argument("synthesize_cz: j_const must be nonzero");
  const double qc1 = params.nucleus1.quad_coupling(pc);
  const double qc2 = params.nucleus2.quad_coupling(pc);
  if (qc1 * params.b_prime1 == 0.0 || qc2 * params.b_prime2 == 0.0) {
    throw std::invalid_argument("synthesize_cz: z shifts need nonzero Q and B' on both nuclei");
  }
  const double two_s_minus_1 = params.nucleus1.s.two_s - 1.0;
  const double sign = (j_const > 0.0) ? 1.0 : -1.0;
  const double tau_j = 1.0 / (2.0 * std::fabs(j_const));
  const double tau_z = 0.25 * tau_j;

  // phases entering the frame where each qubit precesses only under its own
  // controls: theta_i' = (2S-1)(3 qc_i B'_i E_i + pi J)
  const double theta1_j = two_s_minus_1 * M_PI * j_const * tau_j;  // = (2S-1) sign pi/2
  const double theta2_j = theta1_j;
  const double target = -sign * 0.5 * M_PI;
  const double d_theta1 = wrap_angle(target - theta1_j);
  const double d_theta2 = wrap_angle(target - theta2_j);

  GateSchedule sched;
  GateSchedule::Segment jwin;
  jwin.kind = GateSchedule::Kind::kJWindow;
  jwin.duration = tau_j;
  jwin.j_hz = j_const;
  sched.segments.push_back(jwin);

  GateSchedule::Segment z1;
  z1.kind = GateSchedule::Kind::kZShift1;
  z1.duration = tau_z;
  z1.e1 = d_theta1 / (two_s_minus_1 * 3.0 * qc1 * params.b_prime1 * tau_z);
  sched.segments.push_back(z1);

  GateSchedule::Segment z2;
  z2.kind = GateSchedule::Kind::kZShift2;
  z2.duration = tau_z;
  z2.e2 = d_theta2 / (two_s_minus_1 * 3.0 * qc2 * params.b_prime2 * tau_z);
  sched.segments.push_back(z2);
  return sched;
}

/// Controlled-NOT: the CZ schedule wrapped by +-pi/2 rotations of qubit 2
/// about the y axis. `a2` is the drive coefficient of nucleus 2 and
/// `pulse_e_amp` the pulse amplitude.
inline GateSchedule synthesize_cnot(const TwoQubitParams& params, double j_const, double a2,
                                    double pulse_e_amp, const PhysicalConstants& pc = codata()) {
  const EfgCoefficients coeffs2{a2, 0.0, params.c2, params.b_prime2};
  // R_y(-pi/2) first (as a pi/2 turn about -y), R_y(+pi/2) last
  const PulseSpec pre = pulse_for_rotation(params.nucleus2, coeffs2, pulse_e_amp, 1.5 * M_PI,
                                           0.5 * M_PI, params.b0, 0.0, pc);
  const PulseSpec post = pulse_for_rotation(params.nucleus2, coeffs2, pulse_e_amp, 0.5 * M_PI,
                                            0.5 * M_PI, params.b0, 0.0, pc);
  GateSchedule sched;
  GateSchedule::Segment d1;
  d1.kind = GateSchedule::Kind::kDrive2;
  d1.duration = pre.duration;
  d1.pulse = pre;
  d1.a_per_m = a2;
  sched.segments.push_back(d1);
  for (const auto& seg : synthesize_cz(params, j_const, pc).segments) {
    sched.segments.push_back(seg);
  }
  GateSchedule::Segment d2;
  d2.kind = GateSchedule::Kind::kDrive2;
  d2.duration = post.duration;
  d2.pulse = post;
  d2.a_per_m = a2;
  sched.segments.push_back(d2);
  return sched;
}

namespace detail {

/// |trace(target^dag actual)| / d without the unitarity gate; used for
/// leaky (sub-unitary) restricted propagators.
inline double trace_overlap(const Matrix& u_actual, const Matrix& u_target) {
  return std::abs((u_target.adjoint() * u_actual).trace()) / u_target.rows();
}

}  // namespace detail

/// Full-model simulation of a schedule: the resulting propagator restricted
/// to the qubit product subspace, in the frame where each qubit rotates at
/// its own drive-free splitting. Sub-unitary when population leaks out.
inline Matrix schedule_unitary(const TwoQubitParams& params, const GateSchedule& sched,
                               const IntegratorConfig& cfg = {},
                               const PhysicalConstants& pc = codata()) {
  params.validate();
  const SpinOperators ops = make_spin_operators(params.nucleus1.s);
  const int d = ops.s.dim();
  const int dd = d * d;
  Matrix u_lab = Matrix::Identity(dd, dd);
  double t_abs = 0.0;

  for (const auto& seg : sched.segments) {
    if (seg.duration == 0.0) continue;
    switch (seg.kind) {
      case GateSchedule::Kind::kJWindow:
      case GateSchedule::Kind::kZShift1:
      case GateSchedule::Kind::kZShift2: {
        TwoQubitParams q = params;
        q.e1 = seg.e1;
        q.e2 = seg.e2;
        q.j_schedule.segments = {{seg.duration, seg.j_hz}};
        HamiltonianModel model = h_two_model(q, pc);
        // segment-local time; the static parts are time-invariant
        u_lab = evolve_matrix(model, u_lab, 0.0, seg.duration, cfg);
        break;
      }
      case GateSchedule::Kind::kDrive1:
      case GateSchedule::Kind::kDrive2: {
        const bool on_first = seg.kind == GateSchedule::Kind::kDrive1;
        const NucleusParams& nuc = on_first ? params.nucleus1 : params.nucleus2;
        const EfgCoefficients coeffs{seg.a_per_m, 0.0, on_first ? params.c1 : params.c2,
                                     on_first ? params.b_prime1 : params.b_prime2};
        DriveParams drive;
        drive.e_amp = seg.pulse.e_amp;
        drive.omega = seg.pulse.omega;
        drive.phi = seg.pulse.phi;
        drive.b0 = params.b0;
        const HamiltonianModel model = h_single(nuc, ops, coeffs, drive, pc);
        const Matrix u_drive = evolve_matrix(model, Matrix::Identity(d, d), t_abs,
                                             t_abs + seg.duration, cfg);
        const NucleusParams& other = on_first ? params.nucleus2 : params.nucleus1;
        const EfgCoefficients other_coeffs{0.0, 0.0, on_first ? params.c2 : params.c1,
                                           on_first ? params.b_prime2 : params.b_prime1};
        const Matrix h_free = h_lqse(other, ops, other_coeffs, 0.0, params.b0, pc);
        const Matrix u_free =
            detail::unitary_step_apply(h_free, seg.duration, Matrix::Identity(d, d));
        u_lab = (on_first ? two_spin_embed(u_drive, u_free) : two_spin_embed(u_free, u_drive)) *
                u_lab;
        break;
      }
    }
    t_abs += seg.duration;
  }

  // frame adjustment at each qubit's drive-free splitting
  const EfgCoefficients k1{0.0, 0.0, params.c1, params.b_prime1};
  const EfgCoefficients k2{0.0, 0.0, params.c2, params.b_prime2};
  const double w1 = resonance_omega_single(params.nucleus1, k1, 0.0, params.b0, pc);
  const double w2 = resonance_omega_single(params.nucleus2, k2, 0.0, params.b0, pc);
  Matrix u_frame = u_lab;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double m_sum = w1 * ops.s.m_of_row(i) + w2 * ops.s.m_of_row(j);
      u_frame.row(i * d + j) *= std::exp(kImag * m_sum * t_abs);
    }
  }

  const int idx[4] = {0, 1, d, d + 1};
  Matrix u_sub(4, 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) u_sub(r, c) = u_frame(idx[r], idx[c]);
  }
  return u_sub;
}

/// Trace fidelity of a schedule against a 4x4 target on the qubit product
/// subspace, plus the mean population leaked out of that subspace.
inline GateFidelityReport score_schedule(const TwoQubitParams& params, const GateSchedule& sched,
                                         const Matrix& target, const std::string& target_name,
                                         const IntegratorConfig& cfg = {},
                                         const PhysicalConstants& pc = codata()) {
  const Matrix u_sub = schedule_unitary(params, sched, cfg, pc);
  GateFidelityReport rep;
  rep.target_name = target_name;
  rep.fidelity = detail::trace_overlap(u_sub, target);
  double kept = 0.0;
  for (int c = 0; c < 4; ++c) kept += u_sub.col(c).squaredNorm();
  rep.leakage = 1.0 - 0.25 * kept;
  return rep;
}

}  // namespace ner
