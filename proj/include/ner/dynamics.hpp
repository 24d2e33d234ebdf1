#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ner/hamiltonian.hpp"
#include "ner/spin.hpp"
#include "ner/types.hpp"

namespace ner {

struct IntegratorConfig {
  double dt_max = 1e-3;  // s
  double tol = 1e-10;    // error-per-elapsed-time budget; global error ~ tol
  enum class Method { kMidpoint, kCf4 } method = Method::kCf4;

  void validate() const {
    if (!(dt_max > 0.0) || !(tol > 0.0)) {
      throw std::invalid_argument("IntegratorConfig: dt_max > 0 and tol > 0 required");
    }
  }
};

namespace detail {

/// exp(-i H dt) M for Hermitian H, via eigendecomposition (exactly unitary
/// up to rounding). Diagonal H short-circuits to elementwise phases.
inline Matrix unitary_step_apply(const Matrix& h, double dt, const Matrix& m) {
  const int d = static_cast<int>(h.rows());
  bool diagonal = true;
  for (int i = 0; i < d && diagonal; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i != j && h(i, j) != Complex(0.0, 0.0)) {
        diagonal = false;
        break;
      }
    }
  }
  if (diagonal) {
    Matrix out = m;
    for (int i = 0; i < d; ++i) {
      out.row(i) *= std::exp(-kImag * h(i, i).real() * dt);
    }
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success) throw numerical_error("unitary_step: eigensolver failed");
  Vector phases(d);
  for (int i = 0; i < d; ++i) phases(i) = std::exp(-kImag * es.eigenvalues()(i) * dt);
  return es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * m));
}

/// One integrator step of size dt starting at time t.
inline Matrix integrator_step(const HamiltonianModel& model, double t, double dt, const Matrix& m,
                              IntegratorConfig::Method method) {
  if (method == IntegratorConfig::Method::kMidpoint) {
    return unitary_step_apply(model.eval(t + 0.5 * dt), dt, m);
  }
  // Fourth-order commutator-free exponential scheme on the two Gauss nodes.
  static const double kNode = std::sqrt(3.0) / 6.0;
  static const double kAlpha1 = 0.25 + kNode;
  static const double kAlpha2 = 0.25 - kNode;
  const Matrix a1 = model.eval(t + (0.5 - kNode) * dt);
  const Matrix a2 = model.eval(t + (0.5 + kNode) * dt);
  const Matrix first = kAlpha1 * a1 + kAlpha2 * a2;
  const Matrix second = kAlpha2 * a1 + kAlpha1 * a2;
  return unitary_step_apply(second, dt, unitary_step_apply(first, dt, m));
}

}  // namespace detail

/// Piecewise propagation of the columns of m0 from t_start to t_final with
/// step-doubling error control. Steps are aligned to the model's breakpoints.
inline Matrix evolve_matrix(const HamiltonianModel& model, const Matrix& m0, double t_start,
                            double t_final, const IntegratorConfig& cfg = {}) {
  cfg.validate();
  if (!model.eval) throw std::invalid_argument("evolve: model has no eval function");
  if (m0.rows() != model.dim) throw std::invalid_argument("evolve: dimension mismatch");
  if (t_final < t_start) throw std::invalid_argument("evolve: t_final >= t_start required");
  const double horizon = t_final - t_start;
  if (horizon == 0.0) return m0;

  const int order = (cfg.method == IntegratorConfig::Method::kMidpoint) ? 2 : 4;
  const double kMinDt = 1e-18;
  const double t_eps = 1e-15 * std::max(1.0, std::fabs(t_final));

  std::vector<double> breaks = model.breakpoints;
  std::sort(breaks.begin(), breaks.end());

  Matrix m = m0;
  double t = t_start;
  double dt = std::min(cfg.dt_max, horizon / 8.0);
  long attempts = 0;
  while (t < t_final - t_eps) {
    dt = std::min({dt, cfg.dt_max, t_final - t});
    // do not step across a breakpoint
    for (double b : breaks) {
      if (b > t + t_eps && b < t + dt - t_eps) {
        dt = b - t;
        break;
      }
    }
    if (dt < kMinDt) {
      throw numerical_error("evolve: step size underflow below 1e-18 s (stiffness failure)");
    }
    if (++attempts > 20'000'000) {
      throw numerical_error("evolve: step budget exhausted (model unresolvable at this tolerance)");
    }
    const Matrix full = detail::integrator_step(model, t, dt, m, cfg.method);
    const Matrix h1 = detail::integrator_step(model, t, 0.5 * dt, m, cfg.method);
    const Matrix half = detail::integrator_step(model, t + 0.5 * dt, 0.5 * dt, h1, cfg.method);
    const double err = (full - half).cwiseAbs().maxCoeff();
    // Error-per-elapsed-time target, floored at the rounding noise of the
    // doubled-step comparison so tight budgets cannot spiral the step to
    // zero. The floor only applies at sane step sizes; a step below a
    // billionth of the horizon is a resolution failure, not rounding.
    const double rounding_floor = (dt >= 1e-9 * horizon)
                                      ? 32.0 * std::numeric_limits<double>::epsilon() *
                                            std::max(1.0, m.cwiseAbs().maxCoeff())
                                      : 0.0;
    const double tol_step = std::max(cfg.tol * dt / horizon, rounding_floor);
    if (err <= tol_step) {
      m = half;
      t += dt;
      const double grow = (err == 0.0) ? 4.0 : 0.9 * std::pow(tol_step / err, 1.0 / (order + 1));
      dt *= std::clamp(grow, 1.0, 4.0);
    } else {
      dt *= std::clamp(0.9 * std::pow(tol_step / err, 1.0 / (order + 1)), 0.1, 0.9);
    }
  }
  return m;
}

inline Vector evolve(const HamiltonianModel& model, const Vector& psi0, double t_start,
                     double t_final, const IntegratorConfig& cfg = {}) {
  if (std::fabs(psi0.norm() - 1.0) > 1e-10) {
    throw std::invalid_argument("evolve: initial state must be normalized");
  }
  return evolve_matrix(model, psi0, t_start, t_final, cfg);
}

inline Vector evolve(const HamiltonianModel& model, const Vector& psi0, double t_final,
                     const IntegratorConfig& cfg = {}) {
  return evolve(model, psi0, 0.0, t_final, cfg);
}

inline Matrix evolve_propagator(const HamiltonianModel& model, double t_start, double t_final,
                                const IntegratorConfig& cfg = {}) {
  return evolve_matrix(model, Matrix::Identity(model.dim, model.dim), t_start, t_final, cfg);
}

/// Frame change psi_rot = exp(+i sz omega t) psi_lab (inverse of the lab
/// substitution psi_lab = exp(-i sz omega t) psi_rot).
inline Vector rotating_frame(const Vector& psi_lab, const SpinOperators& ops, double omega,
                             double t) {
  if (psi_lab.size() != ops.s.dim()) throw std::invalid_argument("rotating_frame: dimension mismatch");
  Vector out = psi_lab;
  for (int i = 0; i < out.size(); ++i) {
    out(i) *= std::exp(kImag * ops.s.m_of_row(i) * omega * t);
  }
  return out;
}

/// Diagonal frame factor exp(-i sz omega t).
inline Matrix frame_rotation(const SpinOperators& ops, double omega, double t) {
  const int d = ops.s.dim();
  Matrix r = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) r(i, i) = std::exp(-kImag * ops.s.m_of_row(i) * omega * t);
  return r;
}

namespace detail {

inline void require_resonance(double omega, double omega_res, const char* who) {
  if (std::fabs(omega - omega_res) > 1e-6 * std::fabs(omega_res) + 1e-30) {
    throw std::invalid_argument(std::string(who) +
                                ": drive off resonance; the closed form only holds on resonance");
  }
}

}  // namespace detail

/// Rotating-frame generator of the resonant oscillating drive:
/// 3 qc [C sz^2 + A E ({sx,sz} cos phi + {sy,sz} sin phi)], rad/s.
inline Matrix ner_rotating_generator(const NucleusParams& nucleus, const SpinOperators& ops,
                                     const EfgCoefficients& coeffs, const DriveParams& drive,
                                     const PhysicalConstants& pc = codata()) {
  nucleus.validate();
  drive.validate();
  const double qc = nucleus.quad_coupling(pc);
  return 3.0 * qc * (coeffs.c * ops.sz * ops.sz +
                     coeffs.a * drive.e_amp *
                         (std::cos(drive.phi) * anticommutator(ops.sx, ops.sz) +
                          std::sin(drive.phi) * anticommutator(ops.sy, ops.sz)));
}

/// Closed-form lab-frame propagator of the resonant oscillating drive:
/// exp(-i sz omega t) exp(-i t G) with G the rotating-frame generator.
/// Rejects off-resonant drives (|omega - gamma_n B0| beyond 1e-6 relative).
inline Matrix analytic_ner_propagator(const NucleusParams& nucleus, const SpinOperators& ops,
                                      const EfgCoefficients& coeffs, const DriveParams& drive,
                                      double t, const PhysicalConstants& pc = codata()) {
  detail::require_resonance(drive.omega, nucleus.gamma_n * drive.b0, "analytic_ner_propagator");
  const Matrix gen = ner_rotating_generator(nucleus, ops, coeffs, drive, pc);
  const Matrix u_rot = detail::unitary_step_apply(gen, t, Matrix::Identity(gen.rows(), gen.cols()));
  return frame_rotation(ops, drive.omega, t) * u_rot;
}

/// Transverse drive rate of the qubit subspace {S, S-1}:
/// 3 sqrt(2S) (2S-1) qc A E, rad/s. The population flip time is pi over this.
inline double rabi_rate(const NucleusParams& nucleus, const EfgCoefficients& coeffs, double e_amp,
                        const PhysicalConstants& pc = codata()) {
  const double two_s = nucleus.s.two_s;
  return 3.0 * std::sqrt(two_s) * (two_s - 1.0) * nucleus.quad_coupling(pc) * coeffs.a * e_amp;
}

/// Closed-form rotating-frame propagator in the qubit subspace {S, S-1}:
/// a rotation by theta = rabi_rate * t about the axis phi in the x-y plane.
inline Matrix analytic_single_propagator(const NucleusParams& nucleus,
                                         const EfgCoefficients& coeffs, const DriveParams& drive,
                                         double t, const PhysicalConstants& pc = codata()) {
  nucleus.validate();
  drive.validate();
  const double omega_res =
      resonance_omega_single(nucleus, coeffs, drive.e0_static, drive.b0, pc);
  detail::require_resonance(drive.omega, omega_res, "analytic_single_propagator");
  const double theta = rabi_rate(nucleus, coeffs, drive.e_amp, pc) * t;
  Matrix u(2, 2);
  const double c = std::cos(0.5 * theta);
  const Complex s = -kImag * std::sin(0.5 * theta);
  u(0, 0) = c;
  u(1, 1) = c;
  u(0, 1) = s * std::exp(-kImag * drive.phi);
  u(1, 0) = s * std::exp(kImag * drive.phi);
  return u;
}

struct LeakageReport {
  double leakage = 0.0;              // population outside {S, S-1} at time t
  double fidelity_vs_analytic = 0.0; // |<psi_analytic | psi_numeric>|
};

/// Full-dimensional evolution of the combined drive from a state supported on
/// the qubit subspace, scored against the embedded two-level closed form.
inline LeakageReport leakage_report(const NucleusParams& nucleus, const SpinOperators& ops,
                                    const EfgCoefficients& coeffs, const DriveParams& drive,
                                    const Vector& psi0, double t, const IntegratorConfig& cfg = {},
                                    const PhysicalConstants& pc = codata()) {
  const int d = ops.s.dim();
  if (psi0.size() != d) throw std::invalid_argument("leakage_report: dimension mismatch");
  double outside = 0.0;
  for (int i = 2; i < d; ++i) outside += std::norm(psi0(i));
  if (outside > 1e-20) {
    throw std::invalid_argument("leakage_report: initial state must live in the qubit subspace");
  }

  const HamiltonianModel model = h_single(nucleus, ops, coeffs, drive, pc);
  const Vector psi = evolve(model, psi0, t, cfg);

  LeakageReport rep;
  rep.leakage = 1.0 - std::norm(psi(0)) - std::norm(psi(1));

  // embedded closed form, lab frame; global phase drops out of the overlap
  const Matrix u2 = analytic_single_propagator(nucleus, coeffs, drive, t, pc);
  Eigen::Vector2cd top(psi0(0), psi0(1));
  Eigen::Vector2cd ana = u2 * top;
  const double sv = ops.s.value();
  ana(0) *= std::exp(-kImag * sv * drive.omega * t);
  ana(1) *= std::exp(-kImag * (sv - 1.0) * drive.omega * t);
  Vector ana_full = Vector::Zero(d);
  ana_full(0) = ana(0);
  ana_full(1) = ana(1);
  rep.fidelity_vs_analytic = std::abs(ana_full.dot(psi));
  return rep;
}

/// Default co-rotating frequency for the two-nucleus frame: the drive-free
/// splitting of nucleus 1.
inline double two_qubit_frame_omega(const TwoQubitParams& p,
                                    const PhysicalConstants& pc = codata()) {
  const EfgCoefficients k1{0.0, 0.0, p.c1, p.b_prime1};
  return resonance_omega_single(p.nucleus1, k1, 0.0, p.b0, pc);
}

struct FactoredTwoQubit {
  Matrix u1, u2, u12;

  Matrix product() const { return two_spin_embed(u1, u2) * u12; }
};

/// Factored rotating-frame propagator of the two-nucleus Hamiltonian in the
/// qubit product subspace: z phases on each qubit plus the pure two-qubit
/// phase exp(-i s1z s2z integral(2 pi J)).
inline FactoredTwoQubit two_qubit_propagator_factored(const TwoQubitParams& p, double t,
                                                      const PhysicalConstants& pc = codata()) {
  p.validate();
  if (t < 0.0) throw std::invalid_argument("two_qubit_propagator_factored: t >= 0 required");
  const double two_s_minus_1 = p.nucleus1.s.two_s - 1.0;
  const double qc1 = p.nucleus1.quad_coupling(pc);
  const double qc2 = p.nucleus2.quad_coupling(pc);
  const double j_int = p.j_schedule.integral(t);  // integral J dt, dimensionless

  const double theta1 = two_s_minus_1 * (3.0 * qc1 * p.b_prime1 * p.e1 * t + M_PI * j_int);
  const double theta2 = (p.nucleus2.gamma_n - p.nucleus1.gamma_n) * p.b0 * t +
                        two_s_minus_1 * (3.0 * qc2 * p.b_prime2 * p.e2 * t + M_PI * j_int +
                                         3.0 * (qc2 * p.c2 - qc1 * p.c1) * t);
  const double theta12 = 2.0 * M_PI * j_int;

  auto z_phase = [](double theta) {
    Matrix u = Matrix::Zero(2, 2);
    u(0, 0) = std::exp(-kImag * 0.5 * theta);
    u(1, 1) = std::exp(kImag * 0.5 * theta);
    return u;
  };
  FactoredTwoQubit f;
  f.u1 = z_phase(theta1);
  f.u2 = z_phase(theta2);
  f.u12 = Matrix::Zero(4, 4);
  const double quarter[4] = {0.25, -0.25, -0.25, 0.25};
  for (int i = 0; i < 4; ++i) f.u12(i, i) = std::exp(-kImag * quarter[i] * theta12);
  return f;
}

}  // namespace ner
