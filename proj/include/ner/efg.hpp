#pragma once

#include <cmath>
#include <stdexcept>

#include "ner/constants.hpp"
#include "ner/hydrogenic.hpp"
#include "ner/types.hpp"

namespace ner {

/// Linear-response coefficients that convert applied fields into the field
/// gradient at the nucleus: a, b [1/m] for the oscillating drive, c [V/m^2]
/// for the drive-free gradient, b_prime [1/m] for a static field.
struct EfgCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double b_prime = 0.0;

  void validate() const {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(b_prime)) {
      throw std::invalid_argument("EfgCoefficients: values must be finite");
    }
  }
};

/// 3x3 field-gradient tensor g[alpha][beta] = d_alpha E_beta at the nucleus
/// [V/m^2]; symmetric and traceless by construction (Gauss's law in vacuum).
using EfgTensor = RealMatrix3;

namespace detail {

/// Drive-free gradient coefficient of one electron:
/// (k e / 2) sum_{l',l} <n l' m| (1-3cos^2)/r^3 |n l m> Re(c*_{l'} c_l).
inline double electron_coefficient_c(int z, const Orbital& orb, const PhysicalConstants& pc) {
  double sum = 0.0;
  for (const auto& [lp, cp] : orb.coeffs) {
    for (const auto& [l, c] : orb.coeffs) {
      const double w = std::real(std::conj(cp) * c);
      if (w == 0.0) continue;
      const double ang = angular_integral(lp, l, orb.m, AngularKernel::kOneMinus3Cos2);
      if (std::fabs(ang) < 1e-14) continue;
      sum += w * ang * radial_integral(z, orb.n, lp, l, orb.n, -3, pc);
    }
  }
  return 0.5 * pc.k_coulomb * pc.e_charge * sum;
}

/// Oscillating-drive coefficient of one electron with the given 1/r^2 kernel:
/// (k e^2 / hbar omega) sum_{l',l} <n l' m| kernel/r^2 |n l m> Im(c*_{l'} c_l).
/// The Im weights are antisymmetric in (l', l) while the matrix elements are
/// symmetric, so the double sum cancels pairwise for any normalized state;
/// it is evaluated exactly as written.
inline double electron_coefficient_drive(int z, const Orbital& orb, double omega,
                                         AngularKernel kernel, const PhysicalConstants& pc) {
  double sum = 0.0;
  for (const auto& [lp, cp] : orb.coeffs) {
    for (const auto& [l, c] : orb.coeffs) {
      const double w = std::imag(std::conj(cp) * c);
      if (w == 0.0) continue;
      const double ang = angular_integral(lp, l, orb.m, kernel);
      if (std::fabs(ang) < 1e-14) continue;
      sum += w * ang * radial_integral(z, orb.n, lp, l, orb.n, -2, pc);
    }
  }
  return pc.k_coulomb * pc.e_charge * pc.e_charge / (pc.hbar * omega) * sum;
}

}  // namespace detail

inline double coefficient_c(const AtomModel& atom, const PhysicalConstants& pc = codata()) {
  atom.validate();
  double total = 0.0;
  for (const auto& e : atom.electrons) total += detail::electron_coefficient_c(atom.z_atomic, e, pc);
  return total;
}

inline double coefficient_a(const AtomModel& atom, double omega,
                            const PhysicalConstants& pc = codata()) {
  atom.validate();
  if (!(omega > 0.0)) throw std::invalid_argument("coefficient_a: omega > 0 required");
  double total = 0.0;
  for (const auto& e : atom.electrons) {
    total += detail::electron_coefficient_drive(atom.z_atomic, e, omega,
                                                AngularKernel::kCosMinusCos3, pc);
  }
  return total;
}

inline double coefficient_b(const AtomModel& atom, double omega,
                            const PhysicalConstants& pc = codata()) {
  atom.validate();
  if (!(omega > 0.0)) throw std::invalid_argument("coefficient_b: omega > 0 required");
  double total = 0.0;
  for (const auto& e : atom.electrons) {
    total += detail::electron_coefficient_drive(atom.z_atomic, e, omega,
                                                AngularKernel::kCosMinus3Cos3, pc);
  }
  return total;
}

struct BPrimeResult {
  double value = 0.0;           // 1/m
  double last_increment = 0.0;  // contribution of the n' = n_prime_max shell
  bool converged = true;        // |last_increment| <= 1e-6 |value|
};

/// Static-field gradient coefficient from second-order mixing with the
/// n' != n shells, truncated at n_prime_max:
/// k e^2 sum_{n', l, l', l''} <n l'' m|(1-3cos^2)/r^3|n' l' m>
///       <n' l' m| z |n l m> / (E_nm - E_n'm) Re(c*_{l''} c_l).
inline BPrimeResult coefficient_b_prime(const AtomModel& atom, int n_prime_max,
                                        const PhysicalConstants& pc = codata()) {
  atom.validate();
  for (const auto& e : atom.electrons) {
    if (n_prime_max <= e.n) {
      throw std::invalid_argument("coefficient_b_prime: n_prime_max must exceed every electron n");
    }
  }
  const double ke2 = pc.k_coulomb * pc.e_charge * pc.e_charge;
  BPrimeResult result;
  double last_shell = 0.0;
  for (int np = 1; np <= n_prime_max; ++np) {
    double shell = 0.0;
    for (const auto& orb : atom.electrons) {
      if (np == orb.n) continue;
      const int am = std::abs(orb.m);
      if (np - 1 < am) continue;  // no l' range in this shell
      const double denom = energy_level(atom, orb.n, orb.m, pc) - energy_level(atom, np, orb.m, pc);
      for (int lp = am; lp <= np - 1; ++lp) {
        for (const auto& [l, cl] : orb.coeffs) {
          const double ang_z = angular_integral(lp, l, orb.m, AngularKernel::kCos);
          if (std::fabs(ang_z) < 1e-14) continue;
          const double z_elem =
              ang_z * radial_integral(atom.z_atomic, np, lp, l, orb.n, 1, pc);
          for (const auto& [lpp, clpp] : orb.coeffs) {
            const double w = std::real(std::conj(clpp) * cl);
            if (w == 0.0) continue;
            const double ang_q = angular_integral(lpp, lp, orb.m, AngularKernel::kOneMinus3Cos2);
            if (std::fabs(ang_q) < 1e-14) continue;
            const double q_elem =
                ang_q * radial_integral(atom.z_atomic, orb.n, lpp, lp, np, -3, pc);
            shell += q_elem * z_elem / denom * w;
          }
        }
      }
    }
    result.value += ke2 * shell;
    last_shell = ke2 * shell;
  }
  result.last_increment = last_shell;
  result.converged = std::fabs(last_shell) <= 1e-6 * std::fabs(result.value);
  return result;
}

/// Gradient tensor for the oscillating drive, from the coefficients and the
/// integrated drive field e_tilde [V/m]:
/// diag entries C - B ez (x, y) and -2C + 2B ez (z); off-diagonal
/// xz = zx = -3A ex, yz = zy = -3A ey, xy = 0.
inline EfgTensor efg_oscillating(const EfgCoefficients& k, const RealVector3& e_tilde) {
  k.validate();
  if (!e_tilde.allFinite()) throw std::invalid_argument("efg_oscillating: field must be finite");
  EfgTensor g = EfgTensor::Zero();
  g(0, 0) = g(1, 1) = k.c - k.b * e_tilde.z();
  g(2, 2) = -2.0 * k.c + 2.0 * k.b * e_tilde.z();
  g(0, 2) = g(2, 0) = -3.0 * k.a * e_tilde.x();
  g(1, 2) = g(2, 1) = -3.0 * k.a * e_tilde.y();
  return g;
}

/// Gradient tensor for a static field E0 along z:
/// diag(C + B' E0, C + B' E0, -2 (C + B' E0)).
inline EfgTensor efg_static(const EfgCoefficients& k, double e0) {
  k.validate();
  if (!std::isfinite(e0)) throw std::invalid_argument("efg_static: field must be finite");
  EfgTensor g = EfgTensor::Zero();
  g(0, 0) = g(1, 1) = k.c + k.b_prime * e0;
  g(2, 2) = -2.0 * (k.c + k.b_prime * e0);
  return g;
}

/// Order-of-magnitude drive coefficient k e^2 / (hbar omega_ref a0^2),
/// around 8e19 1/m at omega_ref = 1e7 rad/s.
inline double estimate_a_rough(const PhysicalConstants& pc, double omega_ref) {
  if (!(omega_ref > 0.0)) throw std::invalid_argument("estimate_a_rough: omega_ref > 0 required");
  return pc.k_coulomb * pc.e_charge * pc.e_charge /
         (pc.hbar * omega_ref * pc.a0_bohr * pc.a0_bohr);
}

}  // namespace ner
