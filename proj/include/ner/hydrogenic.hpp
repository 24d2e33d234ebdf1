#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "ner/constants.hpp"
#include "ner/quadrature.hpp"
#include "ner/types.hpp"

namespace ner {

/// One hydrogen-like electron: principal and magnetic quantum numbers plus
/// complex amplitudes c_l over the degenerate l values in [|m|, n-1].
struct Orbital {
  int n = 1;
  int m = 0;
  std::map<int, Complex> coeffs;

  void validate() const {
    if (n < 1) throw std::invalid_argument("Orbital: n >= 1 required");
    if (std::abs(m) > n - 1) throw std::invalid_argument("Orbital: |m| <= n-1 required");
    if (coeffs.empty()) throw std::invalid_argument("Orbital: empty amplitude set");
    double norm2 = 0.0;
    for (const auto& [l, c] : coeffs) {
      if (l < std::abs(m) || l > n - 1) {
        throw std::invalid_argument("Orbital: amplitude outside l range [|m|, n-1]");
      }
      norm2 += std::norm(c);
    }
    if (std::fabs(norm2 - 1.0) > 1e-10) {
      throw std::invalid_argument("Orbital: amplitudes must be normalized to 1");
    }
  }
};

struct AtomModel {
  int z_atomic = 1;
  std::vector<Orbital> electrons;
  double gamma_e = 1.76085963023e11;  // rad/(s T)
  double b0 = 0.0;                    // T

  void validate() const {
    if (z_atomic < 1) throw std::invalid_argument("AtomModel: Z >= 1 required");
    if (electrons.empty()) throw std::invalid_argument("AtomModel: need at least one electron");
    for (const auto& e : electrons) e.validate();
  }
};

/// E_nm = -Z^2 m_e (k e^2)^2 / (2 n^2 hbar^2) + gamma_e B0 m hbar, in joules.
inline double energy_level(const AtomModel& atom, int n, int m,
                           const PhysicalConstants& pc = codata()) {
  if (n < 1 || std::abs(m) > n - 1) {
    throw std::invalid_argument("energy_level: need n >= 1 and |m| <= n-1");
  }
  const double ke2 = pc.k_coulomb * pc.e_charge * pc.e_charge;
  const double z = static_cast<double>(atom.z_atomic);
  return -z * z * pc.m_electron * ke2 * ke2 / (2.0 * n * n * pc.hbar * pc.hbar) +
         atom.gamma_e * atom.b0 * m * pc.hbar;
}

/// Normalized radial wavefunction R_nl(r) for nuclear charge z, so that
/// integral of R^2 r^2 dr equals 1.
inline double radial_wavefunction(int z, int n, int l, double r,
                                  const PhysicalConstants& pc = codata()) {
  if (n < 1 || l < 0 || l > n - 1) throw std::invalid_argument("radial_wavefunction: bad (n,l)");
  const double beta = 2.0 * z / (n * pc.a0_bohr);
  const double rho = beta * r;
  const double log_norm = 1.5 * std::log(beta) +
                          0.5 * (std::lgamma(n - l) - std::log(2.0 * n) - std::lgamma(n + l + 1));
  if (rho > 50.0) {
    // far tail: bound log|R| by the dominant Laguerre term to avoid 0 * inf
    const int k = n - l - 1;
    const double log_bound = log_norm + (l + k) * std::log(rho) - 0.5 * rho -
                             std::lgamma(k + 1.0) + 2.0;
    if (log_bound < -740.0) return 0.0;
  }
  return std::exp(log_norm) * std::pow(rho, l) * std::exp(-0.5 * rho) *
         std::assoc_laguerre(n - l - 1, 2 * l + 1, rho);
}

/// Radial matrix element  integral of R_{n,l1} R_{n2,l2} r^power r^2 dr
/// by adaptive quadrature on (0, r_max) with r_max = 50 n_max^2 a0 / z.
inline double radial_integral(int z, int n, int l1, int l2, int n2, int power,
                              const PhysicalConstants& pc = codata()) {
  if (z < 1) throw std::invalid_argument("radial_integral: z >= 1 required");
  if (n < 1 || l1 < 0 || l1 > n - 1) throw std::invalid_argument("radial_integral: bad (n,l1)");
  if (n2 < 1 || l2 < 0 || l2 > n2 - 1) throw std::invalid_argument("radial_integral: bad (n2,l2)");
  if (l1 + l2 + 2 + power < 0) {
    throw std::invalid_argument("radial_integral: non-integrable singularity at r = 0");
  }
  const int n_max = std::max(n, n2);
  const double r_max = 50.0 * n_max * n_max * pc.a0_bohr / z;
  auto integrand = [&](double r) {
    if (r <= 0.0) return 0.0;
    return radial_wavefunction(z, n, l1, r, pc) * radial_wavefunction(z, n2, l2, r, pc) *
           std::pow(r, power + 2);
  };
  const double value = integrate_adaptive(integrand, 0.0, r_max, 1e-10);
  // Both radial functions decay at least as exp(-z r / (n_max a0)); check the
  // neglected tail against the integrand's bulk scale (the integral itself
  // may cancel to zero).
  const double decay_len = n_max * pc.a0_bohr / z;
  const double bulk = std::fabs(integrand(n_max * n_max * pc.a0_bohr / z)) * decay_len;
  const double tail = std::fabs(integrand(r_max)) * decay_len;
  if (tail > 1e-10 * (std::fabs(value) + bulk) + 1e-300) {
    throw numerical_error("radial_integral: truncated tail above tolerance");
  }
  return value;
}

/// Angular kernels appearing in the field-gradient matrix elements,
/// as polynomials in x = cos(theta).
enum class AngularKernel { kCosMinusCos3, kCosMinus3Cos3, kOneMinus3Cos2, kCos };

namespace detail {

inline double angular_kernel_value(AngularKernel k, double x) {
  switch (k) {
    case AngularKernel::kCosMinusCos3: return x - x * x * x;
    case AngularKernel::kCosMinus3Cos3: return x - 3.0 * x * x * x;
    case AngularKernel::kOneMinus3Cos2: return 1.0 - 3.0 * x * x;
    case AngularKernel::kCos: return x;
  }
  throw std::invalid_argument("unknown angular kernel");
}

inline const std::pair<std::vector<double>, std::vector<double>>& gl32() {
  static const auto cached = [] {
    std::vector<double> x, w;
    gauss_legendre(32, x, w);
    return std::make_pair(x, w);
  }();
  return cached;
}

}  // namespace detail

/// integral of conj(Y_{l1 m}) kernel(theta) Y_{l2 m} dOmega. The phi integral
/// is trivial for equal m; the remaining polynomial integrand is evaluated by
/// fixed-order Gauss-Legendre in cos(theta), exact at these degrees.
inline double angular_integral(int l1, int l2, int m, AngularKernel kernel) {
  const int am = std::abs(m);
  if (l1 < 0 || l2 < 0 || am > std::min(l1, l2)) {
    throw std::invalid_argument("angular_integral: need |m| <= min(l1, l2)");
  }
  const double norm1 = std::sqrt((2.0 * l1 + 1.0) / (4.0 * M_PI) *
                                 std::exp(std::lgamma(l1 - am + 1) - std::lgamma(l1 + am + 1)));
  const double norm2 = std::sqrt((2.0 * l2 + 1.0) / (4.0 * M_PI) *
                                 std::exp(std::lgamma(l2 - am + 1) - std::lgamma(l2 + am + 1)));
  std::vector<double> x, w;
  const int degree = l1 + l2 + 3;
  if (degree <= 63) {
    const auto& [cx, cw] = detail::gl32();
    x = cx;
    w = cw;
  } else {
    gauss_legendre(degree / 2 + 1, x, w);
  }
  double sum = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sum += w[i] * std::assoc_legendre(l1, am, x[i]) * std::assoc_legendre(l2, am, x[i]) *
           detail::angular_kernel_value(kernel, x[i]);
  }
  return 2.0 * M_PI * norm1 * norm2 * sum;
}

}  // namespace ner
