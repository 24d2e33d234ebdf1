#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "ner/constants.hpp"
#include "ner/hamiltonian.hpp"

namespace ner {

struct PerformanceReport {
  double t2_star = 0.0;  // s
  double f_rabi = 0.0;   // Hz
  double n_flips = 0.0;  // t2_star * f_rabi, full precision
  std::string method_label;
};

/// Rabi frequency per unit drive field: |3 e Q A / (2 pi sqrt(2S) hbar)|,
/// in Hz per (V/m).
inline double k_rabi(const NucleusParams& nucleus, double a_coeff,
                     const PhysicalConstants& pc = codata()) {
  nucleus.validate();
  if (nucleus.s.two_s < 2) {
    throw std::invalid_argument("k_rabi: no transverse drive exists for spin 1/2");
  }
  return std::fabs(3.0 * pc.e_charge * nucleus.q_moment_m2 * a_coeff /
                   (2.0 * M_PI * std::sqrt(static_cast<double>(nucleus.s.two_s)) * pc.hbar));
}

/// Drive amplitude scales with the applied voltage, so f_R does too.
inline double scale_by_voltage(double f_rabi, double v_ref, double v_new) {
  if (!(v_ref > 0.0)) throw std::invalid_argument("scale_by_voltage: v_ref > 0 required");
  return f_rabi * (v_new / v_ref);
}

/// Coherent flips within one dephasing time: T2* times f_R.
inline double number_of_flips(double t2_star, double f_rabi) {
  if (t2_star < 0.0 || f_rabi < 0.0) {
    throw std::invalid_argument("number_of_flips: nonnegative inputs required");
  }
  return t2_star * f_rabi;
}

inline PerformanceReport make_report(double t2_star, double f_rabi, std::string label) {
  PerformanceReport r;
  r.t2_star = t2_star;
  r.f_rabi = f_rabi;
  r.n_flips = number_of_flips(t2_star, f_rabi);
  r.method_label = std::move(label);
  return r;
}

/// Reference comparison rows: two published hyperfine-Stark operating points
/// and the quadrupole-drive point scaled from 20 mV to 4 V.
inline std::vector<PerformanceReport> reference_rows() {
  return {
      make_report(0.064e-3, 180.8e3, "ENMHSE"),
      make_report(0.97e-3, 5.0e3, "ENMHSE"),
      make_report(92e-3, scale_by_voltage(684.2, 0.020, 4.0), "NER"),
  };
}

inline double round_2dp(double x) { return std::round(x * 100.0) / 100.0; }

/// Aligned text table of the comparison rows.
inline std::string render_table(const std::vector<PerformanceReport>& rows) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %14s %16s %16s\n", "Method", "T2*/ms", "f_R/kHz",
                "N_f");
  out += line;
  out += std::string(57, '-') + "\n";
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-8s %14.6g %16.6g %16.2f\n", r.method_label.c_str(),
                  r.t2_star * 1e3, r.f_rabi * 1e-3, round_2dp(r.n_flips));
    out += line;
  }
  return out;
}

}  // namespace ner
