#pragma once

#include <cmath>
#include <stdexcept>

namespace ner {

/// Fundamental constants in SI units. Defaults are CODATA 2018 values;
/// every field can be overridden (unit tests perturb them one at a time).
struct PhysicalConstants {
  double k_coulomb = 8.9875517923e9;   // N m^2 / C^2
  double e_charge = 1.602176634e-19;   // C
  double hbar = 1.054571817e-34;       // J s
  double a0_bohr = 5.29177210903e-11;  // m
  double m_electron = 9.1093837015e-31;  // kg

  void validate() const {
    if (!(k_coulomb > 0.0) || !(e_charge > 0.0) || !(hbar > 0.0) ||
        !(a0_bohr > 0.0) || !(m_electron > 0.0)) {
      throw std::invalid_argument("PhysicalConstants: all constants must be strictly positive");
    }
  }
};

inline const PhysicalConstants& codata() {
  static const PhysicalConstants c{};
  return c;
}

}  // namespace ner
