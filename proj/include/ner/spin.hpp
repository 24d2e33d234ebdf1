#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

#include "ner/types.hpp"

namespace ner {

/// Spin quantum number stored as 2S so that half-integer spins stay exact.
struct SpinQuantum {
  int two_s = 1;

  SpinQuantum() = default;
  explicit SpinQuantum(int two_s_in) : two_s(two_s_in) {
    if (two_s < 1) throw std::invalid_argument("SpinQuantum: need 2S >= 1");
  }

  int dim() const { return two_s + 1; }
  double value() const { return 0.5 * two_s; }
  bool is_half_integer() const { return two_s % 2 == 1; }

  /// "3/2" for half-integer spins, "2" for integer ones.
  std::string label() const {
    if (two_s % 2 == 0) return std::to_string(two_s / 2);
    return std::to_string(two_s) + "/2";
  }

  /// m value of basis row i; rows are ordered m = S, S-1, ..., -S.
  double m_of_row(int i) const { return 0.5 * two_s - i; }
};

/// Dimensionless spin matrices (operators divided by hbar) in the eigenbasis
/// of sz with m descending. All hbar bookkeeping lives in the Hamiltonian
/// builders, not here.
struct SpinOperators {
  SpinQuantum s;
  Matrix sx, sy, sz;
};

inline SpinOperators make_spin_operators(SpinQuantum s) {
  const int d = s.dim();
  const double sv = s.value();
  Matrix sp = Matrix::Zero(d, d);  // raising operator
  for (int i = 1; i < d; ++i) {
    const double m = s.m_of_row(i);
    sp(i - 1, i) = std::sqrt(sv * (sv + 1.0) - m * (m + 1.0));
  }
  SpinOperators ops;
  ops.s = s;
  ops.sx = 0.5 * (sp + sp.adjoint());
  ops.sy = -0.5 * kImag * (sp - sp.adjoint());
  ops.sz = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) ops.sz(i, i) = s.m_of_row(i);
  return ops;
}

inline Matrix anticommutator(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw std::invalid_argument("anticommutator: need square matrices of equal dimension");
  }
  return a * b + b * a;
}

/// Projections of sx, sy, sz onto the qubit subspace m in {S, S-1}.
/// px = sqrt(2S) * (half-spin x), pz = (half-spin z) + shift * I with
/// shift = (2S-1)/2; they coincide with the top-left 2x2 blocks of the
/// parent operators.
struct QubitProjection {
  SpinQuantum s;
  Matrix px, py, pz;
  double shift = 0.0;
};

inline QubitProjection qubit_projection(SpinQuantum s) {
  const SpinOperators half = make_spin_operators(SpinQuantum{1});
  QubitProjection p;
  p.s = s;
  const double root = std::sqrt(static_cast<double>(s.two_s));
  p.shift = 0.5 * (s.two_s - 1);
  p.px = root * half.sx;
  p.py = root * half.sy;
  p.pz = half.sz + p.shift * Matrix::Identity(2, 2);
  return p;
}

/// op1 (x) op2 with the first spin as the slow index.
inline Matrix two_spin_embed(const Matrix& op1, const Matrix& op2) {
  if (op1.rows() != op1.cols() || op2.rows() != op2.cols()) {
    throw std::invalid_argument("two_spin_embed: need square matrices");
  }
  return Eigen::kroneckerProduct(op1, op2);
}

}  // namespace ner
