#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ner {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix3 = Eigen::Matrix3d;
using RealVector3 = Eigen::Vector3d;

inline constexpr Complex kImag{0.0, 1.0};

/// Thrown when an iterative numerical procedure fails to reach its target
/// accuracy (quadrature non-convergence, integrator step underflow, ...).
/// The message carries the achieved error estimate.
class numerical_error : public std::runtime_error {
public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ner
