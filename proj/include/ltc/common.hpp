#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace ltc {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A malformed input: bad parameters, inconsistent sizes, invalid config.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A numerical condition that prevents the computation from being meaningful
/// (gap closure, band crossing, eigensolver failure).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Raised when a spectral gap required by the caller is not present.
class GapClosed : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Largest absolute entry of a complex matrix.
inline double max_abs(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace ltc
