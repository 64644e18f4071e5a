#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace agm {

using Complex = std::complex<double>;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Everything downstream of linalg works over the complex field; real inputs
// carry a zero imaginary part.
using Matrix = DenseMatrix<Complex>;
using Vector = DenseVector<Complex>;

/// A documented precondition of an operation does not hold.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// A size request exceeds the exhaustive-enumeration guards.
class InfeasibleError : public DomainError {
 public:
  explicit InfeasibleError(const std::string& what) : DomainError(what) {}
};

}  // namespace agm
