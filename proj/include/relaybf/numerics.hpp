#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace relaybf {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Hermitian matrices share the dense complex storage; functions that require
/// conjugate symmetry validate it with `is_hermitian`.
using HermitianMatrix = CMatrix;

/// Relative Frobenius tolerance used to accept a matrix as Hermitian.
inline constexpr double kHermitianTol = 1e-12;

/// Eigen-pairs of a Hermitian matrix, eigenvalues sorted descending.
struct EigenPairs {
  RVector values;
  CMatrix vectors;  ///< column i pairs with values(i)
};

bool is_hermitian(const CMatrix& a, double rel_tol = kHermitianTol);

/// (A + A^H) / 2
CMatrix hermitize(const CMatrix& a);

/// Throws std::invalid_argument when `a` is not square and Hermitian within
/// `rel_tol` (relative Frobenius norm of A - A^H).
EigenPairs hermitian_eig(const CMatrix& a, double rel_tol = kHermitianTol);

/// Smallest eigenvalue of hermitize(a).
double min_eigenvalue(const CMatrix& a);

/// Kronecker product; entry (i*p + r, j*q + s) = a(i,j) * b(r,s).
CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Column-stacking vectorization, returned as a single column.
CVector vec(const CMatrix& a);

/// Inverse of `vec`. Throws std::invalid_argument on a length mismatch.
CMatrix unvec(const CVector& v, Eigen::Index rows, Eigen::Index cols);

/// tr(a b) without forming the product. Throws on incompatible dimensions.
cplx trace_product(const CMatrix& a, const CMatrix& b);

/// Real part of tr(a b); the natural inner product for Hermitian pairs.
double real_trace_product(const CMatrix& a, const CMatrix& b);

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

/// Power in watts to dBm.
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

}  // namespace relaybf
