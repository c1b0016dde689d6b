#include "relaybf/numerics.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace relaybf {

bool is_hermitian(const CMatrix& a, double rel_tol) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    return false;
  }
  const double scale = std::max(a.norm(), 1e-300);
  return (a - a.adjoint()).norm() <= rel_tol * scale;
}

CMatrix hermitize(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

EigenPairs hermitian_eig(const CMatrix& a, double rel_tol) {
  if (!is_hermitian(a, rel_tol)) {
    throw std::invalid_argument("hermitian_eig: matrix of size " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitize(a));
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_eig: eigensolver did not converge");
  }
  // Eigen returns ascending order.
  EigenPairs out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

double min_eigenvalue(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitize(a), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CVector vec(const CMatrix& a) {
  return Eigen::Map<const CVector>(a.data(), a.size());  // Eigen storage is column-major
}

CMatrix unvec(const CVector& v, Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1 || v.size() != rows * cols) {
    throw std::invalid_argument("unvec: length " + std::to_string(v.size()) + " does not match " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
  return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

cplx trace_product(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols()) {
    throw std::invalid_argument("trace_product: incompatible dimensions");
  }
  // tr(AB) = sum_ij A_ij B_ji
  return (a.array() * b.transpose().array()).sum();
}

double real_trace_product(const CMatrix& a, const CMatrix& b) { return trace_product(a, b).real(); }

}  // namespace relaybf
