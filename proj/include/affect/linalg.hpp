#pragma once

#include <Eigen/Dense>

#include "affect/error.hpp"

namespace affect {

/// Eigenvalues ascending; vectors are the matching orthonormal columns.
struct EigenDecomposition {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Full symmetric eigendecomposition. Each eigenvector is signed so that its
/// largest-magnitude entry is positive (first such entry on ties).
inline EigenDecomposition eigh(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error(Errc::non_square, "eigh needs a square matrix");
  if (a.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw Error(Errc::no_convergence, "symmetric eigensolver did not converge");
  EigenDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < out.vectors.rows(); ++i) {
      const double m = std::abs(out.vectors(i, j));
      if (m > best + 1e-12) {
        best = m;
        arg = i;
      }
    }
    if (out.vectors(arg, j) < 0.0) out.vectors.col(j) *= -1.0;
  }
  return out;
}

inline double smallest_eigenvalue(const Eigen::MatrixXd& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw Error(Errc::no_convergence, "symmetric eigensolver did not converge");
  return solver.eigenvalues()(0);
}

}  // namespace affect
