#include "mssa/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "mssa/errors.hpp"

namespace mssa {

Matrix build_tv_matrix(Index T) {
  if (T < 2) {
    throw invalid_dimension_error(
        "build_tv_matrix: need at least 2 samples, got " + std::to_string(T));
  }
  Matrix tv = Matrix::Zero(T, T - 1);
  for (Index j = 0; j + 1 < T; ++j) {
    tv(j, j) = -1.0;
    tv(j + 1, j) = 1.0;
  }
  return tv;
}

SymEig sym_eigendecompose(const Matrix& S) {
  if (S.rows() != S.cols()) {
    throw invalid_dimension_error("sym_eigendecompose: matrix is not square");
  }
  const double scale = S.cwiseAbs().maxCoeff();
  const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  if (scale > 0.0 && asym > 1e-9 * scale) {
    throw std::invalid_argument(
        "sym_eigendecompose: input exceeds the symmetry tolerance");
  }
  // Products like 2*Phi^T*Phi are symmetric only up to rounding.
  Matrix sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw numeric_error("sym_eigendecompose: eigensolver did not converge");
  }
  SymEig out{es.eigenvectors(), es.eigenvalues()};
  // PSD inputs can round to slightly negative eigenvalues; clamp those so
  // downstream divisor grids stay non-negative.
  const double lam_max = std::abs(out.eigenvalues(out.eigenvalues.size() - 1));
  const double clamp = -1e-10 * std::max(1.0, lam_max);
  for (Index i = 0; i < out.eigenvalues.size(); ++i) {
    if (out.eigenvalues(i) < 0.0 && out.eigenvalues(i) >= clamp) {
      out.eigenvalues(i) = 0.0;
    }
  }
  return out;
}

Matrix sylvester_solve_diag(const SymEig& eigW, const SymEig& eigZ,
                            const Matrix& M, double floor_value) {
  const Index n = eigW.basis.rows();
  const Index t = eigZ.basis.rows();
  if (M.rows() != n || M.cols() != t) {
    std::ostringstream os;
    os << "sylvester_solve_diag: M is " << M.rows() << "x" << M.cols()
       << ", expected " << n << "x" << t;
    throw invalid_dimension_error(os.str());
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < t; ++j) {
      const double o = eigW.eigenvalues(i) + eigZ.eigenvalues(j);
      if (o < floor_value) {
        std::ostringstream os;
        os << "sylvester_solve_diag: divisor O(" << i << "," << j << ") = "
           << o << " below floor " << floor_value;
        throw ill_conditioned_error(os.str());
      }
    }
  }
  Matrix Mp = eigW.basis.transpose() * M * eigZ.basis;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < t; ++j) {
      Mp(i, j) /= eigW.eigenvalues(i) + eigZ.eigenvalues(j);
    }
  }
  return eigW.basis * Mp * eigZ.basis.transpose();
}

Matrix pseudo_inverse(const Matrix& A, double rank_tol) {
  if (A.size() == 0) {
    throw invalid_dimension_error("pseudo_inverse: empty matrix");
  }
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = rank_tol * sv(0);
  Vector inv = Vector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) {
      inv(i) = 1.0 / sv(i);
    }
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace mssa
