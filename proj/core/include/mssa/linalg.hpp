#pragma once

#include "mssa/matrix.hpp"

namespace mssa {

// Symmetric eigendecomposition S = basis * diag(eigenvalues) * basis^T,
// eigenvalues in ascending order, basis orthonormal.
struct SymEig {
  Matrix basis;
  Vector eigenvalues;
};

// Forward-difference operator of shape T x (T-1): column j holds -1 at
// row j and +1 at row j+1, so x^T * tv yields consecutive differences
// of the row vector x.
Matrix build_tv_matrix(Index T);

// Decomposes a symmetric matrix; the input is symmetrized by averaging
// with its transpose first (products like 2*Phi^T*Phi are symmetric only
// up to rounding). Eigenvalues within -1e-10 of zero are clamped to 0.
SymEig sym_eigendecompose(const Matrix& S);

// Solves W*X + X*Z = M for X given eigendecompositions of W and Z, via
// element-wise division in the joint eigenbasis. Every divisor
// eigW(n) + eigZ(t) must be >= floor (> 0), otherwise ill-conditioned.
Matrix sylvester_solve_diag(const SymEig& eigW, const SymEig& eigZ,
                            const Matrix& M, double floor_value);

// Moore-Penrose pseudo-inverse; singular values below
// rank_tol * sigma_max are treated as zero. Default tolerance 1e-10.
Matrix pseudo_inverse(const Matrix& A, double rank_tol = 1e-10);

}  // namespace mssa
