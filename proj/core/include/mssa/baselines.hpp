#pragma once

#include <vector>

#include "mssa/matrix.hpp"
#include "mssa/solver.hpp"

namespace mssa {

struct Regularizer {
  enum class Kind { L1, L21, L1PlusL21 };
  Kind kind = Kind::L1;
  double lambda1 = 0.0;
  double lambda21 = 0.0;
};

// Entry-wise / row-wise shrinkage for the supported penalties. For
// L1PlusL21 the entry-wise threshold is applied first, then the row
// shrinkage (the exact composed proximal operator).
Matrix prox(const Regularizer& reg, const Matrix& M, double step);

// Greedy single-signal pursuit: picks the atom with largest |Phi^T r|,
// refits by least squares on the active set. Ties break to the lowest
// atom index. Stops at k_max atoms or residual norm <= resid_tol.
Vector omp(const Vector& y, const Matrix& Phi, Index k_max,
           double resid_tol = 0.0);

// Simultaneous variant: selection score is the row-wise l1 aggregate of
// Phi^T R; the shared support is refit per column.
Matrix somp(const Matrix& Y, const Matrix& Phi, Index k_max,
            double resid_tol = 0.0);

struct FistaReport {
  Matrix X_hat;
  Index iterations = 0;
  std::vector<double> objective_trace;
  bool converged = false;
};

// FISTA with backtracking (geometric L growth) on
//   ||Y - Phi*X||_2^2 + penalty(reg).
// Stops when the relative objective change drops below precision.
FistaReport fista_solve(const Matrix& Y, const Matrix& Phi,
                        const Regularizer& reg, double precision,
                        Index iter_max, bool record_trace = false);

struct SpgConfig {
  double precision = 1e-6;
  double L0 = 1.0;
  double rho = 1.05;
  Index iter_max = 100000;
  // Estimate of the optimal exact loss used to pick the smoothing
  // parameter; <= 0 triggers a coarse bootstrap pass.
  double final_loss = 0.0;
  // When set (> 0), stop on |exact_loss - target_loss|/target_loss <
  // precision instead of the relative-change rule.
  double target_loss = -1.0;
  bool record_trace = false;
};

struct SpgReport {
  Matrix X_hat;
  double final_loss = 0.0;     // exact (unsmoothed) objective at X_hat
  double mu = 0.0;             // smoothing parameter used
  Index iterations = 0;
  bool converged = false;
  std::vector<double> smoothed_trace;
  std::vector<double> exact_trace;
};

// Gap constant of the smoothed fused-LASSO surrogate:
// one half the number of smoothed entries.
double spg_gap_constant(Index n_phi, Index T, Index n_p);

// Entry-wise Huber smoothing of |.|: quadratic inside [-mu, mu],
// |m| - mu/2 outside. Sum over all entries.
double huber_smooth_sum(const Matrix& M, double mu);
// Gradient of the above: entries clipped to [-1, 1] after division by mu.
Matrix huber_smooth_grad(const Matrix& M, double mu);

// Smooth proximal gradient competitor: accelerated gradient with
// backtracking on ||Y-Phi*X||^2 + lambda1*s_mu(X) + lambda2*s_mu(X*P).
SpgReport spg_fused_lasso(const Problem& prob, const SpgConfig& cfg);

}  // namespace mssa
