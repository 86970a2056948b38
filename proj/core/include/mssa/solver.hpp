#pragma once

#include <optional>
#include <vector>

#include "mssa/linalg.hpp"
#include "mssa/matrix.hpp"

namespace mssa {

// One decomposition problem:
//   min_X ||Y - Phi*X||_2^2 + lambda1*||X||_1 + lambda2*||X*P||_1
// Y is C x T, Phi is C x N_phi with unit-norm columns, P is T x N_p.
struct Problem {
  Matrix Y;
  Matrix Phi;
  Matrix P;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  // Set when P is the forward-difference matrix; enables O(N*T) products
  // with P instead of dense multiplication. Results are identical.
  bool p_is_tv = false;

  Index channels() const { return Y.rows(); }
  Index samples() const { return Y.cols(); }
  Index atoms() const { return Phi.cols(); }
  Index filters() const { return P.cols(); }

  // Throws invalid_dimension_error / invalid_argument on violations.
  void validate() const;

  // X*P and M*P^T, using the difference fast path when p_is_tv.
  Matrix apply_P(const Matrix& X) const;
  Matrix apply_Pt(const Matrix& M) const;
};

Problem make_tv_problem(Matrix Y, Matrix Phi, double lambda1, double lambda2);

struct SolverConfig {
  double eps = 1e-6;       // relative-change stopping tolerance on X
  Index iter_max = 10000;
  double r1 = 0.95, r2 = 0.95;      // sufficient-decrease thresholds
  double rho1 = 1.05, rho2 = 1.05;  // penalty growth ratios
  std::vector<double> mu_grid;      // empty -> default 20-point log grid
  double o_floor = 1e-8;
  bool record_trace = false;
  // Explicit penalty initialization; unset -> init_penalties heuristic.
  std::optional<double> mu1_0;
  std::optional<double> mu2_0;
  // When set, stop on |objective - target_loss| / target_loss <
  // target_precision instead of the relative-change rule.
  std::optional<double> target_loss;
  double target_precision = 1e-6;
};

std::vector<double> default_mu_grid();

// Eigen-structure of the quadratic subproblem, precomputed once:
//   2*Phi^T*Phi = F diag(delta_w) F^T,  P*P^T = G diag(delta_z) G^T,
//   Dw = delta_w + mu1,  Dz = mu2*delta_z,  O(n,t) = Dw(n) + Dz(t),
//   Y_Phi = 2 F^T Phi^T Y G,  P_G = P^T G.
struct Factorization {
  Matrix F;
  Matrix G;
  Vector delta_w;
  Vector delta_z;
  Vector Dw;
  Vector Dz;
  Matrix O;
  Matrix Y_Phi;
  Matrix P_G;
};

struct SolverState {
  Matrix X, A, B, DA, DB;
  Matrix XP;  // cache of X*P from the last iterate
  double mu1 = 1.0, mu2 = 1.0;
  Index iter = 0;
  double h1_prev = -1.0, h2_prev = -1.0;  // negative: not yet populated
};

struct SolveReport {
  Matrix X_hat;
  Index iterations = 0;
  std::vector<double> objective_trace;
  double h1 = 0.0, h2 = 0.0;
  bool converged = false;
  double wall_time = 0.0;        // seconds around the iteration loop,
  double precompute_time = 0.0;  // eigendecompositions reported apart
  double mu1_0 = 0.0, mu2_0 = 0.0;
  double final_objective = 0.0;
};

// ||Y - Phi*X||_2^2 + lambda1*||X||_1 + lambda2*||X*P||_1 (Frobenius).
double objective(const Matrix& X, const Problem& prob);

// Entry-wise max(0, 1 - tau/|m|) * m; zero entries map to zero.
Matrix soft_threshold(const Matrix& M, double tau);

// Eigendecompositions and mu-independent products only; shifts unset.
Factorization factorize_bases(const Problem& prob);

// Recomputes Dw, Dz, O for new penalties; bases and precomputed
// products are untouched. Throws ill_conditioned_error if min O < floor.
void refresh_shifts(Factorization& fact, double mu1, double mu2,
                    double o_floor);

// factorize_bases + refresh_shifts.
Factorization precompute(const Problem& prob, double mu1, double mu2,
                         double o_floor);

SolverState make_initial_state(const Problem& prob, double mu1, double mu2);

// One split Bregman sweep: X primal (diagonalized Sylvester solve),
// A and B soft-threshold updates, dual ascent on DA and DB.
void bregman_iterate(SolverState& state, const Factorization& fact,
                     const Problem& prob);

// Geometric penalty growth when a constraint loss stalls. Returns true
// when either mu changed (caller must refresh_shifts). Skipped until
// previous losses are populated.
bool update_penalties(SolverState& state, const SolverConfig& cfg);

// Grid heuristic: one trial iteration per penalty pair, penalties
// initialized to the grid values maximizing the augmented constraint
// terms. Ties go to the smaller grid value.
std::pair<double, double> init_penalties(const Problem& prob,
                                         const SolverConfig& cfg);

SolveReport solve(const Problem& prob, const SolverConfig& cfg);

}  // namespace mssa
