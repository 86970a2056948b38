#include "mssa/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "mssa/errors.hpp"

namespace mssa {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void Problem::validate() const {
  if (Y.size() == 0 || Phi.size() == 0 || P.size() == 0) {
    throw invalid_dimension_error("Problem: empty matrix");
  }
  if (Phi.rows() != Y.rows()) {
    throw invalid_dimension_error("Problem: Phi.rows != Y.rows");
  }
  if (P.rows() != Y.cols()) {
    throw invalid_dimension_error("Problem: P.rows != Y.cols");
  }
  if (lambda1 < 0.0 || lambda2 < 0.0) {
    throw std::invalid_argument("Problem: negative regularization weight");
  }
  if (!Y.allFinite() || !Phi.allFinite() || !P.allFinite()) {
    throw std::invalid_argument("Problem: non-finite input values");
  }
  for (Index j = 0; j < Phi.cols(); ++j) {
    if (std::abs(Phi.col(j).norm() - 1.0) > 1e-8) {
      std::ostringstream os;
      os << "Problem: dictionary column " << j << " has norm "
         << Phi.col(j).norm() << ", expected 1";
      throw std::invalid_argument(os.str());
    }
  }
}

Matrix Problem::apply_P(const Matrix& X) const {
  if (X.cols() != P.rows()) {
    throw invalid_dimension_error("apply_P: X.cols != P.rows");
  }
  if (p_is_tv) {
    const Index T = X.cols();
    return X.rightCols(T - 1) - X.leftCols(T - 1);
  }
  return X * P;
}

Matrix Problem::apply_Pt(const Matrix& M) const {
  if (M.cols() != P.cols()) {
    throw invalid_dimension_error("apply_Pt: M.cols != P.cols");
  }
  if (p_is_tv) {
    const Index T = P.rows();
    Matrix out = Matrix::Zero(M.rows(), T);
    out.leftCols(T - 1) -= M;
    out.rightCols(T - 1) += M;
    return out;
  }
  return M * P.transpose();
}

Problem make_tv_problem(Matrix Y, Matrix Phi, double lambda1, double lambda2) {
  Problem prob;
  prob.P = build_tv_matrix(Y.cols());
  prob.Y = std::move(Y);
  prob.Phi = std::move(Phi);
  prob.lambda1 = lambda1;
  prob.lambda2 = lambda2;
  prob.p_is_tv = true;
  return prob;
}

std::vector<double> default_mu_grid() {
  // 20 log-spaced points spanning the penalty scales seen on unit-norm
  // dictionaries.
  std::vector<double> g(20);
  for (int i = 0; i < 20; ++i) {
    g[i] = std::pow(10.0, -3.0 + 6.0 * i / 19.0);
  }
  return g;
}

double objective(const Matrix& X, const Problem& prob) {
  if (X.rows() != prob.atoms() || X.cols() != prob.samples()) {
    throw invalid_dimension_error("objective: X has wrong shape");
  }
  double value = (prob.Y - prob.Phi * X).squaredNorm();
  if (prob.lambda1 > 0.0) {
    value += prob.lambda1 * X.cwiseAbs().sum();
  }
  if (prob.lambda2 > 0.0) {
    value += prob.lambda2 * prob.apply_P(X).cwiseAbs().sum();
  }
  return value;
}

Matrix soft_threshold(const Matrix& M, double tau) {
  if (tau < 0.0) {
    throw std::invalid_argument("soft_threshold: negative threshold");
  }
  if (tau == 0.0) {
    return M;
  }
  return M.unaryExpr([tau](double m) {
    const double a = std::abs(m);
    return a <= tau ? 0.0 : m * (1.0 - tau / a);
  });
}

Factorization factorize_bases(const Problem& prob) {
  Factorization fact;
  Matrix W = 2.0 * (prob.Phi.transpose() * prob.Phi);
  SymEig ew = sym_eigendecompose(W);
  Matrix Z = prob.P * prob.P.transpose();
  SymEig ez = sym_eigendecompose(Z);
  fact.F = std::move(ew.basis);
  fact.delta_w = std::move(ew.eigenvalues);
  fact.G = std::move(ez.basis);
  fact.delta_z = std::move(ez.eigenvalues);
  fact.Y_Phi = 2.0 * (fact.F.transpose() * (prob.Phi.transpose() * prob.Y) *
                      fact.G);
  fact.P_G = prob.P.transpose() * fact.G;
  return fact;
}

void refresh_shifts(Factorization& fact, double mu1, double mu2,
                    double o_floor) {
  if (mu1 <= 0.0 || mu2 <= 0.0) {
    throw std::invalid_argument("refresh_shifts: penalties must be positive");
  }
  const double o_min =
      fact.delta_w.minCoeff() + mu1 + mu2 * fact.delta_z.minCoeff();
  if (o_min < o_floor) {
    std::ostringstream os;
    os << "refresh_shifts: min O = min delta_w + mu1 + mu2*min delta_z = "
       << fact.delta_w.minCoeff() << " + " << mu1 << " + " << mu2 << "*"
       << fact.delta_z.minCoeff() << " = " << o_min << " below floor "
       << o_floor;
    throw ill_conditioned_error(os.str());
  }
  fact.Dw = fact.delta_w.array() + mu1;
  fact.Dz = mu2 * fact.delta_z;
  fact.O = fact.Dw.replicate(1, fact.Dz.size());
  fact.O.array().rowwise() += fact.Dz.transpose().array();
}

Factorization precompute(const Problem& prob, double mu1, double mu2,
                         double o_floor) {
  Factorization fact = factorize_bases(prob);
  refresh_shifts(fact, mu1, mu2, o_floor);
  return fact;
}

SolverState make_initial_state(const Problem& prob, double mu1, double mu2) {
  SolverState s;
  s.X = Matrix::Zero(prob.atoms(), prob.samples());
  s.A = s.X;
  s.DA = s.X;
  s.XP = Matrix::Zero(prob.atoms(), prob.filters());
  s.B = s.XP;  // B0 = X0 * P = 0
  s.DB = s.XP;
  s.mu1 = mu1;
  s.mu2 = mu2;
  return s;
}

void bregman_iterate(SolverState& state, const Factorization& fact,
                     const Problem& prob) {
  const double mu1 = state.mu1;
  const double mu2 = state.mu2;
  const Index T = prob.samples();
  const Index n_p = prob.filters();

  // M' = Y_Phi - F^T (mu1 (DA - A) G + mu2 (DB - B) P_G), with the B
  // chain reassociated when N_p > T (cheaper to apply F^T first).
  Matrix inner = mu1 * ((state.DA - state.A) * fact.G);
  if (T >= n_p) {
    inner.noalias() += mu2 * ((state.DB - state.B) * fact.P_G);
  }
  Matrix Mp = fact.Y_Phi - fact.F.transpose() * inner;
  if (T < n_p) {
    Mp.noalias() -=
        mu2 * ((fact.F.transpose() * (state.DB - state.B)) * fact.P_G);
  }
  Mp.array() /= fact.O.array();
  state.X.noalias() = (fact.F * Mp) * fact.G.transpose();

  state.A = soft_threshold(state.X + state.DA, prob.lambda1 / mu1);
  state.XP = prob.apply_P(state.X);
  state.B = soft_threshold(state.XP + state.DB, prob.lambda2 / mu2);
  state.DA += state.X - state.A;
  state.DB += state.XP - state.B;
  ++state.iter;
}

bool update_penalties(SolverState& state, const SolverConfig& cfg) {
  const double h1 = (state.X - state.A).norm();
  const double h2 = (state.XP - state.B).norm();
  bool changed = false;
  if (state.h1_prev >= 0.0) {  // first iteration only records the losses
    // A loss of exactly zero means the split constraint already holds;
    // growing the penalty then would only freeze the primal updates.
    if (h1 > 0.0 && !(h1 < cfg.r1 * state.h1_prev)) {
      state.mu1 *= cfg.rho1;
      changed = true;
    }
    if (h2 > 0.0 && !(h2 < cfg.r2 * state.h2_prev)) {
      state.mu2 *= cfg.rho2;
      changed = true;
    }
  }
  state.h1_prev = h1;
  state.h2_prev = h2;
  return changed;
}

std::pair<double, double> init_penalties(const Problem& prob,
                                         const SolverConfig& cfg) {
  std::vector<double> grid =
      cfg.mu_grid.empty() ? default_mu_grid() : cfg.mu_grid;
  const std::size_t n = grid.size();
  if (n == 0) {
    throw std::invalid_argument("init_penalties: empty grid");
  }
  Factorization fact = factorize_bases(prob);
  std::vector<double> t1_row(n, 0.0);  // sum over l of t1(j, l)
  std::vector<double> t2_col(n, 0.0);  // sum over j of t2(j, l)
  bool any_valid = false;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      try {
        refresh_shifts(fact, grid[j], grid[l], cfg.o_floor);
      } catch (const ill_conditioned_error&) {
        continue;
      }
      any_valid = true;
      SolverState state = make_initial_state(prob, grid[j], grid[l]);
      bregman_iterate(state, fact, prob);
      const double h1 = (state.X - state.A).norm();
      const double h2 = (state.XP - state.B).norm();
      t1_row[j] += 0.5 * grid[j] * h1 * h1;
      t2_col[l] += 0.5 * grid[l] * h2 * h2;
    }
  }
  if (!any_valid) {
    throw heuristic_failure_error(
        "init_penalties: every grid pair is ill-conditioned; raise the grid "
        "minimum");
  }
  // Strict comparison keeps the smaller grid value on ties (grid is
  // scanned in ascending order).
  std::size_t best1 = 0, best2 = 0;
  for (std::size_t j = 1; j < n; ++j) {
    if (t1_row[j] > t1_row[best1]) best1 = j;
    if (t2_col[j] > t2_col[best2]) best2 = j;
  }
  return {grid[best1], grid[best2]};
}

SolveReport solve(const Problem& prob, const SolverConfig& cfg) {
  prob.validate();
  if (cfg.eps <= 0.0 || cfg.iter_max < 1) {
    throw std::invalid_argument("solve: invalid eps or iter_max");
  }

  SolveReport report;

  double mu1, mu2;
  if (cfg.mu1_0 && cfg.mu2_0) {
    mu1 = *cfg.mu1_0;
    mu2 = *cfg.mu2_0;
  } else {
    std::tie(mu1, mu2) = init_penalties(prob, cfg);
  }
  report.mu1_0 = mu1;
  report.mu2_0 = mu2;

  const auto t_pre = Clock::now();
  Factorization fact = precompute(prob, mu1, mu2, cfg.o_floor);
  report.precompute_time = seconds_since(t_pre);

  SolverState state = make_initial_state(prob, mu1, mu2);
  const bool need_objective = cfg.record_trace || cfg.target_loss.has_value();

  // Per-iteration objective values use the expanded quadratic
  // ||Y||^2 - 2<Phi^T Y, X> + <X, Phi^T Phi X> so their cost does not
  // scale with the number of channels (rows of Y).
  Matrix gram, phi_t_y;
  double y_sq = 0.0;
  if (need_objective) {
    gram.noalias() = prob.Phi.transpose() * prob.Phi;
    phi_t_y.noalias() = prob.Phi.transpose() * prob.Y;
    y_sq = prob.Y.squaredNorm();
  }
  const auto fast_objective = [&](const Matrix& X) {
    double value = y_sq - 2.0 * phi_t_y.cwiseProduct(X).sum() +
                   X.cwiseProduct(gram * X).sum();
    if (prob.lambda1 > 0.0) value += prob.lambda1 * X.cwiseAbs().sum();
    if (prob.lambda2 > 0.0) {
      value += prob.lambda2 * prob.apply_P(X).cwiseAbs().sum();
    }
    return value;
  };

  const auto t0 = Clock::now();
  Matrix X_prev;
  for (Index i = 0; i < cfg.iter_max; ++i) {
    X_prev = state.X;
    bregman_iterate(state, fact, prob);
    if (!state.X.allFinite()) {
      throw divergence_error("solve: non-finite iterate at iteration " +
                             std::to_string(state.iter));
    }

    double obj = 0.0;
    if (need_objective) {
      obj = fast_objective(state.X);
      if (!std::isfinite(obj)) {
        throw divergence_error("solve: non-finite objective at iteration " +
                               std::to_string(state.iter));
      }
      if (cfg.record_trace) {
        report.objective_trace.push_back(obj);
      }
    }

    const double nx = state.X.norm();
    const double ratio = nx == 0.0 ? 0.0 : (state.X - X_prev).norm() / nx;

    if (update_penalties(state, cfg)) {
      refresh_shifts(fact, state.mu1, state.mu2, cfg.o_floor);
    }

    if (cfg.target_loss) {
      const double target = *cfg.target_loss;
      if (std::abs(obj - target) / target < cfg.target_precision) {
        report.converged = true;
        break;
      }
    } else if (ratio < cfg.eps) {
      report.converged = true;
      break;
    }
  }
  report.wall_time = seconds_since(t0);

  report.X_hat = std::move(state.X);
  report.iterations = state.iter;
  report.h1 = state.h1_prev;
  report.h2 = state.h2_prev;
  report.final_objective = objective(report.X_hat, prob);
  return report;
}

}  // namespace mssa
