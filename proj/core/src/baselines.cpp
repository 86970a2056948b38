#include "mssa/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mssa/errors.hpp"

namespace mssa {

Matrix prox(const Regularizer& reg, const Matrix& M, double step) {
  if (step <= 0.0) {
    throw std::invalid_argument("prox: step must be positive");
  }
  switch (reg.kind) {
    case Regularizer::Kind::L1:
      return soft_threshold(M, step * reg.lambda1);
    case Regularizer::Kind::L21: {
      Matrix out = M;
      const double tau = step * reg.lambda21;
      for (Index i = 0; i < out.rows(); ++i) {
        const double rn = out.row(i).norm();
        out.row(i) *= rn <= tau ? 0.0 : 1.0 - tau / rn;
      }
      return out;
    }
    case Regularizer::Kind::L1PlusL21: {
      // Exact composition: entry-wise threshold first, then row shrinkage.
      Matrix out = soft_threshold(M, step * reg.lambda1);
      const double tau = step * reg.lambda21;
      for (Index i = 0; i < out.rows(); ++i) {
        const double rn = out.row(i).norm();
        out.row(i) *= rn <= tau ? 0.0 : 1.0 - tau / rn;
      }
      return out;
    }
  }
  throw std::invalid_argument("prox: unknown regularizer kind");
}

namespace {

double penalty_value(const Regularizer& reg, const Matrix& X) {
  double v = 0.0;
  switch (reg.kind) {
    case Regularizer::Kind::L1:
      v = reg.lambda1 * X.cwiseAbs().sum();
      break;
    case Regularizer::Kind::L21:
      v = reg.lambda21 * X.rowwise().norm().sum();
      break;
    case Regularizer::Kind::L1PlusL21:
      v = reg.lambda1 * X.cwiseAbs().sum() +
          reg.lambda21 * X.rowwise().norm().sum();
      break;
  }
  return v;
}

// Shared greedy pursuit over single- or multi-column residuals.
Matrix pursuit(const Matrix& Y, const Matrix& Phi, Index k_max,
               double resid_tol) {
  if (Phi.rows() != Y.rows()) {
    throw invalid_dimension_error("pursuit: Phi.rows != Y.rows");
  }
  if (k_max < 0 || k_max > Phi.cols()) {
    throw std::invalid_argument("pursuit: k_max out of range");
  }
  Matrix X = Matrix::Zero(Phi.cols(), Y.cols());
  Matrix R = Y;
  std::vector<Index> active;
  std::vector<char> in_active(static_cast<std::size_t>(Phi.cols()), 0);
  while (static_cast<Index>(active.size()) < k_max &&
         R.norm() > resid_tol && R.norm() > 0.0) {
    const Matrix corr = (Phi.transpose() * R).cwiseAbs();
    Index best = -1;
    double best_score = -1.0;
    for (Index n = 0; n < Phi.cols(); ++n) {
      if (in_active[static_cast<std::size_t>(n)]) continue;
      const double score = corr.row(n).sum();
      if (score > best_score) {  // strict: ties break to the lowest index
        best_score = score;
        best = n;
      }
    }
    if (best < 0 || best_score <= 0.0) break;
    active.push_back(best);
    in_active[static_cast<std::size_t>(best)] = 1;

    Matrix sub(Phi.rows(), static_cast<Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
      sub.col(static_cast<Index>(k)) = Phi.col(active[k]);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(sub);
    if (qr.rank() < sub.cols()) {
      throw rank_deficiency_error(
          "pursuit: active-set system is rank deficient");
    }
    const Matrix coef = qr.solve(Y);
    X.setZero();
    for (std::size_t k = 0; k < active.size(); ++k) {
      X.row(active[k]) = coef.row(static_cast<Index>(k));
    }
    R = Y - sub * coef;
  }
  return X;
}

}  // namespace

Vector omp(const Vector& y, const Matrix& Phi, Index k_max,
           double resid_tol) {
  return pursuit(y, Phi, k_max, resid_tol).col(0);
}

Matrix somp(const Matrix& Y, const Matrix& Phi, Index k_max,
            double resid_tol) {
  return pursuit(Y, Phi, k_max, resid_tol);
}

FistaReport fista_solve(const Matrix& Y, const Matrix& Phi,
                        const Regularizer& reg, double precision,
                        Index iter_max, bool record_trace) {
  if (precision <= 0.0) {
    throw std::invalid_argument("fista_solve: precision must be positive");
  }
  if (reg.lambda1 < 0.0 || reg.lambda21 < 0.0) {
    throw std::invalid_argument("fista_solve: negative weight");
  }
  const auto f = [&](const Matrix& X) { return (Y - Phi * X).squaredNorm(); };

  FistaReport report;
  Matrix X = Matrix::Zero(Phi.cols(), Y.cols());
  Matrix Yk = X;
  double t = 1.0;
  double L = 1.0;
  const double rho = 1.05;
  double obj_prev = f(X) + penalty_value(reg, X);

  for (Index i = 0; i < iter_max; ++i) {
    const Matrix grad = 2.0 * (Phi.transpose() * (Phi * Yk - Y));
    const double fy = f(Yk);
    Matrix X_new;
    for (;;) {
      X_new = prox(reg, Yk - grad / L, 1.0 / L);
      const Matrix diff = X_new - Yk;
      const double quad = fy + grad.cwiseProduct(diff).sum() +
                          0.5 * L * diff.squaredNorm();
      if (f(X_new) <= quad + 1e-12 * std::abs(fy) + 1e-300) break;
      L *= rho;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Yk = X_new + ((t - 1.0) / t_new) * (X_new - X);
    X = X_new;
    t = t_new;
    ++report.iterations;

    const double obj = f(X) + penalty_value(reg, X);
    if (!std::isfinite(obj)) {
      throw divergence_error("fista_solve: non-finite objective");
    }
    if (record_trace) {
      report.objective_trace.push_back(obj);
    }
    if (std::abs(obj - obj_prev) <=
        precision * std::max(std::abs(obj), 1e-300)) {
      report.converged = true;
      report.X_hat = std::move(X);
      return report;
    }
    obj_prev = obj;
  }
  report.X_hat = std::move(X);
  return report;
}

double spg_gap_constant(Index n_phi, Index T, Index n_p) {
  return 0.5 * static_cast<double>(n_phi) * static_cast<double>(T + n_p);
}

double huber_smooth_sum(const Matrix& M, double mu) {
  return M.unaryExpr([mu](double m) {
            const double a = std::abs(m);
            return a <= mu ? m * m / (2.0 * mu) : a - 0.5 * mu;
          })
      .sum();
}

Matrix huber_smooth_grad(const Matrix& M, double mu) {
  return M.unaryExpr([mu](double m) {
    return std::clamp(m / mu, -1.0, 1.0);
  });
}

namespace {

// One warm-started accelerated-descent stage at a fixed smoothing level.
// Returns true when the stage converged (or hit the target loss).
bool spg_stage(const Problem& prob, double mu, double stop_tol,
               const SpgConfig& cfg, bool final_stage, Matrix& X, double& L,
               SpgReport& report) {
  const double l1 = prob.lambda1;
  const double l2 = prob.lambda2;
  const auto smooth_obj = [&](const Matrix& M) {
    double v = (prob.Y - prob.Phi * M).squaredNorm();
    if (l1 > 0.0) v += l1 * huber_smooth_sum(M, mu);
    if (l2 > 0.0) v += l2 * huber_smooth_sum(prob.apply_P(M), mu);
    return v;
  };

  Matrix Yk = X;
  double t = 1.0;
  double obj_prev = smooth_obj(X);

  while (report.iterations < cfg.iter_max) {
    Matrix grad = 2.0 * (prob.Phi.transpose() * (prob.Phi * Yk - prob.Y));
    if (l1 > 0.0) grad += l1 * huber_smooth_grad(Yk, mu);
    if (l2 > 0.0) {
      grad += l2 * prob.apply_Pt(huber_smooth_grad(prob.apply_P(Yk), mu));
    }
    const double fy = smooth_obj(Yk);
    const double g2 = grad.squaredNorm();
    Matrix X_new;
    double obj_new;
    for (;;) {
      X_new = Yk - grad / L;
      obj_new = smooth_obj(X_new);
      if (obj_new <= fy - 0.5 * g2 / L + 1e-12 * std::abs(fy) + 1e-300) break;
      L *= cfg.rho;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Yk = X_new + ((t - 1.0) / t_new) * (X_new - X);
    X = X_new;
    t = t_new;
    ++report.iterations;

    if (!std::isfinite(obj_new)) {
      throw divergence_error("spg_fused_lasso: non-finite objective");
    }
    if (cfg.record_trace && final_stage) {
      report.smoothed_trace.push_back(obj_new);
      report.exact_trace.push_back(objective(X, prob));
    }
    if (cfg.target_loss > 0.0) {
      const double exact = cfg.record_trace && final_stage
                               ? report.exact_trace.back()
                               : objective(X, prob);
      if (std::abs(exact - cfg.target_loss) / cfg.target_loss <
          cfg.precision) {
        report.converged = true;
        return true;
      }
      // Chasing a target loss: progress toward it can be arbitrarily slow,
      // so only the target itself or the iteration budget may stop the run
      // at the final smoothing level.
      if (!final_stage &&
          std::abs(obj_new - obj_prev) <=
              stop_tol * std::max(std::abs(obj_new), 1e-300)) {
        return true;
      }
    } else if (std::abs(obj_new - obj_prev) <=
               stop_tol * std::max(std::abs(obj_new), 1e-300)) {
      if (final_stage) report.converged = true;
      return true;
    }
    obj_prev = obj_new;
  }
  return false;
}

SpgReport spg_core(const Problem& prob, double mu, const SpgConfig& cfg) {
  // Descend on a sequence of smoothing levels shrinking toward the
  // requested one, warm-starting each stage. Running only at the target
  // level stalls: the smoothed objective is so stiff there that the
  // relative-change rule fires long before the optimum is reached.
  const double k_gap =
      spg_gap_constant(prob.atoms(), prob.samples(), prob.filters());
  const double mu_start = std::max(
      mu, std::max(0.95 * prob.Y.squaredNorm() * 1e-2 / k_gap, 1e-300));

  SpgReport report;
  report.mu = mu;
  Matrix X = Matrix::Zero(prob.atoms(), prob.samples());
  double L = cfg.L0;

  double level = mu_start;
  for (;;) {
    const bool final_stage = level <= mu;
    // The final stage stops one order tighter so the leftover drift of the
    // relative-change rule stays below the requested precision.
    const double stop_tol =
        final_stage ? 0.1 * cfg.precision : cfg.precision;
    const bool done =
        spg_stage(prob, level, stop_tol, cfg, final_stage, X, L, report);
    if (final_stage || (done && report.converged) ||
        report.iterations >= cfg.iter_max) {
      break;
    }
    level = std::max(level / 10.0, mu);
  }
  report.final_loss = objective(X, prob);
  report.X_hat = std::move(X);
  return report;
}

}  // namespace

SpgReport spg_fused_lasso(const Problem& prob, const SpgConfig& cfg) {
  prob.validate();
  if (cfg.precision <= 0.0) {
    throw std::invalid_argument("spg_fused_lasso: precision must be positive");
  }
  const double k_gap =
      spg_gap_constant(prob.atoms(), prob.samples(), prob.filters());

  double final_loss = cfg.final_loss;
  if (final_loss <= 0.0 && cfg.target_loss > 0.0) {
    final_loss = cfg.target_loss;
  }
  if (final_loss <= 0.0) {
    // Coarse bootstrap: the loss at X = 0 bounds the optimum from above.
    SpgConfig coarse = cfg;
    coarse.precision = 1e-2;
    coarse.record_trace = false;
    const double upper = prob.Y.squaredNorm();
    const double mu_boot =
        std::max(0.95 * upper * coarse.precision / k_gap, 1e-300);
    final_loss = spg_core(prob, mu_boot, coarse).final_loss;
  }
  const double mu =
      std::max(0.95 * final_loss * cfg.precision / k_gap, 1e-300);
  return spg_core(prob, mu, cfg);
}

}  // namespace mssa
