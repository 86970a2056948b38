#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mssa/baselines.hpp"
#include "mssa/solver.hpp"
#include "mssa/synthgen.hpp"

namespace mssa {

// Relative recovery error ||X_true - X_hat||_2 / ||X_true||_2.
double error_metric(const Matrix& X_true, const Matrix& X_hat);

// High-precision optimum used as ground truth for speed tests
// (Multi-SSSA at eps = 1e-10).
std::pair<Matrix, double> reference_solution(const Problem& prob,
                                             Index iter_max = 50000);

// ---------------------------------------------------------------------
// Speed benchmark (T1/T2/T3 sweeps)

enum class SweepDim { Samples, Atoms, Channels };

struct SpeedSetting {
  std::string name;  // T1, T2 or T3
  Index C = 0, N_phi = 0, T = 0;  // fixed dims; the swept one is ignored
  SweepDim sweep = SweepDim::Samples;
  std::vector<Index> sweep_values;
  std::vector<double> precisions{1e-4, 1e-5, 1e-6};
};

// Shrunken versions of the full-scale sweeps; trends, not absolutes.
SpeedSetting desk_speed_preset(const std::string& name);
SpeedSetting paper_speed_preset(const std::string& name);

struct SpeedRow {
  std::string setting;
  std::string method;  // "bregman" or "spg"
  Index dim_value = 0;
  double precision = 0.0;
  double wall_time = 0.0;       // solve call only (median over reps)
  double precompute_time = 0.0; // eigendecompositions, reported apart
  Index iterations = 0;
  double final_loss = 0.0;
  double loss_star = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  bool valid = false;    // reached the loss-gap target
  bool timeout = false;  // hit iter_max before the target
};

struct SpeedBenchOptions {
  std::uint64_t seed = 1;
  int reps = 3;  // timing repetitions, median reported
  Index iter_max_bregman = 50000;
  Index iter_max_spg = 200000;
  Index activities = 10;
  double d_min = 0.1, d_max = 0.3;
};

// Per sweep point: synthesize data, calibrate lambda1 to a relative
// residual of 0.1 +- 0.02 by bisection, pick lambda2 on a small grid
// against the planted coefficients, compute the reference optimum, then
// time both solvers to the same loss-gap target at each precision.
std::vector<SpeedRow> run_speed_bench(const SpeedSetting& setting,
                                      const SpeedBenchOptions& opts);

// ---------------------------------------------------------------------
// Structure-recovery grid

struct RecoveryMethod {
  std::string name;
  // Candidate parameter tuples, ordered from least to most regularizing
  // (ties in cross-validation go to the later entry).
  std::vector<std::vector<double>> grid;
  std::function<Matrix(const Matrix& Y, const Matrix& Phi,
                       const std::vector<double>& params)>
      fit;
};

// Stock methods; regularization grids are expressed as fractions of the
// per-problem zeroing threshold so they transfer across cells.
RecoveryMethod fused_lasso_method();
RecoveryMethod l1_method();
RecoveryMethod l21_method();
RecoveryMethod l1_l21_method();
RecoveryMethod omp_method();
RecoveryMethod somp_method();
std::vector<RecoveryMethod> all_recovery_methods();

struct CvResult {
  std::size_t index = 0;
  std::vector<double> params;
  double mean_eps = 0.0;
};

// Minimizes the mean recovery error over the training pairs; ties break
// toward the larger regularization (later grid entry).
CvResult cross_validate(const std::vector<Matrix>& Y_train,
                        const std::vector<Matrix>& X_train,
                        const Matrix& Phi, const RecoveryMethod& method);

struct RecoveryCellSpec {
  Index M = 20;
  double d_min = 0.05, d_max = 0.15;
};

struct RecoveryCell {
  Index M = 0;
  double d_min = 0.0, d_max = 0.0;
  std::string method;
  double mean_eps = 0.0;
  double diff_vs_mssa = 0.0;  // method mean error minus Multi-SSSA mean error
  bool ok = false;
  std::vector<double> cv_params;
};

struct RecoveryGridOptions {
  SynthSpec base;               // C, T, N_phi, K, alpha_sigma, coherence
  double train_fraction = 0.5;  // leading share of K goes to training
  std::uint64_t seed = 1;
};

// Per cell: generate K signals, split train/test, cross-validate every
// method, evaluate mean test error and the paired difference against
// Multi-SSSA. Methods must include the fused-LASSO solver. Cell-level
// failures are recorded with ok = false and the run continues.
std::vector<RecoveryCell> run_recovery_grid(
    const std::vector<RecoveryCellSpec>& cells,
    const std::vector<RecoveryMethod>& methods,
    const RecoveryGridOptions& opts);

// CSV report writers (one row per point/cell and method).
void write_speed_csv(const std::string& path,
                     const std::vector<SpeedRow>& rows);
void write_recovery_csv(const std::string& path,
                        const std::vector<RecoveryCell>& cells);
std::string speed_csv(const std::vector<SpeedRow>& rows);
std::string recovery_csv(const std::vector<RecoveryCell>& cells);

}  // namespace mssa
