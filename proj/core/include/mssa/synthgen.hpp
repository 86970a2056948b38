#pragma once

#include <cstdint>
#include <vector>

#include "mssa/matrix.hpp"
#include "mssa/rng.hpp"

namespace mssa {

// One block activity: weight alpha on atom n over the half-open sample
// window [floor(t - d*T/2), floor(t + d*T/2)), clipped to [0, T).
struct ActivitySpec {
  Index n = 0;       // atom index
  double t = 0.0;    // window center, in [0, T]
  double d = 0.0;    // duration as a fraction of T, in (0, 1]
  double alpha = 0.0;
};

struct SynthSpec {
  Index C = 20;
  Index T = 300;
  Index N_phi = 30;
  Index K = 100;          // number of signals
  Index M = 30;           // activities per signal
  double d_min = 0.05;
  double d_max = 0.15;
  double alpha_sigma = 2.0;
  double noise_sigma = 0.0;
  double coherence_max = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Unit-norm Gaussian atoms; each column is resampled (up to 1000
// attempts) until its coherence with all accepted columns stays within
// coherence_max. Deterministic given the seed.
Matrix gen_dictionary(Index C, Index N_phi, double coherence_max,
                      std::uint64_t seed);
Matrix gen_dictionary(Index C, Index N_phi, double coherence_max, Rng& rng);

double dictionary_coherence(const Matrix& Phi);

// Piecewise-constant coefficient matrix as a sum of M random activities
// (n uniform over atoms, t uniform over [0,T], d uniform over
// [d_min, d_max], alpha normal). Overlaps on the same atom sum.
std::pair<Matrix, std::vector<ActivitySpec>> gen_coefficients(
    const SynthSpec& spec, Rng& rng);

// Applies the listed activities onto an N_phi x T zero matrix.
Matrix activities_to_matrix(const std::vector<ActivitySpec>& acts,
                            Index N_phi, Index T);

// Y = Phi*X + noise_sigma * (standard Gaussian matrix).
Matrix synthesize(const Matrix& Phi, const Matrix& X, double noise_sigma,
                  Rng& rng);

struct Dataset {
  Matrix Phi;
  std::vector<Matrix> X_true;
  std::vector<Matrix> Y;
  std::vector<std::vector<ActivitySpec>> activities;
  double coherence = 0.0;
};

// Full pipeline, single-threaded and deterministic given (spec, seed):
// dictionary first, then per-signal coefficients, then noise.
Dataset gen_dataset(const SynthSpec& spec);

}  // namespace mssa
