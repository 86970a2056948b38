#include "mssa/synthgen.hpp"

#include <cmath>
#include <sstream>

#include "mssa/errors.hpp"

namespace mssa {

void SynthSpec::validate() const {
  if (C < 1 || T < 2 || N_phi < 1 || K < 1 || M < 0) {
    throw std::invalid_argument("SynthSpec: non-positive dimension");
  }
  if (!(d_min <= d_max) || d_min <= 0.0 || d_max > 1.0) {
    throw std::invalid_argument("SynthSpec: invalid duration bounds");
  }
  if (noise_sigma < 0.0) {
    throw std::invalid_argument("SynthSpec: negative noise sigma");
  }
  if (coherence_max <= 0.0 || coherence_max > 1.0) {
    throw std::invalid_argument("SynthSpec: coherence_max outside (0, 1]");
  }
}

Matrix gen_dictionary(Index C, Index N_phi, double coherence_max, Rng& rng) {
  constexpr int kAttemptsPerColumn = 1000;
  Matrix Phi(C, N_phi);
  for (Index j = 0; j < N_phi; ++j) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttemptsPerColumn; ++attempt) {
      Vector col(C);
      for (Index i = 0; i < C; ++i) {
        col(i) = rng.normal();
      }
      const double norm = col.norm();
      if (norm == 0.0) continue;
      col /= norm;
      bool ok = true;
      for (Index k = 0; k < j; ++k) {
        if (std::abs(Phi.col(k).dot(col)) > coherence_max) {
          ok = false;
          break;
        }
      }
      if (ok) {
        Phi.col(j) = col;
        placed = true;
        break;
      }
    }
    if (!placed) {
      std::ostringstream os;
      os << "gen_dictionary: column " << j << " exceeded "
         << kAttemptsPerColumn << " resampling attempts for coherence "
         << coherence_max;
      throw coherence_infeasible_error(os.str());
    }
  }
  return Phi;
}

Matrix gen_dictionary(Index C, Index N_phi, double coherence_max,
                      std::uint64_t seed) {
  Rng rng(seed);
  return gen_dictionary(C, N_phi, coherence_max, rng);
}

double dictionary_coherence(const Matrix& Phi) {
  double best = 0.0;
  for (Index i = 0; i < Phi.cols(); ++i) {
    for (Index j = i + 1; j < Phi.cols(); ++j) {
      best = std::max(best, std::abs(Phi.col(i).dot(Phi.col(j))));
    }
  }
  return best;
}

Matrix activities_to_matrix(const std::vector<ActivitySpec>& acts,
                            Index N_phi, Index T) {
  Matrix X = Matrix::Zero(N_phi, T);
  for (const ActivitySpec& a : acts) {
    if (a.n < 0 || a.n >= N_phi) {
      throw std::invalid_argument("activities_to_matrix: atom out of range");
    }
    // Half-open window from the Heaviside difference, endpoints floored,
    // clipped to the sample range.
    const double half = 0.5 * a.d * static_cast<double>(T);
    const Index lo = std::max<Index>(
        0, static_cast<Index>(std::floor(a.t - half)));
    const Index hi = std::min<Index>(
        T, static_cast<Index>(std::floor(a.t + half)));
    for (Index j = lo; j < hi; ++j) {
      X(a.n, j) += a.alpha;
    }
  }
  return X;
}

std::pair<Matrix, std::vector<ActivitySpec>> gen_coefficients(
    const SynthSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<ActivitySpec> acts;
  acts.reserve(static_cast<std::size_t>(spec.M));
  for (Index m = 0; m < spec.M; ++m) {
    ActivitySpec a;
    a.n = static_cast<Index>(
        rng.uniform_index(static_cast<std::uint64_t>(spec.N_phi)));
    a.t = rng.uniform(0.0, static_cast<double>(spec.T));
    a.d = rng.uniform(spec.d_min, spec.d_max);
    a.alpha = spec.alpha_sigma * rng.normal();
    acts.push_back(a);
  }
  return {activities_to_matrix(acts, spec.N_phi, spec.T), std::move(acts)};
}

Matrix synthesize(const Matrix& Phi, const Matrix& X, double noise_sigma,
                  Rng& rng) {
  if (Phi.cols() != X.rows()) {
    throw invalid_dimension_error("synthesize: Phi.cols != X.rows");
  }
  Matrix Y = Phi * X;
  if (noise_sigma > 0.0) {
    // Column-major fill order, part of the determinism contract.
    for (Index j = 0; j < Y.cols(); ++j) {
      for (Index i = 0; i < Y.rows(); ++i) {
        Y(i, j) += noise_sigma * rng.normal();
      }
    }
  }
  return Y;
}

Dataset gen_dataset(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Dataset ds;
  ds.Phi = gen_dictionary(spec.C, spec.N_phi, spec.coherence_max, rng);
  ds.coherence = dictionary_coherence(ds.Phi);
  ds.X_true.reserve(static_cast<std::size_t>(spec.K));
  ds.Y.reserve(static_cast<std::size_t>(spec.K));
  for (Index k = 0; k < spec.K; ++k) {
    auto [X, acts] = gen_coefficients(spec, rng);
    ds.Y.push_back(synthesize(ds.Phi, X, spec.noise_sigma, rng));
    ds.X_true.push_back(std::move(X));
    ds.activities.push_back(std::move(acts));
  }
  return ds;
}

}  // namespace mssa
