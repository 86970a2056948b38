#pragma once

#include <stdexcept>
#include <string>

namespace mssa {

// Dimension or shape mismatch between operands.
class invalid_dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Base for numeric failures (ill-conditioning, divergence, ...).
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An element-wise divisor fell below the configured floor.
class ill_conditioned_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

// Non-finite values appeared during iterations.
class divergence_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

// Least-squares refit on a rank-deficient active set.
class rank_deficiency_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

// Penalty-initialization heuristic found no usable grid pair.
class heuristic_failure_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

// Dictionary resampling could not meet the coherence target.
class coherence_infeasible_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

// High-precision reference solve did not converge.
class reference_failure_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

// Metric undefined for the given inputs (e.g. zero ground truth).
class undefined_metric_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File I/O or format failure.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mssa
