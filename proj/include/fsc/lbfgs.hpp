#pragma once

#include <cstddef>
#include <functional>

#include "fsc/patch.hpp"

namespace fsc {

struct LbfgsOptions {
  std::size_t memory = 10;      // correction pairs kept
  std::size_t max_evals = 200;  // hard cap on objective evaluations
  double grad_tol = 1e-6;       // stop when ||g||_inf <= grad_tol
  double c1 = 1e-4;             // sufficient decrease
  double c2 = 0.9;              // curvature (strong Wolfe)
  std::size_t max_line_search = 25;
};

enum class LbfgsStatus {
  Converged,
  EvalLimit,
  LineSearchFailed,
};

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  Vector gradient;
  std::size_t n_evals = 0;
  std::size_t iterations = 0;
  LbfgsStatus status = LbfgsStatus::Converged;
};

// Returns f(x) and writes the gradient into `grad` (already sized).
using ObjectiveFn = std::function<double(const Vector& x, Vector& grad)>;

// Limited-memory BFGS with a strong-Wolfe line search. Never returns a point
// worse than x0. Throws NonFiniteObjective if f or its gradient is not finite.
LbfgsResult minimize_lbfgs(const ObjectiveFn& fn, Vector x0, const LbfgsOptions& options);

}  // namespace fsc
