#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fsc/lbfgs.hpp"
#include "fsc/patch.hpp"

namespace fsc {

// Objective: ||z - W^T x||^2 / noise^2 + sparsity * sum log(1 + (x_i / cauchy)^2)
struct InferenceConfig {
  double noise_scale = 1.0;
  double sparsity_weight = 0.1;
  double cauchy_scale = 0.1;
  std::size_t max_evals = 200;
  double grad_tol = 1e-6;
  std::size_t memory = 10;

  void validate() const;
  LbfgsOptions solver_options() const;
};

struct SparseCode {
  Vector coeffs;
  double objective = 0.0;
  std::size_t n_evals = 0;
};

struct ObjectiveValue {
  double value = 0.0;
  Vector gradient;
};

// Direct evaluation of the coding objective and its gradient in x.
ObjectiveValue objective(const Eigen::Ref<const Vector>& z, const Matrix& basis,
                         const Eigen::Ref<const Vector>& x, const InferenceConfig& cfg);

// Reusable encoder for one dictionary. When the dictionary is not
// overcomplete in pixels (m <= k) it caches the Gram matrix W W^T, so each
// objective evaluation costs O(m^2) instead of O(m k). Thread-safe for
// concurrent infer() calls.
class Encoder {
 public:
  Encoder(const Matrix& basis, const InferenceConfig& cfg);

  SparseCode infer(const Eigen::Ref<const Vector>& z, const std::optional<Vector>& x0 = std::nullopt) const;

  const Matrix& basis() const noexcept { return basis_; }
  const InferenceConfig& config() const noexcept { return cfg_; }

 private:
  const Matrix& basis_;
  InferenceConfig cfg_;
  bool use_gram_ = false;
  Matrix gram_;
};

SparseCode infer(const Eigen::Ref<const Vector>& z, const Matrix& basis, const InferenceConfig& cfg,
                 const std::optional<Vector>& x0 = std::nullopt);

// Infers codes for every column-vector observation in parallel.
std::vector<SparseCode> infer_all(const std::vector<Vector>& observations, const Matrix& basis,
                                  const InferenceConfig& cfg, std::size_t threads);

// Indices of the K largest magnitudes, largest first (ties go to the lower
// index).
std::vector<std::size_t> top_k_indices(const Vector& coeffs, std::size_t k);

// Keeps the K largest-magnitude coefficients (ties go to the lower index).
SparseCode top_k(const SparseCode& code, std::size_t k);

}  // namespace fsc
