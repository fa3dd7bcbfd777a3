#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "fsc/data.hpp"
#include "fsc/dictionary.hpp"
#include "fsc/inference.hpp"

namespace fsc {

struct TrainConfig {
  std::size_t minibatch_size = 100;
  double learning_rate = 2e-5;           // generic filter step
  double baseline_learning_rate = 1e-2;  // conventional dictionary step
  std::size_t epochs = 2;
  std::size_t min_steps = 0;  // keep adding epochs until this many updates
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t filter_side = 0;  // 0: same as the observations
  InferenceConfig inference;

  void validate() const;
};

struct TrainLogEntry {
  std::size_t step = 0;
  double mean_objective = 0.0;
  double mean_rmse = 0.0;
  double update_norm = 0.0;
};

// Called once per minibatch step; may be empty.
using TrainObserver = std::function<void(const TrainLogEntry&)>;

struct FactoredTrainResult {
  FactoredDictionary dictionary;
  std::vector<TrainLogEntry> log;
};

struct BaselineTrainResult {
  BaselineDictionary dictionary;
  std::vector<TrainLogEntry> log;
};

// Minibatch training of the generic filter: infer codes with the current
// atoms, back-propagate the frozen-code reconstruction loss through the
// normalization and warps, step u and renormalize, re-materialize.
FactoredTrainResult train_factored(std::span<const WhitenedPatch> patches, const TransformPrior& prior,
                                   std::size_t m, const TrainConfig& cfg, const TrainObserver& observer = {});

// Minibatch training of a free dictionary with the same alternating scheme.
BaselineTrainResult train_baseline(std::span<const WhitenedPatch> patches, std::size_t m, const TrainConfig& cfg,
                                   const TrainObserver& observer = {});

// Frozen-code reconstruction loss sum_n ||z_n - W^T x_n||^2 / noise^2.
double frozen_code_loss(const Matrix& basis, std::span<const Vector> observations, std::span<const SparseCode> codes,
                        double noise_scale);

// Gradient of frozen_code_loss with respect to each atom (row i:
// sum_n x_ni * (-2 / noise^2) * (z_n - W^T x_n)), accumulated in order.
Matrix basis_cotangents(const Matrix& basis, std::span<const Vector> observations, std::span<const SparseCode> codes,
                        double noise_scale);

void write_train_log_csv(const std::filesystem::path& file, std::span<const TrainLogEntry> log);

}  // namespace fsc
