#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fsc/data.hpp"
#include "fsc/inference.hpp"
#include "fsc/learning.hpp"

namespace fsc {

// W^T x reshaped to a square patch.
Patch reconstruct(const Matrix& basis, const SparseCode& code);

double rmse(const Eigen::Ref<const Vector>& target, const Eigen::Ref<const Vector>& estimate);

struct RmsePoint {
  std::size_t k = 0;
  double mean_rmse = 0.0;
};

struct RmseCurve {
  std::string model;
  std::size_t m = 0;
  std::size_t train_size = 0;
  std::size_t n_patches = 0;
  std::uint64_t seed = 0;
  std::vector<RmsePoint> points;
};

// Per-patch top-K reconstruction RMSE: row n, column j holds the error of
// patch n keeping the ks[j] largest coefficients of its full-dictionary code.
Matrix topk_rmse_table(const Matrix& basis, std::span<const WhitenedPatch> test, std::span<const std::size_t> ks,
                       const InferenceConfig& cfg, std::size_t threads);

// Mean over test patches of topk_rmse_table; ks must be strictly increasing
// within [1, m].
RmseCurve rmse_curve(const Matrix& basis, std::span<const WhitenedPatch> test, std::span<const std::size_t> ks,
                     const InferenceConfig& cfg, std::size_t threads);

struct SweepConfig {
  TransformPrior prior;
  TrainConfig train;
  std::vector<std::string> models = {"factored", "baseline"};
};

// For every training size (a prefix of `train`), trains each model family
// and evaluates its full-code (K = m) RMSE on `test`. Curves come out in
// model-major, size-minor order, one point each.
std::vector<RmseCurve> data_efficiency_sweep(std::span<const WhitenedPatch> train,
                                             std::span<const WhitenedPatch> test,
                                             std::span<const std::size_t> train_sizes, std::size_t m,
                                             const SweepConfig& cfg);

// Columns: model,m,train_size,K,mean_rmse,n_patches,seed.
void write_rmse_csv(std::ostream& out, std::span<const RmseCurve> curves, bool header = true);

// Powers of two from 1 up to and including m when m is one.
std::vector<std::size_t> power_of_two_ks(std::size_t m);

}  // namespace fsc
