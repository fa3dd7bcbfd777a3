#include "fsc/evaluation.hpp"

#include <cmath>
#include <ostream>

#include "fsc/error.hpp"
#include "fsc/parallel.hpp"

namespace fsc {

Patch reconstruct(const Matrix& basis, const SparseCode& code) {
  require_dims(code.coeffs.size() == basis.rows(), "reconstruct: code has " + std::to_string(code.coeffs.size()) +
                                                      " coefficients for " + std::to_string(basis.rows()) + " atoms");
  Patch out(side_for_pixels(static_cast<std::size_t>(basis.cols())));
  out.vec().noalias() = basis.transpose() * code.coeffs;
  return out;
}

double rmse(const Eigen::Ref<const Vector>& target, const Eigen::Ref<const Vector>& estimate) {
  require_dims(target.size() == estimate.size() && target.size() > 0, "rmse: size mismatch");
  return std::sqrt((target - estimate).squaredNorm() / static_cast<double>(target.size()));
}

namespace {

void check_ks(std::span<const std::size_t> ks, std::size_t m) {
  if (ks.empty()) fail(ErrorCode::InvalidArgument, "need at least one K");
  for (std::size_t j = 0; j < ks.size(); ++j) {
    if (ks[j] < 1 || ks[j] > m) fail(ErrorCode::InvalidArgument, "K = " + std::to_string(ks[j]) + " outside [1, m]");
    if (j > 0 && ks[j] <= ks[j - 1]) fail(ErrorCode::InvalidArgument, "K values must be strictly increasing");
  }
}

}  // namespace

Matrix topk_rmse_table(const Matrix& basis, std::span<const WhitenedPatch> test, std::span<const std::size_t> ks,
                       const InferenceConfig& cfg, std::size_t threads) {
  check_ks(ks, static_cast<std::size_t>(basis.rows()));
  const Encoder encoder(basis, cfg);
  Matrix table(static_cast<Eigen::Index>(test.size()), static_cast<Eigen::Index>(ks.size()));
  parallel_for(test.size(), threads, [&](std::size_t n) {
    const auto z = test[n].patch.vec();
    const SparseCode code = encoder.infer(z);
    for (std::size_t j = 0; j < ks.size(); ++j)
      table(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) =
          rmse(z, reconstruct(basis, top_k(code, ks[j])).vec());
  });
  return table;
}

RmseCurve rmse_curve(const Matrix& basis, std::span<const WhitenedPatch> test, std::span<const std::size_t> ks,
                     const InferenceConfig& cfg, std::size_t threads) {
  if (test.empty()) fail(ErrorCode::InvalidArgument, "rmse_curve: no test patches");
  const Matrix table = topk_rmse_table(basis, test, ks, cfg, threads);
  RmseCurve curve;
  curve.m = static_cast<std::size_t>(basis.rows());
  curve.n_patches = test.size();
  for (std::size_t j = 0; j < ks.size(); ++j) {
    double sum = 0.0;
    for (Eigen::Index n = 0; n < table.rows(); ++n) sum += table(n, static_cast<Eigen::Index>(j));
    curve.points.push_back({ks[j], sum / static_cast<double>(table.rows())});
  }
  return curve;
}

std::vector<RmseCurve> data_efficiency_sweep(std::span<const WhitenedPatch> train,
                                             std::span<const WhitenedPatch> test,
                                             std::span<const std::size_t> train_sizes, std::size_t m,
                                             const SweepConfig& cfg) {
  for (std::size_t n : train_sizes)
    if (n < 1 || n > train.size())
      fail(ErrorCode::MissingData, "training size " + std::to_string(n) + " exceeds the " +
                                       std::to_string(train.size()) + " available patches");
  const std::size_t ks[] = {m};
  std::vector<RmseCurve> curves;
  for (const auto& model : cfg.models) {
    for (std::size_t n : train_sizes) {
      const auto subset = train.first(n);
      Matrix basis;
      if (model == "factored")
        basis = train_factored(subset, cfg.prior, m, cfg.train).dictionary.basis();
      else if (model == "baseline")
        basis = train_baseline(subset, m, cfg.train).dictionary.basis();
      else
        fail(ErrorCode::InvalidArgument, "unknown model family '" + model + "'");
      RmseCurve curve = rmse_curve(basis, test, ks, cfg.train.inference, cfg.train.threads);
      curve.model = model;
      curve.train_size = n;
      curve.seed = cfg.train.seed;
      curves.push_back(std::move(curve));
    }
  }
  return curves;
}

void write_rmse_csv(std::ostream& out, std::span<const RmseCurve> curves, bool header) {
  const auto old_precision = out.precision(17);
  if (header) out << "model,m,train_size,K,mean_rmse,n_patches,seed\n";
  for (const auto& c : curves)
    for (const auto& p : c.points)
      out << c.model << ',' << c.m << ',' << c.train_size << ',' << p.k << ',' << p.mean_rmse << ',' << c.n_patches
          << ',' << c.seed << '\n';
  out.precision(old_precision);
}

std::vector<std::size_t> power_of_two_ks(std::size_t m) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= m; k *= 2) ks.push_back(k);
  return ks;
}

}  // namespace fsc
