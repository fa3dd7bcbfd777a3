#include "fsc/learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "fsc/error.hpp"
#include "fsc/rng.hpp"

namespace fsc {

namespace {

std::size_t common_side(std::span<const WhitenedPatch> patches) {
  if (patches.empty()) fail(ErrorCode::InvalidArgument, "training needs a non-empty dataset");
  const std::size_t side = patches.front().patch.side();
  for (const auto& p : patches)
    require_dims(p.patch.side() == side, "training patches must all have the same side");
  return side;
}

// Yields minibatches of patch indices, reshuffled every epoch. The last batch
// of an epoch may be short. Whole epochs run until both `epochs` and
// `min_steps` are reached.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t n, const TrainConfig& cfg) : order_(n), cfg_(cfg), rng_(cfg.seed, "order") {
    std::iota(order_.begin(), order_.end(), 0);
  }

  template <typename Fn>
  void run(Fn&& fn) {
    const std::size_t n = order_.size();
    std::size_t steps = 0;
    for (std::size_t epoch = 0; epoch < cfg_.epochs || steps < cfg_.min_steps; ++epoch) {
      std::shuffle(order_.begin(), order_.end(), rng_.engine());
      for (std::size_t begin = 0; begin < n; begin += cfg_.minibatch_size) {
        const std::size_t end = std::min(n, begin + cfg_.minibatch_size);
        fn(std::span<const std::size_t>(order_.data() + begin, end - begin));
        ++steps;
      }
    }
  }

 private:
  std::vector<std::size_t> order_;
  const TrainConfig& cfg_;
  Rng rng_;
};

struct BatchStats {
  Matrix cotangents;
  TrainLogEntry entry;
};

BatchStats code_batch(const Matrix& basis, std::span<const WhitenedPatch> patches, std::span<const std::size_t> idx,
                      const TrainConfig& cfg) {
  std::vector<Vector> zs;
  zs.reserve(idx.size());
  for (std::size_t i : idx) zs.emplace_back(patches[i].patch.vec());
  const auto codes = infer_all(zs, basis, cfg.inference, cfg.threads);

  BatchStats stats;
  stats.cotangents = basis_cotangents(basis, zs, codes, cfg.inference.noise_scale);
  double obj = 0.0, rmse = 0.0;
  for (std::size_t n = 0; n < zs.size(); ++n) {
    obj += codes[n].objective;
    const Vector r = zs[n] - basis.transpose() * codes[n].coeffs;
    rmse += std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
  }
  stats.entry.mean_objective = obj / static_cast<double>(zs.size());
  stats.entry.mean_rmse = rmse / static_cast<double>(zs.size());
  return stats;
}

}  // namespace

void TrainConfig::validate() const {
  if (minibatch_size < 1 || epochs < 1 || !(learning_rate > 0.0) || !(baseline_learning_rate > 0.0))
    fail(ErrorCode::InvalidArgument, "train config: batch size, epochs and learning rates must be positive");
  inference.validate();
}

double frozen_code_loss(const Matrix& basis, std::span<const Vector> observations, std::span<const SparseCode> codes,
                        double noise_scale) {
  require_dims(observations.size() == codes.size(), "frozen_code_loss: one code per observation");
  double loss = 0.0;
  for (std::size_t n = 0; n < observations.size(); ++n)
    loss += (observations[n] - basis.transpose() * codes[n].coeffs).squaredNorm();
  return loss / (noise_scale * noise_scale);
}

Matrix basis_cotangents(const Matrix& basis, std::span<const Vector> observations, std::span<const SparseCode> codes,
                        double noise_scale) {
  require_dims(observations.size() == codes.size(), "basis_cotangents: one code per observation");
  const double coef = -2.0 / (noise_scale * noise_scale);
  Matrix cot = Matrix::Zero(basis.rows(), basis.cols());
  Vector residual(basis.cols());
  for (std::size_t n = 0; n < observations.size(); ++n) {
    require_dims(observations[n].size() == basis.cols() && codes[n].coeffs.size() == basis.rows(),
                 "basis_cotangents: shape mismatch");
    residual.noalias() = observations[n] - basis.transpose() * codes[n].coeffs;
    cot.noalias() += (coef * codes[n].coeffs) * residual.transpose();
  }
  return cot;
}

FactoredTrainResult train_factored(std::span<const WhitenedPatch> patches, const TransformPrior& prior, std::size_t m,
                                   const TrainConfig& cfg, const TrainObserver& observer) {
  cfg.validate();
  const std::size_t side = common_side(patches);
  const std::size_t filter_side = cfg.filter_side ? cfg.filter_side : side;

  Rng init_rng(cfg.seed, "init");
  auto dict = FactoredDictionary::sample(GenericFilter::random(filter_side, init_rng), prior, m, side);
  Rng resample_rng(prior.seed, "resample");
  std::vector<TrainLogEntry> log;

  BatchSchedule(patches.size(), cfg).run([&](std::span<const std::size_t> batch) {
    BatchStats stats = code_batch(dict.basis(), patches, batch, cfg);
    const Patch grad = filter_gradient(dict, stats.cotangents);

    Patch stepped = dict.filter().patch();
    stepped.vec() -= cfg.learning_rate * grad.vec();
    if (!stepped.all_finite()) fail(ErrorCode::NonFiniteObjective, "filter update became non-finite");
    GenericFilter next(std::move(stepped));
    stats.entry.update_norm = (next.patch().vec() - dict.filter().patch().vec()).norm();

    std::vector<TransformParams> supports = dict.supports();
    for (;;) {
      try {
        dict = FactoredDictionary(next, supports, side);
        break;
      } catch (const ZeroBasisVector& e) {
        spdlog::warn("support {} lost the filter after an update; resampling it", e.row());
        supports[e.row()] = sample_support(prior, resample_rng);
      }
    }

    stats.entry.step = log.size();
    log.push_back(stats.entry);
    if (observer) observer(stats.entry);
  });
  return {std::move(dict), std::move(log)};
}

BaselineTrainResult train_baseline(std::span<const WhitenedPatch> patches, std::size_t m, const TrainConfig& cfg,
                                   const TrainObserver& observer) {
  cfg.validate();
  if (m == 0) fail(ErrorCode::InvalidArgument, "baseline dictionary needs m >= 1");
  const std::size_t side = common_side(patches);
  Rng init_rng(cfg.seed, "init");
  auto dict = BaselineDictionary::random(m, side, init_rng);
  std::vector<TrainLogEntry> log;

  BatchSchedule(patches.size(), cfg).run([&](std::span<const std::size_t> batch) {
    BatchStats stats = code_batch(dict.basis(), patches, batch, cfg);
    const Matrix step = -cfg.baseline_learning_rate * stats.cotangents;
    const Matrix before = dict.basis();
    dict.apply_step(step);
    stats.entry.update_norm = (dict.basis() - before).norm();
    stats.entry.step = log.size();
    log.push_back(stats.entry);
    if (observer) observer(stats.entry);
  });
  return {std::move(dict), std::move(log)};
}

void write_train_log_csv(const std::filesystem::path& file, std::span<const TrainLogEntry> log) {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::IoError, "cannot write " + file.string());
  out.precision(17);
  out << "step,mean_objective,mean_rmse,update_norm\n";
  for (const auto& e : log) out << e.step << ',' << e.mean_objective << ',' << e.mean_rmse << ',' << e.update_norm << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed for " + file.string());
}

}  // namespace fsc
