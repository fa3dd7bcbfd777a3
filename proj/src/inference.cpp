#include "fsc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "fsc/error.hpp"
#include "fsc/parallel.hpp"

namespace fsc {

namespace {

double penalty(const Vector& x, const InferenceConfig& cfg, Vector& grad) {
  const double r2 = cfg.cauchy_scale * cfg.cauchy_scale;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    sum += std::log1p(xi * xi / r2);
    grad(i) += cfg.sparsity_weight * 2.0 * xi / (r2 + xi * xi);
  }
  return cfg.sparsity_weight * sum;
}

}  // namespace

void InferenceConfig::validate() const {
  if (!(noise_scale > 0.0) || !(sparsity_weight > 0.0) || !(cauchy_scale > 0.0) || !(grad_tol >= 0.0) ||
      max_evals < 1 || memory < 1)
    fail(ErrorCode::InvalidArgument, "inference config: scales must be positive and max_evals >= 1");
}

LbfgsOptions InferenceConfig::solver_options() const {
  LbfgsOptions opt;
  opt.memory = memory;
  opt.max_evals = max_evals;
  opt.grad_tol = grad_tol;
  return opt;
}

ObjectiveValue objective(const Eigen::Ref<const Vector>& z, const Matrix& basis,
                         const Eigen::Ref<const Vector>& x, const InferenceConfig& cfg) {
  require_dims(basis.cols() == z.size() && basis.rows() == x.size(),
               "objective: basis is " + std::to_string(basis.rows()) + "x" + std::to_string(basis.cols()) +
                   " but z has " + std::to_string(z.size()) + " and x has " + std::to_string(x.size()) +
                   " entries");
  const double inv_var = 1.0 / (cfg.noise_scale * cfg.noise_scale);
  const Vector residual = z - basis.transpose() * x;
  ObjectiveValue out;
  out.gradient = -2.0 * inv_var * (basis * residual);
  out.value = residual.squaredNorm() * inv_var + penalty(x, cfg, out.gradient);
  return out;
}

Encoder::Encoder(const Matrix& basis, const InferenceConfig& cfg) : basis_(basis), cfg_(cfg) {
  cfg_.validate();
  if (basis_.rows() == 0) fail(ErrorCode::InvalidArgument, "encoder: empty dictionary");
  const Vector norms = basis_.rowwise().norm();
  if ((norms.array() - 1.0).abs().maxCoeff() > 1e-6)
    spdlog::warn("encoder: dictionary rows are not unit-norm (max deviation {:.3g})",
                 (norms.array() - 1.0).abs().maxCoeff());
  use_gram_ = basis_.rows() <= basis_.cols();
  if (use_gram_) gram_ = basis_ * basis_.transpose();
}

SparseCode Encoder::infer(const Eigen::Ref<const Vector>& z, const std::optional<Vector>& x0) const {
  const Eigen::Index m = basis_.rows();
  require_dims(z.size() == basis_.cols(), "infer: observation has " + std::to_string(z.size()) +
                                              " pixels, dictionary atoms have " + std::to_string(basis_.cols()));
  Vector start = x0 ? *x0 : Vector::Zero(m);
  require_dims(start.size() == m, "infer: starting code has the wrong length");

  const double inv_var = 1.0 / (cfg_.noise_scale * cfg_.noise_scale);
  LbfgsResult res;
  if (use_gram_) {
    const Vector wz = basis_ * z;
    const double zz = z.squaredNorm();
    Vector gx(m);
    auto fn = [&](const Vector& x, Vector& grad) {
      gx.noalias() = gram_ * x;
      // ||z - W^T x||^2 = z.z - 2 x.Wz + x.Gx, clamped against cancellation.
      const double sq = std::max(0.0, zz - 2.0 * x.dot(wz) + x.dot(gx));
      grad = -2.0 * inv_var * (wz - gx);
      return sq * inv_var + penalty(x, cfg_, grad);
    };
    res = minimize_lbfgs(fn, std::move(start), cfg_.solver_options());
  } else {
    Vector residual(z.size());
    auto fn = [&](const Vector& x, Vector& grad) {
      residual.noalias() = z - basis_.transpose() * x;
      grad.noalias() = -2.0 * inv_var * (basis_ * residual);
      return residual.squaredNorm() * inv_var + penalty(x, cfg_, grad);
    };
    res = minimize_lbfgs(fn, std::move(start), cfg_.solver_options());
  }
  return SparseCode{std::move(res.x), res.value, res.n_evals};
}

SparseCode infer(const Eigen::Ref<const Vector>& z, const Matrix& basis, const InferenceConfig& cfg,
                 const std::optional<Vector>& x0) {
  return Encoder(basis, cfg).infer(z, x0);
}

std::vector<SparseCode> infer_all(const std::vector<Vector>& observations, const Matrix& basis,
                                  const InferenceConfig& cfg, std::size_t threads) {
  const Encoder encoder(basis, cfg);
  std::vector<SparseCode> codes(observations.size());
  parallel_for(observations.size(), threads, [&](std::size_t i) { codes[i] = encoder.infer(observations[i]); });
  return codes;
}

std::vector<std::size_t> top_k_indices(const Vector& coeffs, std::size_t k) {
  const auto m = static_cast<std::size_t>(coeffs.size());
  if (k < 1 || k > m) fail(ErrorCode::InvalidArgument, "top_k: K must lie in [1, m]");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(coeffs(static_cast<Eigen::Index>(a))) > std::abs(coeffs(static_cast<Eigen::Index>(b)));
  });
  order.resize(k);
  return order;
}

SparseCode top_k(const SparseCode& code, std::size_t k) {
  SparseCode out = code;
  out.coeffs.setZero();
  for (std::size_t i : top_k_indices(code.coeffs, k)) {
    const auto idx = static_cast<Eigen::Index>(i);
    out.coeffs(idx) = code.coeffs(idx);
  }
  return out;
}

}  // namespace fsc
