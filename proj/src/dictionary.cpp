#include "fsc/dictionary.hpp"

#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "fsc/error.hpp"

namespace fsc {

namespace {

void check_interval(const Interval& iv, const char* name) {
  if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi)
    fail(ErrorCode::InvalidArgument, std::string("transform prior: bad ") + name + " range");
}

constexpr int kMaxResamples = 1000;

}  // namespace

TransformPrior TransformPrior::for_side(std::size_t side, std::uint64_t seed) {
  TransformPrior prior;
  const double reach = 15.0 * static_cast<double>(side) / 32.0;
  prior.delta = {-reach, reach};
  prior.eta = {-reach, reach};
  prior.seed = seed;
  return prior;
}

void TransformPrior::validate() const {
  check_interval(alpha, "alpha");
  check_interval(beta, "beta");
  check_interval(theta, "theta");
  check_interval(delta, "delta");
  check_interval(eta, "eta");
}

TransformParams sample_support(const TransformPrior& prior, Rng& rng) {
  TransformParams p;
  p.alpha = rng.uniform(prior.alpha.lo, prior.alpha.hi);
  p.beta = rng.uniform(prior.beta.lo, prior.beta.hi);
  p.theta = rng.uniform(prior.theta.lo, prior.theta.hi);
  p.delta = rng.uniform(prior.delta.lo, prior.delta.hi);
  p.eta = rng.uniform(prior.eta.lo, prior.eta.hi);
  return p;
}

std::vector<TransformParams> sample_supports(const TransformPrior& prior, std::size_t m) {
  prior.validate();
  if (m == 0) fail(ErrorCode::InvalidArgument, "sample_supports: m must be positive");
  Rng rng(prior.seed, "supports");
  std::vector<TransformParams> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(sample_support(prior, rng));
  return out;
}

GenericFilter::GenericFilter(Patch patch) : patch_(std::move(patch)) {
  const double n = patch_.norm();
  if (!std::isfinite(n) || n < kZeroBasisThreshold)
    fail(ErrorCode::InvalidArgument, "generic filter must be finite and nonzero");
  patch_.vec() /= n;
}

GenericFilter GenericFilter::random(std::size_t side, Rng& rng) {
  Patch p(side);
  for (double& v : p.values()) v = rng.normal();
  p.vec().array() -= p.vec().mean();
  return GenericFilter(std::move(p));
}

Materialized materialize(const GenericFilter& filter, const std::vector<TransformParams>& supports,
                         std::size_t out_side) {
  const auto m = static_cast<Eigen::Index>(supports.size());
  const auto k = static_cast<Eigen::Index>(out_side * out_side);
  Materialized result{Matrix(m, k), Vector(m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const Patch w = warp(filter.patch(), supports[static_cast<std::size_t>(i)], out_side);
    const double n = w.norm();
    if (!(n >= kZeroBasisThreshold)) throw ZeroBasisVector(static_cast<std::size_t>(i));
    result.basis.row(i) = w.vec().transpose() / n;
    result.norms(i) = n;
  }
  return result;
}

FactoredDictionary::FactoredDictionary(GenericFilter filter, std::vector<TransformParams> supports,
                                       std::size_t out_side)
    : filter_(std::move(filter)), supports_(std::move(supports)), out_side_(out_side) {
  if (supports_.empty()) fail(ErrorCode::InvalidArgument, "factored dictionary needs m >= 1");
  if (out_side_ == 0) fail(ErrorCode::InvalidArgument, "factored dictionary needs out_side >= 1");
  refresh();
}

FactoredDictionary FactoredDictionary::sample(GenericFilter filter, const TransformPrior& prior,
                                              std::size_t m, std::size_t out_side) {
  prior.validate();
  if (m == 0) fail(ErrorCode::InvalidArgument, "factored dictionary needs m >= 1");
  Rng rng(prior.seed, "supports");
  std::vector<TransformParams> supports;
  supports.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (int attempt = 0;; ++attempt) {
      TransformParams p = sample_support(prior, rng);
      const double n = warp(filter.patch(), p, out_side).norm();
      if (n >= kZeroBasisThreshold) {
        supports.push_back(p);
        break;
      }
      if (attempt + 1 >= kMaxResamples) throw ZeroBasisVector(i);
      spdlog::debug("support {} warped off the patch; resampling", i);
    }
  }
  return FactoredDictionary(std::move(filter), std::move(supports), out_side);
}

void FactoredDictionary::set_filter(GenericFilter filter) {
  filter_ = std::move(filter);
  refresh();
}

void FactoredDictionary::refresh() {
  auto mat = materialize(filter_, supports_, out_side_);
  basis_ = std::move(mat.basis);
  norms_ = std::move(mat.norms);
}

Patch filter_gradient(const FactoredDictionary& dict, const Matrix& basis_cotangents) {
  require_dims(basis_cotangents.rows() == dict.basis().rows() &&
                   basis_cotangents.cols() == dict.basis().cols(),
               "filter_gradient: cotangent shape differs from basis shape");
  const std::size_t in_side = dict.filter().side();
  const std::size_t out_side = dict.out_side();
  Patch grad(in_side);
  Patch projected(out_side);
  auto dst = grad.values();
  for (Eigen::Index i = 0; i < dict.basis().rows(); ++i) {
    const auto g = basis_cotangents.row(i);
    if (g.isZero(0.0)) continue;
    const auto w = dict.basis().row(i);
    projected.vec() = (g - w * w.dot(g)).transpose() / dict.norms()(i);
    auto src = projected.values();
    for_each_tap(dict.supports()[static_cast<std::size_t>(i)], in_side, out_side,
                 [&](const WarpTap& tap) { dst[tap.in] += tap.weight * src[tap.out]; });
  }
  return grad;
}

BaselineDictionary::BaselineDictionary(Matrix basis) : basis_(std::move(basis)) {
  if (basis_.rows() == 0 || basis_.cols() == 0)
    fail(ErrorCode::InvalidArgument, "baseline dictionary must be non-empty");
  normalize_rows();
}

BaselineDictionary BaselineDictionary::random(std::size_t m, std::size_t side, Rng& rng) {
  Matrix basis(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(side * side));
  for (Eigen::Index i = 0; i < basis.rows(); ++i)
    for (Eigen::Index j = 0; j < basis.cols(); ++j) basis(i, j) = rng.normal();
  return BaselineDictionary(std::move(basis));
}

BaselineDictionary BaselineDictionary::from_unit_rows(Matrix basis) {
  if (basis.rows() == 0 || basis.cols() == 0) fail(ErrorCode::InvalidArgument, "baseline dictionary must be non-empty");
  for (Eigen::Index i = 0; i < basis.rows(); ++i)
    if (!(std::abs(basis.row(i).norm() - 1.0) <= 1e-9))
      fail(ErrorCode::InvalidArgument, "baseline row " + std::to_string(i) + " is not unit-norm");
  BaselineDictionary out;
  out.basis_ = std::move(basis);
  return out;
}

void BaselineDictionary::apply_step(const Matrix& step) {
  require_dims(step.rows() == basis_.rows() && step.cols() == basis_.cols(),
               "baseline update shape differs from basis shape");
  basis_ += step;
  normalize_rows();
}

void BaselineDictionary::normalize_rows() {
  for (Eigen::Index i = 0; i < basis_.rows(); ++i) {
    const double n = basis_.row(i).norm();
    if (!std::isfinite(n)) fail(ErrorCode::NonFiniteObjective, "baseline basis became non-finite");
    if (n < kZeroBasisThreshold) throw ZeroBasisVector(static_cast<std::size_t>(i));
    basis_.row(i) /= n;
  }
}

}  // namespace fsc
