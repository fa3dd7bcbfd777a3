#pragma once

#include <cstdint>
#include <vector>

#include "fsc/patch.hpp"
#include "fsc/rng.hpp"
#include "fsc/transforms.hpp"

namespace fsc {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Uniform prior over transformation tuples; supports are drawn i.i.d. from it.
struct TransformPrior {
  Interval alpha{-0.4, 0.5};
  Interval beta{-0.4, 0.5};
  Interval theta{0.0, 6.283185307179586};
  Interval delta{-15.0, 15.0};
  Interval eta{-15.0, 15.0};
  std::uint64_t seed = 0;

  // Default ranges with translations scaled to a patch of the given side
  // (+-15 pixels at side 32).
  static TransformPrior for_side(std::size_t side, std::uint64_t seed = 0);

  // Throws InvalidArgument when a range is reversed or not finite.
  void validate() const;
};

std::vector<TransformParams> sample_supports(const TransformPrior& prior, std::size_t m);
TransformParams sample_support(const TransformPrior& prior, Rng& rng);

// The single learned template u; unit L2 norm.
class GenericFilter {
 public:
  GenericFilter() = default;
  // Normalizes `patch`; throws InvalidArgument if it is zero or non-finite.
  explicit GenericFilter(Patch patch);

  // Centered Gaussian noise, unit-normalized.
  static GenericFilter random(std::size_t side, Rng& rng);

  const Patch& patch() const noexcept { return patch_; }
  std::size_t side() const noexcept { return patch_.side(); }

 private:
  Patch patch_;
};

// Atoms produced by warping the filter, plus the pre-normalization norms the
// gradient needs.
struct Materialized {
  Matrix basis;  // m x k, unit-norm rows
  Vector norms;  // ||warp(u, w_i)|| before normalization
};

inline constexpr double kZeroBasisThreshold = 1e-12;

// Row i = warp(u, supports[i], out_side) / ||.||. Throws ZeroBasisVector(i)
// when a warp leaves no energy on the output patch.
Materialized materialize(const GenericFilter& filter, const std::vector<TransformParams>& supports,
                         std::size_t out_side);

class FactoredDictionary {
 public:
  FactoredDictionary() = default;
  FactoredDictionary(GenericFilter filter, std::vector<TransformParams> supports, std::size_t out_side);

  // Draws m supports from `prior` and replaces any whose warp vanishes.
  static FactoredDictionary sample(GenericFilter filter, const TransformPrior& prior, std::size_t m,
                                   std::size_t out_side);

  const GenericFilter& filter() const noexcept { return filter_; }
  const std::vector<TransformParams>& supports() const noexcept { return supports_; }
  const Matrix& basis() const noexcept { return basis_; }
  const Vector& norms() const noexcept { return norms_; }
  std::size_t out_side() const noexcept { return out_side_; }
  std::size_t size() const noexcept { return supports_.size(); }
  std::size_t pixels() const noexcept { return out_side_ * out_side_; }

  // Replaces the filter and re-materializes every atom.
  void set_filter(GenericFilter filter);

 private:
  void refresh();

  GenericFilter filter_;
  std::vector<TransformParams> supports_;
  std::size_t out_side_ = 0;
  Matrix basis_;
  Vector norms_;
};

// Gradient of a loss with respect to the (pre-normalization) filter, given the
// loss gradient with respect to each materialized atom (one row per atom).
Patch filter_gradient(const FactoredDictionary& dict, const Matrix& basis_cotangents);

// Conventional dictionary: free m x k matrix with unit-norm rows.
class BaselineDictionary {
 public:
  BaselineDictionary() = default;
  explicit BaselineDictionary(Matrix basis);

  // Gaussian noise rows, unit-normalized.
  static BaselineDictionary random(std::size_t m, std::size_t side, Rng& rng);

  // Adopts rows that are already unit-norm (to 1e-9) without touching them,
  // so stored dictionaries reload bit-exactly.
  static BaselineDictionary from_unit_rows(Matrix basis);

  const Matrix& basis() const noexcept { return basis_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(basis_.rows()); }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(basis_.cols()); }
  std::size_t side() const { return side_for_pixels(pixels()); }

  // basis += step, then renormalize rows.
  void apply_step(const Matrix& step);

 private:
  void normalize_rows();
  Matrix basis_;
};

}  // namespace fsc
