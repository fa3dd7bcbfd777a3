#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace fsc {

using Vector = Eigen::VectorXd;
// Dictionaries are stored one atom per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Square image patch, row-major. Pixel (0,0) is the top-left corner; the
// geometric origin used by the transforms sits at ((S-1)/2, (S-1)/2).
class Patch {
 public:
  Patch() = default;
  explicit Patch(std::size_t side) : side_(side), values_(side * side, 0.0) {}
  Patch(std::size_t side, std::vector<double> values);

  static Patch from_span(std::size_t side, std::span<const double> values);

  std::size_t side() const noexcept { return side_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& at(std::size_t row, std::size_t col) { return values_[row * side_ + col]; }
  double at(std::size_t row, std::size_t col) const { return values_[row * side_ + col]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  Eigen::Map<Vector> vec() { return {values_.data(), static_cast<Eigen::Index>(values_.size())}; }
  Eigen::Map<const Vector> vec() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

  double norm() const { return vec().norm(); }
  bool all_finite() const;

  friend bool operator==(const Patch&, const Patch&) = default;

 private:
  std::size_t side_ = 0;
  std::vector<double> values_;
};

// Integer side of a square patch with k pixels; throws DimensionMismatch when k
// is not a perfect square.
std::size_t side_for_pixels(std::size_t k);

}  // namespace fsc
