#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include <Eigen/Core>

#include "fsc/patch.hpp"

namespace fsc {

// One affine transformation: log vertical scale, log horizontal scale,
// rotation (radians), vertical and horizontal translation (pixels).
struct TransformParams {
  double alpha = 0.0;
  double beta = 0.0;
  double theta = 0.0;
  double delta = 0.0;
  double eta = 0.0;

  bool all_finite() const;
  friend bool operator==(const TransformParams&, const TransformParams&) = default;
};

using AffineMatrix = Eigen::Matrix3d;

// translate(delta, eta) * rotate(theta) * scale(e^alpha, e^beta). Maps a
// centered input coordinate (u, v) = (row, col) to the centered output (r, c).
AffineMatrix compose_matrix(const TransformParams& params);

// Closed-form inverse of compose_matrix (maps output coordinates back to input).
AffineMatrix inverse_matrix(const TransformParams& params);

// A single bilinear interpolation tap: output pixel `out` reads input pixel
// `in` with weight `weight`.
struct WarpTap {
  std::size_t out;
  std::size_t in;
  double weight;
};

// Calls fn(tap) for every nonzero bilinear tap of the warp from an
// in_side x in_side patch to an out_side x out_side patch. Taps of one output
// pixel are visited consecutively. warp and warp_adjoint are both defined by
// this enumeration, which keeps them exact transposes of each other.
template <typename Fn>
void for_each_tap(const TransformParams& params, std::size_t in_side, std::size_t out_side, Fn&& fn);

// Inverse-mapped bilinear warp; input pixels outside the patch read as zero.
Patch warp(const Patch& input, const TransformParams& params, std::size_t out_side);

// Transpose of the linear map implemented by warp(., params).
Patch warp_adjoint(const Patch& cotangent, const TransformParams& params, std::size_t in_side);

namespace detail {

// Source coordinates within this distance of an integer grid line snap onto
// it, so that rotations by multiples of pi/2 hit pixels exactly despite
// cos(pi/2) != 0 in floating point.
inline constexpr double kGridSnap = 1e-9;

double snap_to_grid(double coord) noexcept;

}  // namespace detail

template <typename Fn>
void for_each_tap(const TransformParams& params, std::size_t in_side, std::size_t out_side, Fn&& fn) {
  const AffineMatrix inv = inverse_matrix(params);
  const double out_center = (static_cast<double>(out_side) - 1.0) / 2.0;
  const double in_center = (static_cast<double>(in_side) - 1.0) / 2.0;
  const auto n_in = static_cast<long>(in_side);

  for (std::size_t i = 0; i < out_side; ++i) {
    const double r = static_cast<double>(i) - out_center;
    for (std::size_t j = 0; j < out_side; ++j) {
      const double c = static_cast<double>(j) - out_center;
      const double u = detail::snap_to_grid(inv(0, 0) * r + inv(0, 1) * c + inv(0, 2) + in_center);
      const double v = detail::snap_to_grid(inv(1, 0) * r + inv(1, 1) * c + inv(1, 2) + in_center);

      const double u0 = std::floor(u);
      const double v0 = std::floor(v);
      if (u0 < -1.0 || v0 < -1.0 || u0 >= static_cast<double>(n_in) ||
          v0 >= static_cast<double>(n_in))
        continue;
      const double fu = u - u0;
      const double fv = v - v0;
      const auto iu = static_cast<long>(u0);
      const auto iv = static_cast<long>(v0);
      const std::size_t out = i * out_side + j;

      const std::array<double, 4> weights = {(1.0 - fu) * (1.0 - fv), (1.0 - fu) * fv,
                                             fu * (1.0 - fv), fu * fv};
      const std::array<long, 4> rows = {iu, iu, iu + 1, iu + 1};
      const std::array<long, 4> cols = {iv, iv + 1, iv, iv + 1};
      for (int t = 0; t < 4; ++t) {
        if (weights[t] == 0.0) continue;
        if (rows[t] < 0 || rows[t] >= n_in || cols[t] < 0 || cols[t] >= n_in) continue;
        fn(WarpTap{out, static_cast<std::size_t>(rows[t] * n_in + cols[t]), weights[t]});
      }
    }
  }
}

}  // namespace fsc
