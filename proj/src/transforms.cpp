#include "fsc/transforms.hpp"

#include <cmath>

#include "fsc/error.hpp"

namespace fsc {

bool TransformParams::all_finite() const {
  return std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(theta) && std::isfinite(delta) &&
         std::isfinite(eta);
}

AffineMatrix compose_matrix(const TransformParams& p) {
  AffineMatrix translate = AffineMatrix::Identity();
  translate(0, 2) = p.delta;
  translate(1, 2) = p.eta;

  const double cs = std::cos(p.theta);
  const double sn = std::sin(p.theta);
  AffineMatrix rotate = AffineMatrix::Identity();
  rotate(0, 0) = cs;
  rotate(0, 1) = -sn;
  rotate(1, 0) = sn;
  rotate(1, 1) = cs;

  AffineMatrix scale = AffineMatrix::Identity();
  scale(0, 0) = std::exp(p.alpha);
  scale(1, 1) = std::exp(p.beta);

  return translate * rotate * scale;
}

AffineMatrix inverse_matrix(const TransformParams& p) {
  // scale^-1 * rotate(-theta) * translate(-delta, -eta)
  const double cs = std::cos(p.theta);
  const double sn = std::sin(p.theta);
  const double sa = std::exp(-p.alpha);
  const double sb = std::exp(-p.beta);

  AffineMatrix inv = AffineMatrix::Identity();
  inv(0, 0) = sa * cs;
  inv(0, 1) = sa * sn;
  inv(1, 0) = -sb * sn;
  inv(1, 1) = sb * cs;
  inv(0, 2) = -(inv(0, 0) * p.delta + inv(0, 1) * p.eta);
  inv(1, 2) = -(inv(1, 0) * p.delta + inv(1, 1) * p.eta);
  return inv;
}

namespace detail {

double snap_to_grid(double coord) noexcept {
  const double nearest = std::round(coord);
  return std::abs(coord - nearest) < kGridSnap ? nearest : coord;
}

}  // namespace detail

Patch warp(const Patch& input, const TransformParams& params, std::size_t out_side) {
  if (out_side == 0) fail(ErrorCode::InvalidArgument, "warp: out_side must be positive");
  Patch out(out_side);
  auto src = input.values();
  auto dst = out.values();
  for_each_tap(params, input.side(), out_side,
               [&](const WarpTap& tap) { dst[tap.out] += tap.weight * src[tap.in]; });
  return out;
}

Patch warp_adjoint(const Patch& cotangent, const TransformParams& params, std::size_t in_side) {
  if (in_side == 0) fail(ErrorCode::InvalidArgument, "warp_adjoint: in_side must be positive");
  Patch out(in_side);
  auto src = cotangent.values();
  auto dst = out.values();
  for_each_tap(params, in_side, cotangent.side(),
               [&](const WarpTap& tap) { dst[tap.in] += tap.weight * src[tap.out]; });
  return out;
}

}  // namespace fsc
