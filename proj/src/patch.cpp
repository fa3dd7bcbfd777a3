#include "fsc/patch.hpp"

#include <cmath>
#include <string>

#include "fsc/error.hpp"

namespace fsc {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroBasisVector: return "ZeroBasisVector";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::MissingData: return "MissingData";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Patch::Patch(std::size_t side, std::vector<double> values) : side_(side), values_(std::move(values)) {
  require_dims(values_.size() == side_ * side_,
               "patch of side " + std::to_string(side_) + " needs " + std::to_string(side_ * side_) +
                   " values, got " + std::to_string(values_.size()));
}

Patch Patch::from_span(std::size_t side, std::span<const double> values) {
  return Patch(side, std::vector<double>(values.begin(), values.end()));
}

bool Patch::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::size_t side_for_pixels(std::size_t k) {
  auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(k))));
  require_dims(side * side == k, std::to_string(k) + " pixels do not form a square patch");
  return side;
}

}  // namespace fsc
