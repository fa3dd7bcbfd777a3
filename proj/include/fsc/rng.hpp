#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fsc {

// Derives an independent seed for a named sub-stream ("supports", "init",
// "order", ...) from a run seed, so each consumer of randomness can be
// reproduced on its own.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::string_view stream) : engine_(derive_seed(seed, stream)) {}

  // Uniform on [lo, hi); returns lo when the interval is a single point.
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * std::generate_canonical<double, 53>(engine_);
  }
  double normal() { return normal_(engine_); }
  std::uint64_t next() { return engine_(); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fsc
