#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <variant>

#include "fsc/dictionary.hpp"

namespace fsc {

// A trained model as stored on disk, plus the whitening scale fitted on its
// training data (applied unchanged to data coded with it).
struct StoredDictionary {
  std::variant<FactoredDictionary, BaselineDictionary> model;
  double data_scale = 1.0;
  std::uint64_t train_size = 0;  // patches it was trained on (0: unknown)
  std::uint64_t seed = 0;        // training seed

  bool is_factored() const noexcept { return std::holds_alternative<FactoredDictionary>(model); }
  const Matrix& basis() const;
  std::size_t side() const;
};

// Dictionary container, little-endian throughout:
//
//   offset  size  field
//        0     8  magic "FSCDICT\0"
//        8     4  u32 format version (1)
//       12     2  u16 kind: 1 factored, 2 baseline
//       14     2  u16 flags: bit 0 = materialized basis present
//       16     8  u64 filter side S_u (0 for baseline)
//       24     8  u64 observation side S
//       32     8  u64 number of atoms m
//       40     8  f64 whitening scale
//       48     8  u64 training-set size
//       56     8  u64 training seed
//       64        f64[S_u*S_u] filter, f64[m*5] supports (alpha, beta,
//                 theta, delta, eta), then f64[m*S*S] basis if flagged
//
// Baseline files always carry the basis. Factored files are re-materialized
// on load; a stored basis must agree with it to 1e-9.
inline constexpr std::array<char, 8> kDictionaryMagic = {'F', 'S', 'C', 'D', 'I', 'C', 'T', '\0'};
inline constexpr std::uint32_t kDictionaryVersion = 1;

void save_dictionary(const std::filesystem::path& file, const StoredDictionary& dict, bool include_basis = true);
StoredDictionary load_dictionary(const std::filesystem::path& file);

}  // namespace fsc
