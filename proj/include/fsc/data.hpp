#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fsc/dictionary.hpp"
#include "fsc/patch.hpp"
#include "fsc/transforms.hpp"

namespace fsc {

// ---------------------------------------------------------------- CIFAR-10

inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarPixelBytes = 3 * kCifarSide * kCifarSide;
inline constexpr std::size_t kCifarRecordBytes = 1 + kCifarPixelBytes;
inline constexpr std::size_t kCifarRecordsPerBatch = 10000;

struct CifarImage {
  std::uint8_t label = 0;
  std::array<std::uint8_t, kCifarPixelBytes> pixels{};  // 1024 R, 1024 G, 1024 B
};

enum class Split { Train, Test };

Split parse_split(const std::string& name);
const char* to_string(Split split) noexcept;

// Reads whole 3073-byte records from one batch file. Throws FormatError if the
// file size is not a multiple of the record size, IoError if it cannot be read.
std::vector<CifarImage> read_cifar10_batch(const std::filesystem::path& file);

// `path` is either a single batch file or the directory holding
// data_batch_{1..5}.bin and test_batch.bin. Returns records [offset,
// offset + count) of the split in file order; MissingData if there are fewer.
std::vector<CifarImage> load_cifar10(const std::filesystem::path& path, std::size_t count, Split split,
                                     std::size_t offset = 0);

// Rec. 601 luminance scaled to [0, 1].
Patch to_grayscale(std::span<const std::uint8_t> rgb);

// ---------------------------------------------------------------- whitening

struct WhitenedPatch {
  Patch patch;
  std::string source;
  std::size_t index = 0;
};

// Cutoff of the radial filter as a fraction of the Nyquist frequency.
inline constexpr double kWhiteningCutoff = 0.78;

// Gain f * exp(-(f / f0)^4) at radial frequency f (cycles per patch).
double whitening_gain(double f, std::size_t side);

// Removes the mean and applies the radial whitening filter in the 2-D
// frequency domain. Linear; no variance rescaling.
Patch whiten(const Patch& patch);

// Multiplier giving unit pixel variance over a set of whitened patches.
double fit_unit_variance_scale(std::span<const Patch> whitened);

// whiten() every patch, then scale. A non-positive `scale` is fitted on these
// patches (training data); pass the training scale for held-out data.
std::vector<WhitenedPatch> whiten_dataset(std::span<const Patch> raw, const std::string& source, double& scale,
                                          std::size_t threads = 1);

// ---------------------------------------------------------------- synthetic data

struct GaborSpec {
  double wavelength = 5.0;      // pixels
  double orientation = 0.0;     // radians
  double phase = 0.0;           // radians
  double envelope_sigma = 2.0;  // pixels
  double aspect = 1.0;
  double amplitude = 1.0;

  void validate() const;
};

// Unit-norm Gabor centered on a side x side patch, times the amplitude.
Patch render_gabor(const GaborSpec& spec, std::size_t side);

struct SynthScene {
  Patch patch;
  std::vector<TransformParams> placements;  // ground truth
};

// Sum of warp(render_gabor(specs[i]), placements[i]) plus Gaussian noise.
SynthScene synth_gabor_scene(std::span<const GaborSpec> specs, std::span<const TransformParams> placements,
                             std::size_t side, double noise_sigma, std::uint64_t seed);

// Parameters of a synthetic Gabor-scene dataset; read from a key = value file.
struct SynthDatasetSpec {
  std::size_t side = 16;
  std::size_t gabors_per_scene = 3;
  GaborSpec gabor;
  double amplitude_min = 0.5;
  double amplitude_max = 1.5;
  double noise_sigma = 0.01;
  TransformPrior placement = TransformPrior::for_side(16);
  std::uint64_t seed = 7;

  static SynthDatasetSpec parse(const std::string& text);
  static SynthDatasetSpec load(const std::filesystem::path& file);
  std::string to_text() const;
  void validate() const;
};

// Scenes [offset, offset + count) of a split. Scene i depends only on (seed,
// split, i), so a smaller dataset is always a prefix of a larger one.
std::vector<SynthScene> generate_synth(const SynthDatasetSpec& spec, Split split, std::size_t count,
                                       std::size_t offset = 0);

// ---------------------------------------------------------------- datasets

// Raw (unwhitened) grayscale patches named by a URI:
//   cifar:<dir-or-file>    CIFAR-10 binary batches
//   synth:<spec-file>      synthetic Gabor scenes ("synth:" alone uses defaults)
std::vector<Patch> load_raw_patches(const std::string& uri, Split split, std::size_t count, std::size_t offset = 0);

// ---------------------------------------------------------------- PGM export

// Binary P5, maxval 255, min-max scaled (a constant patch maps to mid-grey).
void write_pgm(const std::filesystem::path& file, const Patch& patch);
// Tiles patches into a grid with a one-pixel border.
void write_pgm_grid(const std::filesystem::path& file, std::span<const Patch> patches, std::size_t columns);

}  // namespace fsc
