#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>

#include "doctest.h"
#include "fsc/data.hpp"
#include "fsc/error.hpp"
#include "support/oracles.hpp"

using namespace fsc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Record r: label r % 10, pixel byte j = (r * 31 + j * 7) % 256.
std::uint8_t pattern(std::size_t record, std::size_t j) { return std::uint8_t((record * 31 + j * 7) % 256); }

void write_batch(const fs::path& file, std::size_t records, std::size_t first = 0) {
  std::ofstream out(file, std::ios::binary);
  for (std::size_t r = first; r < first + records; ++r) {
    out.put(char(r % 10));
    for (std::size_t j = 0; j < kCifarPixelBytes; ++j) out.put(char(pattern(r, j)));
  }
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

Patch sinusoid(std::size_t side, double fr, double fc, double phase) {
  Patch p(side);
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t j = 0; j < side; ++j)
      p.at(i, j) = std::cos(2 * std::numbers::pi * (fr * double(i) + fc * double(j)) / double(side) + phase);
  return p;
}

}  // namespace

TEST_CASE("CIFAR-10: a full batch round-trips bit-exactly") {
  TempDir dir("fsc_unit_cifar_full");
  const auto file = dir.path / "data_batch_1.bin";
  write_batch(file, kCifarRecordsPerBatch);
  const auto images = read_cifar10_batch(file);
  REQUIRE(images.size() == kCifarRecordsPerBatch);
  bool exact = true;
  for (std::size_t r = 0; r < images.size(); ++r) {
    exact = exact && images[r].label == r % 10;
    for (std::size_t j = 0; j < kCifarPixelBytes; ++j) exact = exact && images[r].pixels[j] == pattern(r, j);
  }
  CHECK(exact);
}

TEST_CASE("CIFAR-10: directory layout, splits and offsets") {
  TempDir dir("fsc_unit_cifar_dir");
  write_batch(dir.path / "data_batch_1.bin", 3, 0);
  write_batch(dir.path / "data_batch_2.bin", 3, 3);
  write_batch(dir.path / "test_batch.bin", 2, 100);

  const auto train = load_cifar10(dir.path, 4, Split::Train, 1);
  REQUIRE(train.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(train[i].pixels[5] == pattern(i + 1, 5));
  const auto test = load_cifar10(dir.path, 2, Split::Test);
  CHECK(test[1].pixels[0] == pattern(101, 0));
  CHECK(load_cifar10(dir.path / "data_batch_2.bin", 1, Split::Train, 2)[0].label == 5);

  CHECK(code_of([&] { load_cifar10(dir.path, 7, Split::Train); }) == ErrorCode::MissingData);
  CHECK(code_of([&] { load_cifar10(dir.path / "nope", 1, Split::Train); }) == ErrorCode::MissingData);
}

TEST_CASE("CIFAR-10: misaligned files are format errors") {
  TempDir dir("fsc_unit_cifar_bad");
  const auto file = dir.path / "data_batch_1.bin";
  write_batch(file, 2);
  fs::resize_file(file, 2 * kCifarRecordBytes - 5);
  CHECK(code_of([&] { read_cifar10_batch(file); }) == ErrorCode::FormatError);
  CHECK(code_of([&] { read_cifar10_batch(dir.path / "absent.bin"); }) == ErrorCode::MissingData);
}

TEST_CASE("grayscale conversion") {
  std::vector<std::uint8_t> rgb(kCifarPixelBytes, 0);
  CHECK(to_grayscale(rgb).norm() == 0.0);
  std::fill(rgb.begin(), rgb.end(), 255);
  const Patch white = to_grayscale(rgb);
  CHECK((white.vec().array() - 1.0).abs().maxCoeff() < 1e-12);
  std::fill(rgb.begin(), rgb.end(), 0);
  rgb[5] = 255;  // red channel, pixel (0, 5)
  const Patch red = to_grayscale(rgb);
  CHECK(red.at(0, 5) == doctest::Approx(0.299).epsilon(1e-12));
  CHECK(red.vec().sum() == doctest::Approx(0.299).epsilon(1e-12));
}

TEST_CASE("whiten: sinusoids are eigenfunctions and DC is removed") {
  const std::size_t s = 32;
  CHECK(std::abs(kWhiteningCutoff * 16 - 12.48) < 1e-12);
  CHECK(whitening_gain(0.0, s) == 0.0);
  for (const auto& [fr, fc] : std::vector<std::pair<double, double>>{{2, 0}, {0, 4}, {8, 0}, {3, 4}, {-2, 2}}) {
    const Patch in = sinusoid(s, fr, fc, 0.3);
    const double gain = whitening_gain(std::hypot(fr, fc), s);
    CHECK((whiten(in).vec() - gain * in.vec()).cwiseAbs().maxCoeff() < 1e-8);
  }
  Patch constant(s);
  std::fill(constant.values().begin(), constant.values().end(), 0.7);
  CHECK(whiten(constant).vec().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("whiten: linear and zero-mean on random inputs") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t s = 8 + 8 * (trial % 3);
    Patch a = oracle::random_patch(s, rng), b = oracle::random_patch(s, rng);
    a.vec().array() += 3.0;
    Patch sum(s);
    sum.vec() = a.vec() + b.vec();
    CHECK((whiten(sum).vec() - whiten(a).vec() - whiten(b).vec()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(whiten(a).vec().mean()) <= 1e-9);
  }
}

TEST_CASE("whiten_dataset: unit variance on training data, scale reused for test data") {
  Rng rng(2);
  std::vector<Patch> train, test;
  for (int i = 0; i < 40; ++i) train.push_back(oracle::random_patch(16, rng));
  for (int i = 0; i < 10; ++i) test.push_back(oracle::random_patch(16, rng));
  double scale = 0.0;
  const auto w = whiten_dataset(train, "train", scale, 3);
  double sum_sq = 0.0, count = 0.0;
  for (const auto& p : w) {
    sum_sq += p.patch.vec().squaredNorm();
    count += double(p.patch.size());
    CHECK(std::abs(p.patch.vec().mean()) <= 1e-6);
  }
  CHECK(std::abs(sum_sq / count - 1.0) <= 1e-6);
  const double fitted = scale;
  const auto wt = whiten_dataset(test, "test", scale);
  CHECK(scale == fitted);
  CHECK((wt[0].patch.vec() - fitted * whiten(test[0]).vec()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("synthetic scenes: empty, single and superposed Gabors") {
  CHECK(synth_gabor_scene({}, {}, 16, 0.0, 1).patch.norm() == 0.0);

  GaborSpec g;
  g.envelope_sigma = 1.2;
  const Patch tmpl = render_gabor(g, 16);
  CHECK(std::abs(tmpl.norm() - 1.0) < 1e-12);
  const std::vector<GaborSpec> one = {g};
  const std::vector<TransformParams> at_center = {TransformParams{}};
  CHECK((synth_gabor_scene(one, at_center, 16, 0.0, 1).patch.vec() - tmpl.vec()).cwiseAbs().maxCoeff() < 1e-12);

  GaborSpec h = g;
  h.orientation = 1.0;
  h.amplitude = -0.7;
  const std::vector<GaborSpec> two = {g, h};
  const std::vector<TransformParams> apart = {TransformParams{0, 0, 0, -4, -4}, TransformParams{0, 0, 0, 4, 4}};
  const Patch both = synth_gabor_scene(two, apart, 16, 0.0, 1).patch;
  const Patch first = synth_gabor_scene(std::vector<GaborSpec>{g}, std::vector<TransformParams>{apart[0]}, 16, 0.0, 1).patch;
  const Patch second =
      synth_gabor_scene(std::vector<GaborSpec>{h}, std::vector<TransformParams>{apart[1]}, 16, 0.0, 1).patch;
  CHECK((both.vec() - first.vec() - second.vec()).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(synth_gabor_scene({}, {}, 4, 0.0, 1), Error);
  GaborSpec bad;
  bad.wavelength = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("synthetic datasets: deterministic, prefix-stable, split-disjoint") {
  SynthDatasetSpec spec;
  const auto a = generate_synth(spec, Split::Train, 12);
  const auto b = generate_synth(spec, Split::Train, 5, 7);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a[7 + i].patch == b[i].patch);
  const auto t = generate_synth(spec, Split::Test, 12);
  CHECK(a[0].patch != t[0].patch);
  CHECK(a[3].placements.size() == spec.gabors_per_scene);
}

TEST_CASE("synthetic spec: text round trip and validation") {
  SynthDatasetSpec spec;
  spec.side = 12;
  spec.noise_sigma = 0.125;
  spec.gabor.wavelength = 4.5;
  spec.placement.theta = {0.5, 1.5};
  spec.seed = 99;
  const auto parsed = SynthDatasetSpec::parse(spec.to_text());
  CHECK(parsed.to_text() == spec.to_text());
  CHECK(parsed.side == 12);
  CHECK(parsed.placement.theta.hi == 1.5);

  const auto custom = SynthDatasetSpec::parse("# comment\nside = 8\n\ngabors_per_scene = 1  \n");
  CHECK(custom.side == 8);
  CHECK(custom.gabors_per_scene == 1);
  CHECK(code_of([] { SynthDatasetSpec::parse("colour = red\n"); }) == ErrorCode::FormatError);
  CHECK(code_of([] { SynthDatasetSpec::parse("side 8\n"); }) == ErrorCode::FormatError);
  CHECK(code_of([] { SynthDatasetSpec::parse("side = eight\n"); }) == ErrorCode::FormatError);
  CHECK(code_of([] { SynthDatasetSpec::load("/nonexistent/spec.txt"); }) == ErrorCode::MissingData);
}

TEST_CASE("load_raw_patches: URI dispatch") {
  CHECK(load_raw_patches("synth:", Split::Train, 3).size() == 3);
  CHECK(load_raw_patches("synth:", Split::Train, 3)[0].side() == 16);
  CHECK(code_of([] { load_raw_patches("png:/x", Split::Train, 1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { load_raw_patches("cifar:/nonexistent/dir", Split::Train, 1); }) == ErrorCode::MissingData);
  CHECK(parse_split("test") == Split::Test);
  CHECK(code_of([] { parse_split("validation"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("PGM export") {
  TempDir dir("fsc_unit_pgm");
  Patch p(2);
  p.values()[0] = -1.0;
  p.values()[3] = 1.0;
  write_pgm(dir.path / "a.pgm", p);
  std::ifstream in(dir.path / "a.pgm", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string header = "P5\n2 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 4);
  CHECK(bytes.substr(0, header.size()) == header);
  CHECK(std::uint8_t(bytes[header.size()]) == 0);
  CHECK(std::uint8_t(bytes[header.size() + 3]) == 255);

  const std::vector<Patch> tiles(5, p);
  write_pgm_grid(dir.path / "grid.pgm", tiles, 3);
  CHECK(fs::exists(dir.path / "grid.pgm"));
}
