#include "fsc/data.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include <fftw3.h>

#include "fsc/error.hpp"
#include "fsc/parallel.hpp"
#include "fsc/rng.hpp"

namespace fsc {

// ---------------------------------------------------------------- CIFAR-10

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "test") return Split::Test;
  fail(ErrorCode::InvalidArgument, "unknown split '" + name + "' (expected train or test)");
}

const char* to_string(Split split) noexcept { return split == Split::Train ? "train" : "test"; }

std::vector<CifarImage> read_cifar10_batch(const std::filesystem::path& file) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(file, ec);
  if (ec) fail(ErrorCode::MissingData, "cannot read CIFAR-10 batch " + file.string() + ": " + ec.message());
  if (size % kCifarRecordBytes != 0)
    fail(ErrorCode::FormatError, "CIFAR-10 batch " + file.string() + " has " + std::to_string(size) +
                                     " bytes, not a multiple of " + std::to_string(kCifarRecordBytes));
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + file.string());

  std::vector<CifarImage> images(size / kCifarRecordBytes);
  for (auto& img : images) {
    in.read(reinterpret_cast<char*>(&img.label), 1);
    in.read(reinterpret_cast<char*>(img.pixels.data()), kCifarPixelBytes);
    if (!in) fail(ErrorCode::FormatError, "short read in " + file.string());
  }
  return images;
}

std::vector<CifarImage> load_cifar10(const std::filesystem::path& path, std::size_t count, Split split,
                                     std::size_t offset) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    if (split == Split::Train) {
      for (int b = 1; b <= 5; ++b) files.push_back(path / ("data_batch_" + std::to_string(b) + ".bin"));
    } else {
      files.push_back(path / "test_batch.bin");
    }
  } else if (std::filesystem::exists(path)) {
    files.push_back(path);
  } else {
    fail(ErrorCode::MissingData, "CIFAR-10 path does not exist: " + path.string());
  }

  std::vector<CifarImage> out;
  out.reserve(count);
  std::size_t skipped = 0;
  for (const auto& f : files) {
    if (out.size() == count) break;
    if (!std::filesystem::exists(f)) break;
    auto batch = read_cifar10_batch(f);
    for (auto& img : batch) {
      if (out.size() == count) break;
      if (skipped < offset) {
        ++skipped;
        continue;
      }
      out.push_back(img);
    }
  }
  if (out.size() < count)
    fail(ErrorCode::MissingData, "requested " + std::to_string(count) + " CIFAR-10 images from " + path.string() +
                                     " (offset " + std::to_string(offset) + "), only " +
                                     std::to_string(out.size()) + " available");
  return out;
}

Patch to_grayscale(std::span<const std::uint8_t> rgb) {
  require_dims(rgb.size() == kCifarPixelBytes, "to_grayscale expects 3072 bytes");
  constexpr std::size_t plane = kCifarSide * kCifarSide;
  Patch out(kCifarSide);
  auto dst = out.values();
  for (std::size_t i = 0; i < plane; ++i)
    dst[i] = (0.299 * rgb[i] + 0.587 * rgb[plane + i] + 0.114 * rgb[2 * plane + i]) / 255.0;
  return out;
}

// ---------------------------------------------------------------- whitening

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class Dft2d {
 public:
  explicit Dft2d(std::size_t side) : n_(static_cast<int>(side)), buf_(side * side) {
    std::lock_guard lock(fftw_planner_mutex());
    auto* data = reinterpret_cast<fftw_complex*>(buf_.data());
    forward_ = fftw_plan_dft_2d(n_, n_, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(n_, n_, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Dft2d() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  Dft2d(const Dft2d&) = delete;
  Dft2d& operator=(const Dft2d&) = delete;

  std::vector<std::complex<double>>& buffer() { return buf_; }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }

 private:
  int n_;
  std::vector<std::complex<double>> buf_;
  fftw_plan forward_{};
  fftw_plan backward_{};
};

// Signed frequency of DFT bin b on an n-point grid.
double bin_frequency(std::size_t b, std::size_t n) {
  return 2 * b <= n ? static_cast<double>(b) : static_cast<double>(b) - static_cast<double>(n);
}

}  // namespace

double whitening_gain(double f, std::size_t side) {
  const double f0 = kWhiteningCutoff * static_cast<double>(side) / 2.0;
  const double q = f / f0;
  return f * std::exp(-(q * q) * (q * q));
}

Patch whiten(const Patch& patch) {
  const std::size_t n = patch.side();
  if (n == 0) fail(ErrorCode::InvalidArgument, "whiten: empty patch");
  const double mean = patch.vec().mean();

  Dft2d dft(n);
  auto& buf = dft.buffer();
  auto src = patch.values();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = src[i] - mean;
  dft.forward();
  for (std::size_t r = 0; r < n; ++r) {
    const double fr = bin_frequency(r, n);
    for (std::size_t c = 0; c < n; ++c) {
      const double fc = bin_frequency(c, n);
      buf[r * n + c] *= whitening_gain(std::hypot(fr, fc), n);
    }
  }
  dft.backward();

  Patch out(n);
  auto dst = out.values();
  const double inv = 1.0 / static_cast<double>(n * n);
  for (std::size_t i = 0; i < buf.size(); ++i) dst[i] = buf[i].real() * inv;
  // Remove round-off DC so the zero-mean invariant holds exactly enough.
  out.vec().array() -= out.vec().mean();
  return out;
}

double fit_unit_variance_scale(std::span<const Patch> whitened) {
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (const auto& p : whitened) {
    sum_sq += p.vec().squaredNorm();
    count += p.size();
  }
  if (count == 0 || !(sum_sq > 0.0)) return 1.0;
  return std::sqrt(static_cast<double>(count) / sum_sq);
}

std::vector<WhitenedPatch> whiten_dataset(std::span<const Patch> raw, const std::string& source, double& scale,
                                          std::size_t threads) {
  std::vector<Patch> filtered(raw.size());
  parallel_for(raw.size(), threads, [&](std::size_t i) { filtered[i] = whiten(raw[i]); });
  if (!(scale > 0.0)) scale = fit_unit_variance_scale(filtered);
  std::vector<WhitenedPatch> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < filtered.size(); ++i) {
    filtered[i].vec() *= scale;
    out.push_back(WhitenedPatch{std::move(filtered[i]), source, i});
  }
  return out;
}

// ---------------------------------------------------------------- synthetic data

void GaborSpec::validate() const {
  if (!(wavelength > 0.0) || !(envelope_sigma > 0.0) || !(aspect > 0.0) || !std::isfinite(orientation) ||
      !std::isfinite(phase) || !std::isfinite(amplitude))
    fail(ErrorCode::InvalidArgument, "Gabor spec needs positive wavelength, envelope_sigma and aspect");
}

Patch render_gabor(const GaborSpec& spec, std::size_t side) {
  spec.validate();
  Patch out(side);
  const double center = (static_cast<double>(side) - 1.0) / 2.0;
  const double cs = std::cos(spec.orientation);
  const double sn = std::sin(spec.orientation);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      const double y = static_cast<double>(i) - center;
      const double x = static_cast<double>(j) - center;
      const double xr = x * cs + y * sn;
      const double yr = -x * sn + y * cs;
      const double env = std::exp(-(xr * xr + spec.aspect * spec.aspect * yr * yr) /
                                  (2.0 * spec.envelope_sigma * spec.envelope_sigma));
      out.at(i, j) = env * std::cos(2.0 * std::numbers::pi * xr / spec.wavelength + spec.phase);
    }
  }
  const double n = out.norm();
  if (n > 0.0) out.vec() *= spec.amplitude / n;
  return out;
}

SynthScene synth_gabor_scene(std::span<const GaborSpec> specs, std::span<const TransformParams> placements,
                             std::size_t side, double noise_sigma, std::uint64_t seed) {
  if (side < 8) fail(ErrorCode::InvalidArgument, "synthetic scenes need side >= 8");
  require_dims(specs.size() == placements.size(), "synth_gabor_scene: one placement per Gabor");
  SynthScene scene{Patch(side), {placements.begin(), placements.end()}};
  for (std::size_t g = 0; g < specs.size(); ++g)
    scene.patch.vec() += warp(render_gabor(specs[g], side), placements[g], side).vec();
  if (noise_sigma > 0.0) {
    Rng rng(seed, "noise");
    for (double& v : scene.patch.values()) v += noise_sigma * rng.normal();
  }
  return scene;
}

namespace {

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::FormatError, "line " + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return d;
  } catch (const std::exception&) {
    fail(ErrorCode::FormatError, "synthetic spec: '" + key + "' is not a number: " + value);
  }
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

SynthDatasetSpec SynthDatasetSpec::parse(const std::string& text) {
  SynthDatasetSpec spec;
  bool prior_given = false;
  for (const auto& [key, value] : parse_key_values(text)) {
    const double d = to_double(key, value);
    auto as_size = [&] {
      if (d < 0 || d != std::floor(d)) fail(ErrorCode::FormatError, "synthetic spec: '" + key + "' must be a count");
      return static_cast<std::size_t>(d);
    };
    if (key == "side") spec.side = as_size();
    else if (key == "gabors_per_scene") spec.gabors_per_scene = as_size();
    else if (key == "wavelength") spec.gabor.wavelength = d;
    else if (key == "orientation") spec.gabor.orientation = d;
    else if (key == "phase") spec.gabor.phase = d;
    else if (key == "envelope_sigma") spec.gabor.envelope_sigma = d;
    else if (key == "aspect") spec.gabor.aspect = d;
    else if (key == "amplitude_min") spec.amplitude_min = d;
    else if (key == "amplitude_max") spec.amplitude_max = d;
    else if (key == "noise_sigma") spec.noise_sigma = d;
    else if (key == "seed") spec.seed = static_cast<std::uint64_t>(as_size());
    else if (key == "alpha_min") (prior_given = true, spec.placement.alpha.lo = d);
    else if (key == "alpha_max") (prior_given = true, spec.placement.alpha.hi = d);
    else if (key == "beta_min") (prior_given = true, spec.placement.beta.lo = d);
    else if (key == "beta_max") (prior_given = true, spec.placement.beta.hi = d);
    else if (key == "theta_min") (prior_given = true, spec.placement.theta.lo = d);
    else if (key == "theta_max") (prior_given = true, spec.placement.theta.hi = d);
    else if (key == "delta_min") (prior_given = true, spec.placement.delta.lo = d);
    else if (key == "delta_max") (prior_given = true, spec.placement.delta.hi = d);
    else if (key == "eta_min") (prior_given = true, spec.placement.eta.lo = d);
    else if (key == "eta_max") (prior_given = true, spec.placement.eta.hi = d);
    else fail(ErrorCode::FormatError, "synthetic spec: unknown key '" + key + "'");
  }
  if (!prior_given) spec.placement = TransformPrior::for_side(spec.side);
  spec.validate();
  return spec;
}

SynthDatasetSpec SynthDatasetSpec::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::MissingData, "cannot open synthetic spec " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string SynthDatasetSpec::to_text() const {
  std::ostringstream os;
  os << "side = " << side << "\n"
     << "gabors_per_scene = " << gabors_per_scene << "\n"
     << "wavelength = " << fmt_double(gabor.wavelength) << "\n"
     << "orientation = " << fmt_double(gabor.orientation) << "\n"
     << "phase = " << fmt_double(gabor.phase) << "\n"
     << "envelope_sigma = " << fmt_double(gabor.envelope_sigma) << "\n"
     << "aspect = " << fmt_double(gabor.aspect) << "\n"
     << "amplitude_min = " << fmt_double(amplitude_min) << "\n"
     << "amplitude_max = " << fmt_double(amplitude_max) << "\n"
     << "noise_sigma = " << fmt_double(noise_sigma) << "\n"
     << "alpha_min = " << fmt_double(placement.alpha.lo) << "\n"
     << "alpha_max = " << fmt_double(placement.alpha.hi) << "\n"
     << "beta_min = " << fmt_double(placement.beta.lo) << "\n"
     << "beta_max = " << fmt_double(placement.beta.hi) << "\n"
     << "theta_min = " << fmt_double(placement.theta.lo) << "\n"
     << "theta_max = " << fmt_double(placement.theta.hi) << "\n"
     << "delta_min = " << fmt_double(placement.delta.lo) << "\n"
     << "delta_max = " << fmt_double(placement.delta.hi) << "\n"
     << "eta_min = " << fmt_double(placement.eta.lo) << "\n"
     << "eta_max = " << fmt_double(placement.eta.hi) << "\n"
     << "seed = " << seed << "\n";
  return os.str();
}

void SynthDatasetSpec::validate() const {
  if (side < 8) fail(ErrorCode::InvalidArgument, "synthetic spec: side must be >= 8");
  gabor.validate();
  placement.validate();
  if (!(amplitude_min >= 0.0) || !(amplitude_max >= amplitude_min) || !(noise_sigma >= 0.0))
    fail(ErrorCode::InvalidArgument, "synthetic spec: bad amplitude or noise range");
}

std::vector<SynthScene> generate_synth(const SynthDatasetSpec& spec, Split split, std::size_t count,
                                       std::size_t offset) {
  spec.validate();
  const std::uint64_t split_seed = derive_seed(spec.seed, to_string(split));
  std::vector<SynthScene> scenes;
  scenes.reserve(count);
  for (std::size_t i = offset; i < offset + count; ++i) {
    const std::uint64_t scene_seed = derive_seed(split_seed, std::to_string(i));
    Rng rng(scene_seed, "layout");
    std::vector<GaborSpec> specs(spec.gabors_per_scene, spec.gabor);
    std::vector<TransformParams> placements;
    for (auto& g : specs) {
      const double sign = rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
      g.amplitude = sign * rng.uniform(spec.amplitude_min, spec.amplitude_max);
      placements.push_back(sample_support(spec.placement, rng));
    }
    scenes.push_back(synth_gabor_scene(specs, placements, spec.side, spec.noise_sigma, scene_seed));
  }
  return scenes;
}

// ---------------------------------------------------------------- datasets

std::vector<Patch> load_raw_patches(const std::string& uri, Split split, std::size_t count, std::size_t offset) {
  const auto colon = uri.find(':');
  if (colon == std::string::npos)
    fail(ErrorCode::InvalidArgument, "dataset URI '" + uri + "' needs a scheme (cifar: or synth:)");
  const std::string scheme = uri.substr(0, colon);
  const std::string rest = uri.substr(colon + 1);
  std::vector<Patch> out;
  out.reserve(count);
  if (scheme == "cifar") {
    for (const auto& img : load_cifar10(rest, count, split, offset)) out.push_back(to_grayscale(img.pixels));
  } else if (scheme == "synth") {
    const SynthDatasetSpec spec = rest.empty() ? SynthDatasetSpec{} : SynthDatasetSpec::load(rest);
    for (auto& scene : generate_synth(spec, split, count, offset)) out.push_back(std::move(scene.patch));
  } else {
    fail(ErrorCode::InvalidArgument, "unknown dataset scheme '" + scheme + "'");
  }
  return out;
}

// ---------------------------------------------------------------- PGM export

namespace {

void scale_into(const Patch& p, std::vector<std::uint8_t>& img, std::size_t width, std::size_t top,
                std::size_t left) {
  const auto [lo_it, hi_it] = std::minmax_element(p.values().begin(), p.values().end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  for (std::size_t i = 0; i < p.side(); ++i)
    for (std::size_t j = 0; j < p.side(); ++j) {
      const double t = range > 0.0 ? (p.at(i, j) - lo) / range : 0.5;
      img[(top + i) * width + left + j] = static_cast<std::uint8_t>(std::lround(255.0 * t));
    }
}

void write_p5(const std::filesystem::path& file, const std::vector<std::uint8_t>& img, std::size_t width,
              std::size_t height) {
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + file.string());
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + file.string());
}

}  // namespace

void write_pgm(const std::filesystem::path& file, const Patch& patch) {
  if (patch.side() == 0) fail(ErrorCode::InvalidArgument, "write_pgm: empty patch");
  std::vector<std::uint8_t> img(patch.size());
  scale_into(patch, img, patch.side(), 0, 0);
  write_p5(file, img, patch.side(), patch.side());
}

void write_pgm_grid(const std::filesystem::path& file, std::span<const Patch> patches, std::size_t columns) {
  if (patches.empty() || columns == 0) fail(ErrorCode::InvalidArgument, "write_pgm_grid: nothing to draw");
  const std::size_t side = patches.front().side();
  const std::size_t cols = std::min(columns, patches.size());
  const std::size_t rows = (patches.size() + cols - 1) / cols;
  const std::size_t width = cols * (side + 1) + 1;
  const std::size_t height = rows * (side + 1) + 1;
  std::vector<std::uint8_t> img(width * height, 0);
  for (std::size_t t = 0; t < patches.size(); ++t) {
    require_dims(patches[t].side() == side, "write_pgm_grid: patches differ in size");
    scale_into(patches[t], img, width, 1 + (t / cols) * (side + 1), 1 + (t % cols) * (side + 1));
  }
  write_p5(file, img, width, height);
}

}  // namespace fsc
