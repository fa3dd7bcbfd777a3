#include "fsc/dictionary_io.hpp"

#include <cmath>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "fsc/error.hpp"

namespace fsc {

const Matrix& StoredDictionary::basis() const {
  return std::visit([](const auto& d) -> const Matrix& { return d.basis(); }, model);
}

std::size_t StoredDictionary::side() const {
  if (const auto* f = std::get_if<FactoredDictionary>(&model)) return f->out_side();
  return std::get<BaselineDictionary>(model).side();
}

namespace {

constexpr std::uint16_t kKindFactored = 1;
constexpr std::uint16_t kKindBaseline = 2;
constexpr std::uint16_t kFlagBasis = 1;
constexpr std::size_t kHeaderBytes = 64;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    std::uint64_t bits;
    if constexpr (std::is_floating_point_v<T>)
      bits = std::bit_cast<std::uint64_t>(value);
    else
      bits = static_cast<std::uint64_t>(value);
    for (std::size_t b = 0; b < sizeof(T); ++b) bytes_.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  void put_raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<char>& bytes, const std::string& name) : bytes_(bytes), name_(name) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>)
      return std::bit_cast<double>(bits);
    else
      return static_cast<T>(bits);
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorCode::FormatError, name_ + ": truncated dictionary file");
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<char>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

void put_matrix(Writer& w, const Matrix& mtx) {
  for (Eigen::Index i = 0; i < mtx.rows(); ++i)
    for (Eigen::Index j = 0; j < mtx.cols(); ++j) w.put(mtx(i, j));
}

Matrix get_matrix(Reader& r, std::size_t rows, std::size_t cols) {
  r.need(rows * cols * 8);
  Matrix mtx(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < mtx.rows(); ++i)
    for (Eigen::Index j = 0; j < mtx.cols(); ++j) mtx(i, j) = r.get<double>();
  return mtx;
}

}  // namespace

void save_dictionary(const std::filesystem::path& file, const StoredDictionary& dict, bool include_basis) {
  Writer w;
  w.put_raw(kDictionaryMagic.data(), kDictionaryMagic.size());
  w.put(kDictionaryVersion);
  const bool factored = dict.is_factored();
  if (!factored) include_basis = true;
  w.put(factored ? kKindFactored : kKindBaseline);
  w.put(static_cast<std::uint16_t>(include_basis ? kFlagBasis : 0));
  const Matrix& basis = dict.basis();
  if (factored) {
    const auto& f = std::get<FactoredDictionary>(dict.model);
    w.put(static_cast<std::uint64_t>(f.filter().side()));
    w.put(static_cast<std::uint64_t>(f.out_side()));
    w.put(static_cast<std::uint64_t>(f.size()));
    w.put(dict.data_scale);
    w.put(dict.train_size);
    w.put(dict.seed);
    for (double v : f.filter().patch().values()) w.put(v);
    for (const auto& s : f.supports()) {
      w.put(s.alpha);
      w.put(s.beta);
      w.put(s.theta);
      w.put(s.delta);
      w.put(s.eta);
    }
  } else {
    w.put(std::uint64_t{0});
    w.put(static_cast<std::uint64_t>(dict.side()));
    w.put(static_cast<std::uint64_t>(basis.rows()));
    w.put(dict.data_scale);
    w.put(dict.train_size);
    w.put(dict.seed);
  }
  if (include_basis) put_matrix(w, basis);

  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write dictionary " + file.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + file.string());
}

StoredDictionary load_dictionary(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::MissingData, "cannot open dictionary " + file.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = file.string();
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kDictionaryMagic.data(), kDictionaryMagic.size()) != 0)
    fail(ErrorCode::FormatError, name + ": not a dictionary file (bad magic)");

  Reader r(bytes, name);
  for (std::size_t i = 0; i < kDictionaryMagic.size(); ++i) r.get<std::uint8_t>();
  const auto version = r.get<std::uint32_t>();
  if (version != kDictionaryVersion)
    fail(ErrorCode::FormatError, name + ": unsupported format version " + std::to_string(version));
  const auto kind = r.get<std::uint16_t>();
  const auto flags = r.get<std::uint16_t>();
  const auto filter_side = r.get<std::uint64_t>();
  const auto side = r.get<std::uint64_t>();
  const auto m = r.get<std::uint64_t>();
  const double scale = r.get<double>();
  const auto train_size = r.get<std::uint64_t>();
  const auto seed = r.get<std::uint64_t>();
  const bool has_basis = (flags & kFlagBasis) != 0;

  constexpr std::uint64_t kLimit = 1u << 20;
  if (side == 0 || m == 0 || side > kLimit || m > kLimit || filter_side > kLimit || (flags & ~kFlagBasis) != 0 ||
      !(scale > 0.0))
    fail(ErrorCode::FormatError, name + ": implausible header");

  const std::size_t k = side * side;
  std::size_t expected = kHeaderBytes + (has_basis ? m * k * 8 : 0);
  if (kind == kKindFactored) expected += (filter_side * filter_side + 5 * m) * 8;
  else if (kind != kKindBaseline) fail(ErrorCode::FormatError, name + ": unknown dictionary kind");
  if (bytes.size() != expected)
    fail(ErrorCode::FormatError, name + ": size " + std::to_string(bytes.size()) + " bytes, expected " +
                                     std::to_string(expected));

  StoredDictionary out;
  out.data_scale = scale;
  out.train_size = train_size;
  out.seed = seed;
  try {
    if (kind == kKindFactored) {
      if (filter_side == 0) fail(ErrorCode::FormatError, name + ": factored dictionary without a filter");
      Patch filter(filter_side);
      for (double& v : filter.values()) v = r.get<double>();
      std::vector<TransformParams> supports(m);
      for (auto& s : supports) {
        s.alpha = r.get<double>();
        s.beta = r.get<double>();
        s.theta = r.get<double>();
        s.delta = r.get<double>();
        s.eta = r.get<double>();
        if (!s.all_finite()) fail(ErrorCode::FormatError, name + ": non-finite support");
      }
      if (!filter.all_finite()) fail(ErrorCode::FormatError, name + ": non-finite filter");
      FactoredDictionary dict(GenericFilter(std::move(filter)), std::move(supports), side);
      if (has_basis) {
        const Matrix stored = get_matrix(r, m, k);
        if (!stored.allFinite() || (stored - dict.basis()).cwiseAbs().maxCoeff() > 1e-9)
          fail(ErrorCode::FormatError, name + ": stored basis does not match its filter and supports");
      }
      out.model = std::move(dict);
    } else {
      if (!has_basis) fail(ErrorCode::FormatError, name + ": baseline dictionary without a basis");
      Matrix basis = get_matrix(r, m, k);
      if (!basis.allFinite()) fail(ErrorCode::FormatError, name + ": non-finite basis");
      for (Eigen::Index i = 0; i < basis.rows(); ++i)
        if (std::abs(basis.row(i).norm() - 1.0) > 1e-9)
          fail(ErrorCode::FormatError, name + ": baseline row " + std::to_string(i) + " is not unit-norm");
      out.model = BaselineDictionary::from_unit_rows(std::move(basis));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FormatError) throw;
    fail(ErrorCode::FormatError, name + ": " + e.what());
  }
  return out;
}

}  // namespace fsc
