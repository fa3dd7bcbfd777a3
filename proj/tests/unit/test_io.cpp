#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fsc/dictionary_io.hpp"
#include "fsc/error.hpp"
#include "support/oracles.hpp"

using namespace fsc;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / name; }

FactoredDictionary sample_factored(std::uint64_t seed) {
  Rng rng(seed);
  return FactoredDictionary::sample(GenericFilter(oracle::random_patch(8, rng)), TransformPrior::for_side(8, seed), 6,
                                    8);
}

ErrorCode load_code(const fs::path& file) {
  try {
    load_dictionary(file);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("dictionary files round-trip every field") {
  const auto file = temp_file("fsc_unit_io.fsc");
  for (bool with_basis : {true, false}) {
    const StoredDictionary in{sample_factored(1), 2.5, 500, 42};
    save_dictionary(file, in, with_basis);
    const auto out = load_dictionary(file);
    REQUIRE(out.is_factored());
    const auto& f = std::get<FactoredDictionary>(out.model);
    CHECK(f.filter().patch() == std::get<FactoredDictionary>(in.model).filter().patch());
    CHECK(f.supports() == std::get<FactoredDictionary>(in.model).supports());
    CHECK(out.basis() == in.basis());
    CHECK(out.data_scale == 2.5);
    CHECK(out.train_size == 500);
    CHECK(out.seed == 42);
    CHECK(out.side() == 8);
  }
  Rng rng(2);
  const StoredDictionary base{BaselineDictionary::random(5, 4, rng), 0.75, 10, 3};
  save_dictionary(file, base);
  const auto back = load_dictionary(file);
  CHECK_FALSE(back.is_factored());
  CHECK(back.basis() == base.basis());
  CHECK(back.data_scale == 0.75);
  fs::remove(file);
}

TEST_CASE("dictionary files: corrupt inputs are format errors") {
  const auto file = temp_file("fsc_unit_io_bad.fsc");
  save_dictionary(file, StoredDictionary{sample_factored(3), 1.0, 0, 0});
  const auto size = fs::file_size(file);

  fs::resize_file(file, size - 8);
  CHECK(load_code(file) == ErrorCode::FormatError);

  save_dictionary(file, StoredDictionary{sample_factored(3), 1.0, 0, 0});
  {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  CHECK(load_code(file) == ErrorCode::FormatError);

  // Perturbing the last stored basis value breaks agreement with the filter.
  save_dictionary(file, StoredDictionary{sample_factored(3), 1.0, 0, 0});
  {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(std::streamoff(size - 8));
    const double junk = 123.0;
    f.write(reinterpret_cast<const char*>(&junk), sizeof junk);
  }
  CHECK(load_code(file) == ErrorCode::FormatError);

  fs::remove(file);
  CHECK(load_code(file) == ErrorCode::MissingData);
}
