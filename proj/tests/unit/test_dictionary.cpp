#include <cmath>

#include "doctest.h"
#include "fsc/dictionary.hpp"
#include "fsc/error.hpp"
#include "support/oracles.hpp"

using namespace fsc;

namespace {

GenericFilter random_filter(std::size_t side, std::uint64_t seed) {
  Rng rng(seed);
  return GenericFilter(oracle::random_patch(side, rng));
}

// Scalar loss sum_i <G_i, w_i> of the materialized basis; its gradient with
// respect to the basis is G.
double linear_loss(const GenericFilter& u, const std::vector<TransformParams>& supports, std::size_t side,
                   const Matrix& g) {
  return materialize(u, supports, side).basis.cwiseProduct(g).sum();
}

}  // namespace

TEST_CASE("sample_supports: degenerate ranges collapse to a point") {
  TransformPrior prior;
  prior.alpha = {0.1, 0.1};
  prior.beta = {-0.2, -0.2};
  prior.theta = {1.0, 1.0};
  prior.delta = {2.0, 2.0};
  prior.eta = {-3.0, -3.0};
  const auto s = sample_supports(prior, 1);
  REQUIRE(s.size() == 1);
  CHECK(s[0] == TransformParams{0.1, -0.2, 1.0, 2.0, -3.0});
}

TEST_CASE("sample_supports: uniform within the declared ranges") {
  TransformPrior prior;
  prior.seed = 42;
  const std::size_t m = 1000;
  const auto s = sample_supports(prior, m);
  const std::array<Interval, 5> ranges = {prior.alpha, prior.beta, prior.theta, prior.delta, prior.eta};
  for (std::size_t f = 0; f < 5; ++f) {
    double sum = 0.0;
    for (const auto& t : s) {
      const double v = std::array{t.alpha, t.beta, t.theta, t.delta, t.eta}[f];
      CHECK(v >= ranges[f].lo);
      CHECK(v <= ranges[f].hi);
      sum += v;
    }
    const double width = ranges[f].hi - ranges[f].lo;
    const double se = width / std::sqrt(12.0 * double(m));
    CHECK(std::abs(sum / double(m) - 0.5 * (ranges[f].lo + ranges[f].hi)) < 3.0 * se);
  }
  CHECK(sample_supports(prior, m) == s);
  prior.seed = 43;
  CHECK(sample_supports(prior, m) != s);
}

TEST_CASE("TransformPrior: validation and side scaling") {
  TransformPrior bad;
  bad.theta = {1.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.delta = {0.0, std::nan("")};
  CHECK_THROWS_AS(bad.validate(), Error);
  const auto p = TransformPrior::for_side(16);
  CHECK(p.delta.lo == -7.5);
  CHECK(p.eta.hi == 7.5);
}

TEST_CASE("GenericFilter: unit norm and rejects degenerate input") {
  Rng rng(1);
  const auto u = GenericFilter::random(8, rng);
  CHECK(std::abs(u.patch().norm() - 1.0) < 1e-12);
  CHECK_THROWS_AS(GenericFilter(Patch(4)), Error);
}

TEST_CASE("materialize: identity support reproduces the filter") {
  const auto u = random_filter(8, 2);
  const auto mat = materialize(u, {TransformParams{}}, 8);
  CHECK((mat.basis.row(0).transpose() - u.patch().vec()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(mat.norms(0) - 1.0) < 1e-12);
}

TEST_CASE("materialize: a support mapped off the patch is reported") {
  const auto u = random_filter(8, 3);
  try {
    materialize(u, {TransformParams{}, TransformParams{0, 0, 0, 16.0, 0}}, 8);
    FAIL("expected ZeroBasisVector");
  } catch (const ZeroBasisVector& e) {
    CHECK(e.row() == 1);
    CHECK(e.code() == ErrorCode::ZeroBasisVector);
  }
}

TEST_CASE("materialize: rows equal normalized dense-operator warps") {
  Rng rng(4);
  const auto u = random_filter(8, 5);
  std::vector<TransformParams> supports;
  for (int i = 0; i < 3; ++i) supports.push_back(oracle::random_params(rng, 2.0));
  const auto mat = materialize(u, supports, 8);
  for (std::size_t i = 0; i < supports.size(); ++i) {
    const Eigen::VectorXd w = oracle::dense_warp_operator(supports[i], 8, 8) * u.patch().vec();
    CHECK((mat.basis.row(static_cast<Eigen::Index>(i)).transpose() - w / w.norm()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(mat.basis.row(static_cast<Eigen::Index>(i)).norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("FactoredDictionary: sample replaces degenerate supports") {
  TransformPrior prior;
  prior.delta = {-40.0, 40.0};
  prior.eta = {-40.0, 40.0};
  prior.seed = 9;
  const auto dict = FactoredDictionary::sample(random_filter(8, 6), prior, 64, 8);
  CHECK(dict.size() == 64);
  for (Eigen::Index i = 0; i < dict.basis().rows(); ++i) CHECK(std::abs(dict.basis().row(i).norm() - 1.0) < 1e-9);
}

TEST_CASE("filter_gradient: zero and identity cases") {
  const auto u = random_filter(6, 7);
  const FactoredDictionary dict(u, {TransformParams{}}, 6);
  CHECK(filter_gradient(dict, Matrix::Zero(1, 36)).norm() == 0.0);

  Rng rng(8);
  Matrix g(1, 36);
  for (Eigen::Index j = 0; j < 36; ++j) g(0, j) = rng.normal();
  const Patch grad = filter_gradient(dict, g);
  const Eigen::VectorXd uv = u.patch().vec();
  const Eigen::VectorXd expected = g.row(0).transpose() - uv * uv.dot(g.row(0).transpose());
  CHECK((grad.vec() - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(grad.vec().dot(uv)) <= 1e-9 * grad.norm());
}

TEST_CASE("filter_gradient: matches central differences through warps and normalization") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    Rng rng(100 + seed);
    const std::size_t s = 6 + seed % 3;
    const std::size_t filter_side = seed % 2 ? s : s - 2;
    const auto u = random_filter(filter_side, 200 + seed);
    std::vector<TransformParams> supports;
    for (int i = 0; i < 4; ++i) supports.push_back(oracle::random_params(rng, 1.5));
    const FactoredDictionary dict(u, supports, s);
    Matrix g(4, Eigen::Index(s * s));
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();

    const Patch analytic = filter_gradient(dict, g);
    const auto loss = [&](const Eigen::VectorXd& x) {
      return linear_loss(GenericFilter(Patch(filter_side, std::vector<double>(x.data(), x.data() + x.size()))),
                         supports, s, g);
    };
    const Eigen::VectorXd fd = oracle::central_difference(loss, u.patch().vec());
    CHECK(oracle::relative_error(analytic.vec(), fd) < 1e-5);
    // Scale invariance of the normalized atoms makes the gradient radial-free.
    CHECK(std::abs(analytic.vec().dot(u.patch().vec())) <= 1e-9 * analytic.norm());
  }
}

TEST_CASE("filter_gradient: linear in the cotangents and shape-checked") {
  Rng rng(9);
  const auto u = random_filter(8, 10);
  std::vector<TransformParams> supports;
  for (int i = 0; i < 5; ++i) supports.push_back(oracle::random_params(rng, 2.0));
  const FactoredDictionary dict(u, supports, 8);
  Matrix g(5, 64);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  const Matrix g3 = -3.0 * g;
  CHECK((filter_gradient(dict, g3).vec() + 3.0 * filter_gradient(dict, g).vec()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(filter_gradient(dict, Matrix::Zero(4, 64)), Error);
}

TEST_CASE("BaselineDictionary: rows stay unit-norm; zero rows are rejected") {
  Rng rng(11);
  auto dict = BaselineDictionary::random(10, 4, rng);
  for (Eigen::Index i = 0; i < 10; ++i) CHECK(std::abs(dict.basis().row(i).norm() - 1.0) < 1e-12);
  Matrix step = Matrix::Constant(10, 16, 0.3);
  dict.apply_step(step);
  for (Eigen::Index i = 0; i < 10; ++i) CHECK(std::abs(dict.basis().row(i).norm() - 1.0) < 1e-9);
  CHECK(dict.side() == 4);

  Matrix zero = Matrix::Ones(2, 4);
  zero.row(1).setZero();
  CHECK_THROWS_AS(BaselineDictionary{zero}, ZeroBasisVector);
  Matrix nan = Matrix::Ones(2, 4);
  nan(0, 0) = std::nan("");
  CHECK_THROWS_AS(BaselineDictionary{nan}, Error);
}
