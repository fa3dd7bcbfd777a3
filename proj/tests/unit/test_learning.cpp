#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "fsc/data.hpp"
#include "fsc/error.hpp"
#include "fsc/learning.hpp"
#include "support/oracles.hpp"

using namespace fsc;

namespace {

std::vector<WhitenedPatch> as_dataset(std::vector<Patch> patches) {
  std::vector<WhitenedPatch> out;
  for (std::size_t i = 0; i < patches.size(); ++i) out.push_back({std::move(patches[i]), "test", i});
  return out;
}

std::vector<WhitenedPatch> synthetic(std::size_t count, double& scale, std::uint64_t seed = 7) {
  SynthDatasetSpec spec;
  spec.seed = seed;
  std::vector<Patch> raw;
  for (auto& s : generate_synth(spec, Split::Train, count)) raw.push_back(std::move(s.patch));
  return whiten_dataset(raw, "synth", scale);
}

Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = rng.normal();
  return v;
}

double mean_objective(const std::vector<TrainLogEntry>& log, std::size_t begin, std::size_t end) {
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += log[i].mean_objective;
  return acc / double(end - begin);
}

}  // namespace

TEST_CASE("frozen-code baseline gradient matches central differences") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + rng.next() % 6, k = 4 + rng.next() % 13, n = 1 + rng.next() % 4;
    Matrix w(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
    std::vector<Vector> zs;
    std::vector<SparseCode> codes;
    for (std::size_t i = 0; i < n; ++i) {
      zs.push_back(random_vector(k, rng));
      SparseCode c;
      c.coeffs = random_vector(m, rng);
      codes.push_back(c);
    }
    const double noise = rng.uniform(0.5, 2.0);
    const Matrix analytic = basis_cotangents(w, zs, codes, noise);
    const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
    const auto loss = [&](const Eigen::VectorXd& v) {
      const Matrix wv = Eigen::Map<const Matrix>(v.data(), w.rows(), w.cols());
      return frozen_code_loss(wv, zs, codes, noise);
    };
    const Eigen::VectorXd fd = oracle::central_difference(loss, flat);
    const Eigen::VectorXd an = Eigen::Map<const Eigen::VectorXd>(analytic.data(), analytic.size());
    CHECK(oracle::relative_error(an, fd) < 1e-5);
  }
}

TEST_CASE("frozen-code factored gradient matches central differences through the filter") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t s = 6 + rng.next() % 3, m = 3 + rng.next() % 5;
    const GenericFilter u(oracle::random_patch(s, rng));
    std::vector<TransformParams> supports;
    for (std::size_t i = 0; i < m; ++i) supports.push_back(oracle::random_params(rng, 1.5));
    const FactoredDictionary dict(u, supports, s);
    std::vector<Vector> zs;
    std::vector<SparseCode> codes;
    for (int i = 0; i < 3; ++i) {
      zs.push_back(oracle::random_patch(s, rng).vec());
      SparseCode c;
      c.coeffs = random_vector(m, rng);
      codes.push_back(c);
    }
    const Patch analytic = filter_gradient(dict, basis_cotangents(dict.basis(), zs, codes, 1.0));
    const auto loss = [&](const Eigen::VectorXd& v) {
      const GenericFilter f(Patch(s, std::vector<double>(v.data(), v.data() + v.size())));
      return frozen_code_loss(materialize(f, supports, s).basis, zs, codes, 1.0);
    };
    CHECK(oracle::relative_error(analytic.vec(), oracle::central_difference(loss, u.patch().vec())) < 1e-5);
  }
}

TEST_CASE("training on all-zero data leaves the model unchanged") {
  const auto zeros = as_dataset(std::vector<Patch>(30, Patch(8)));
  TrainConfig cfg;
  cfg.minibatch_size = 7;
  cfg.seed = 3;
  const auto prior = TransformPrior::for_side(8, 3);
  const auto f = train_factored(zeros, prior, 10, cfg);
  Rng init(cfg.seed, "init");
  const auto u0 = GenericFilter::random(8, init);
  CHECK((f.dictionary.filter().patch().vec() - u0.patch().vec()).cwiseAbs().maxCoeff() < 1e-15);
  for (const auto& e : f.log) CHECK(e.update_norm < 1e-15);

  const auto b = train_baseline(zeros, 10, cfg);
  Rng init_b(cfg.seed, "init");
  const auto w0 = BaselineDictionary::random(10, 8, init_b);
  CHECK((b.dictionary.basis() - w0.basis()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("schedule: epochs, short final batch and minimum step count") {
  double scale = 0.0;
  const auto data = synthetic(25, scale);
  TrainConfig cfg;
  cfg.minibatch_size = 10;
  cfg.epochs = 2;
  CHECK(train_baseline(data, 4, cfg).log.size() == 6);
  cfg.min_steps = 10;
  CHECK(train_baseline(data, 4, cfg).log.size() == 12);
  cfg.epochs = 0;
  CHECK_THROWS_AS(train_baseline(data, 4, cfg), Error);
  CHECK_THROWS_AS(train_baseline({}, 4, TrainConfig{}), Error);
}

TEST_CASE("training is deterministic and keeps unit norms") {
  double scale = 0.0;
  const auto data = synthetic(60, scale);
  TrainConfig cfg;
  cfg.minibatch_size = 20;
  cfg.seed = 5;
  cfg.learning_rate = 1e-4;
  cfg.baseline_learning_rate = 3e-3;
  cfg.inference.sparsity_weight = 0.5;
  const auto prior = TransformPrior::for_side(16, 5);
  const auto a = train_factored(data, prior, 24, cfg);
  const auto b = train_factored(data, prior, 24, cfg);
  CHECK(a.dictionary.filter().patch() == b.dictionary.filter().patch());
  CHECK(a.dictionary.supports() == b.dictionary.supports());
  CHECK(std::abs(a.dictionary.filter().patch().norm() - 1.0) < 1e-9);
  for (Eigen::Index i = 0; i < a.dictionary.basis().rows(); ++i)
    CHECK(std::abs(a.dictionary.basis().row(i).norm() - 1.0) < 1e-9);

  cfg.threads = 3;
  const auto c = train_factored(data, prior, 24, cfg);
  CHECK(std::abs(c.log.back().mean_objective - a.log.back().mean_objective) <= 1e-10);

  cfg.threads = 1;
  const auto p = train_baseline(data, 24, cfg);
  const auto q = train_baseline(data, 24, cfg);
  CHECK(p.dictionary.basis() == q.dictionary.basis());
  for (Eigen::Index i = 0; i < p.dictionary.basis().rows(); ++i)
    CHECK(std::abs(p.dictionary.basis().row(i).norm() - 1.0) < 1e-9);
}

TEST_CASE("training objective falls on synthetic scenes") {
  double scale = 0.0;
  const auto data = synthetic(500, scale);
  TrainConfig cfg;
  cfg.seed = 2;
  cfg.min_steps = 40;
  cfg.learning_rate = 1e-4;
  cfg.baseline_learning_rate = 3e-3;
  cfg.inference.sparsity_weight = 0.5;
  const auto f = train_factored(data, TransformPrior::for_side(16, 2), 64, cfg);
  const auto b = train_baseline(data, 64, cfg);
  for (const auto* log : {&f.log, &b.log}) {
    const std::size_t n = log->size(), fifth = n / 5;
    CHECK(mean_objective(*log, n - fifth, n) < mean_objective(*log, 0, fifth));
  }
}

TEST_CASE("baseline recovers two planted orthogonal atoms") {
  // Side-2 patches (k = 4) built from one of two orthogonal generators.
  Vector g1(4), g2(4);
  g1 << 1, 1, 0, 0;
  g2 << 0, 0, 1, -1;
  g1.normalize();
  g2.normalize();
  Rng rng(4);
  std::vector<Patch> raw;
  for (int i = 0; i < 2000; ++i) {
    const double amp = (rng.uniform(0, 1) < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.5);
    Patch p(2);
    p.vec() = amp * (rng.uniform(0, 1) < 0.5 ? g1 : g2);
    raw.push_back(std::move(p));
  }
  TrainConfig cfg;
  cfg.seed = 4;
  cfg.epochs = 3;
  const auto result = train_baseline(as_dataset(std::move(raw)), 2, cfg);
  const Matrix& w = result.dictionary.basis();
  for (const Vector* g : {&g1, &g2}) {
    const double best = std::max(std::abs(w.row(0).dot(*g)), std::abs(w.row(1).dot(*g)));
    CHECK(best > 0.95);
  }
}

TEST_CASE("factored training recovers the generating Gabor shape") {
  double scale = 0.0;
  const auto data = synthetic(100, scale);
  TrainConfig cfg;
  cfg.min_steps = 40;
  cfg.learning_rate = 1e-4;
  cfg.inference.sparsity_weight = 0.5;
  const auto result = train_factored(data, TransformPrior::for_side(16, 1), 128, cfg);
  const Patch& u = result.dictionary.filter().patch();

  // Best normalized cross-correlation against transformed copies of the
  // whitened template over a grid of scales, rotations and shifts.
  const Patch tmpl = whiten(render_gabor(GaborSpec{}, 16));
  double best = 0.0;
  for (int a = -4; a <= 5; ++a)
    for (int t = 0; t < 72; ++t)
      for (int dy = -4; dy <= 4; ++dy)
        for (int dx = -4; dx <= 4; ++dx) {
          const Patch c = warp(tmpl, {a * 0.1, a * 0.1, t * std::numbers::pi / 36, double(dy), double(dx)}, 16);
          const double n = c.norm();
          if (n > 1e-9) best = std::max(best, std::abs(c.vec().dot(u.vec())) / n);
        }
  CHECK(best > 0.8);
}

TEST_CASE("write_train_log_csv: header and rows") {
  const auto file = std::filesystem::temp_directory_path() / "fsc_unit_train_log.csv";
  const std::vector<TrainLogEntry> log = {{0, 1.5, 0.25, 0.125}, {1, 1.25, 0.2, 0.0625}};
  write_train_log_csv(file, log);
  std::ifstream in(file);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "step,mean_objective,mean_rmse,update_norm");
  CHECK(row == "0,1.5,0.25,0.125");
  std::filesystem::remove(file);
}
