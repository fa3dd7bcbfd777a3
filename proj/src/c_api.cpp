#include "fsc/fsc.h"

#include <algorithm>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include <spdlog/spdlog.h>

#include "fsc/data.hpp"
#include "fsc/dictionary_io.hpp"
#include "fsc/error.hpp"
#include "fsc/evaluation.hpp"
#include "fsc/learning.hpp"

struct fsc_dataset {
  std::size_t side = 0;
  std::vector<fsc::WhitenedPatch> patches;
  bool whitened = false;
  double scale = 0.0;
};

struct fsc_dictionary {
  fsc::StoredDictionary stored;
};

namespace {

thread_local std::string g_last_error;

fsc_status to_status(fsc::ErrorCode code) {
  switch (code) {
    case fsc::ErrorCode::InvalidArgument: return FSC_ERR_INVALID_ARGUMENT;
    case fsc::ErrorCode::DimensionMismatch: return FSC_ERR_DIMENSION_MISMATCH;
    case fsc::ErrorCode::ZeroBasisVector: return FSC_ERR_ZERO_BASIS_VECTOR;
    case fsc::ErrorCode::NonFiniteObjective: return FSC_ERR_NON_FINITE;
    case fsc::ErrorCode::FormatError: return FSC_ERR_FORMAT;
    case fsc::ErrorCode::MissingData: return FSC_ERR_MISSING_DATA;
    case fsc::ErrorCode::IoError: return FSC_ERR_IO;
  }
  return FSC_ERR_INTERNAL;
}

fsc_status set_error(fsc_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
fsc_status guarded(Fn&& fn) {
  try {
    fn();
    return FSC_OK;
  } catch (const fsc::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(FSC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(FSC_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(FSC_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) fsc::fail(fsc::ErrorCode::InvalidArgument, what);
}

fsc::InferenceConfig to_cpp(const fsc_inference_config& c) {
  fsc::InferenceConfig cfg;
  cfg.noise_scale = c.noise_scale;
  cfg.sparsity_weight = c.sparsity_weight;
  cfg.cauchy_scale = c.cauchy_scale;
  cfg.grad_tol = c.grad_tol;
  cfg.max_evals = c.max_evals;
  cfg.validate();
  return cfg;
}

fsc::TrainConfig to_cpp(const fsc_train_config& c) {
  fsc::TrainConfig cfg;
  cfg.minibatch_size = c.minibatch_size;
  cfg.learning_rate = c.learning_rate;
  cfg.baseline_learning_rate = c.baseline_learning_rate;
  cfg.epochs = c.epochs;
  cfg.min_steps = c.min_steps;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  cfg.filter_side = c.filter_side;
  cfg.inference = to_cpp(c.inference);
  cfg.validate();
  return cfg;
}

fsc::TransformPrior to_cpp(const fsc_transform_prior& p) {
  fsc::TransformPrior prior;
  prior.alpha = {p.alpha.lo, p.alpha.hi};
  prior.beta = {p.beta.lo, p.beta.hi};
  prior.theta = {p.theta.lo, p.theta.hi};
  prior.delta = {p.delta.lo, p.delta.hi};
  prior.eta = {p.eta.lo, p.eta.hi};
  prior.seed = p.seed;
  prior.validate();
  return prior;
}

const std::vector<fsc::WhitenedPatch>& whitened_patches(const fsc_dataset* ds) {
  require(ds != nullptr, "dataset handle is null");
  require(ds->whitened, "dataset must be whitened first (fsc_dataset_whiten)");
  require(!ds->patches.empty(), "dataset is empty");
  return ds->patches;
}

fsc::TrainObserver make_observer(fsc_train_callback callback, void* user) {
  if (!callback) return {};
  return [callback, user](const fsc::TrainLogEntry& e) {
    const fsc_train_step step{e.step, e.mean_objective, e.mean_rmse, e.update_norm};
    callback(&step, user);
  };
}

fsc_dataset* make_dataset(std::vector<fsc::Patch> raw, const std::string& source, std::size_t offset) {
  auto ds = std::make_unique<fsc_dataset>();
  ds->side = raw.empty() ? 0 : raw.front().side();
  ds->patches.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) ds->patches.push_back({std::move(raw[i]), source, offset + i});
  return ds.release();
}

}  // namespace

extern "C" {

const char* fsc_status_string(fsc_status status) {
  switch (status) {
    case FSC_OK: return "ok";
    case FSC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FSC_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case FSC_ERR_ZERO_BASIS_VECTOR: return "zero basis vector";
    case FSC_ERR_NON_FINITE: return "non-finite objective";
    case FSC_ERR_FORMAT: return "format error";
    case FSC_ERR_MISSING_DATA: return "missing data";
    case FSC_ERR_IO: return "i/o error";
    case FSC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fsc_last_error(void) { return g_last_error.c_str(); }

const char* fsc_version(void) { return "1.0.0"; }

fsc_status fsc_set_log_level(const char* level) {
  return guarded([&] {
    require(level != nullptr, "null log level");
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string(level) != "off")
      fsc::fail(fsc::ErrorCode::InvalidArgument, std::string("unknown log level '") + level + "'");
    spdlog::set_level(parsed);
  });
}

void fsc_inference_config_default(fsc_inference_config* cfg) {
  if (!cfg) return;
  const fsc::InferenceConfig d;
  *cfg = {d.noise_scale, d.sparsity_weight, d.cauchy_scale, d.grad_tol, d.max_evals};
}

void fsc_train_config_default(fsc_train_config* cfg) {
  if (!cfg) return;
  const fsc::TrainConfig d;
  cfg->minibatch_size = d.minibatch_size;
  cfg->learning_rate = d.learning_rate;
  cfg->baseline_learning_rate = d.baseline_learning_rate;
  cfg->epochs = d.epochs;
  cfg->min_steps = d.min_steps;
  cfg->seed = d.seed;
  cfg->threads = d.threads;
  cfg->filter_side = d.filter_side;
  fsc_inference_config_default(&cfg->inference);
}

void fsc_transform_prior_default(fsc_transform_prior* prior, size_t side) {
  if (!prior) return;
  const auto p = fsc::TransformPrior::for_side(side);
  *prior = {{p.alpha.lo, p.alpha.hi}, {p.beta.lo, p.beta.hi}, {p.theta.lo, p.theta.hi},
            {p.delta.lo, p.delta.hi}, {p.eta.lo, p.eta.hi},   p.seed};
}

fsc_status fsc_dataset_load(const char* uri, const char* split, size_t count, size_t offset, fsc_dataset** out) {
  return guarded([&] {
    require(uri && split && out, "null argument");
    require(count > 0, "count must be positive");
    *out = nullptr;
    auto raw = fsc::load_raw_patches(uri, fsc::parse_split(split), count, offset);
    *out = make_dataset(std::move(raw), std::string(uri) + "#" + split, offset);
  });
}

fsc_status fsc_dataset_from_values(size_t side, size_t count, const double* values, fsc_dataset** out) {
  return guarded([&] {
    require(values && out && side > 0 && count > 0, "invalid dataset dimensions");
    *out = nullptr;
    std::vector<fsc::Patch> raw;
    raw.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      raw.push_back(fsc::Patch::from_span(side, {values + i * side * side, side * side}));
    *out = make_dataset(std::move(raw), "memory", 0);
  });
}

fsc_status fsc_dataset_whiten(fsc_dataset* ds, double* scale, size_t threads) {
  return guarded([&] {
    require(ds && scale, "null argument");
    require(!ds->whitened, "dataset is already whitened");
    std::vector<fsc::Patch> raw;
    raw.reserve(ds->patches.size());
    for (const auto& p : ds->patches) raw.push_back(p.patch);
    double s = *scale;
    auto white = fsc::whiten_dataset(raw, "", s, threads);
    for (std::size_t i = 0; i < white.size(); ++i) ds->patches[i].patch = std::move(white[i].patch);
    ds->whitened = true;
    ds->scale = s;
    *scale = s;
  });
}

fsc_status fsc_dataset_subset(const fsc_dataset* ds, size_t offset, size_t count, fsc_dataset** out) {
  return guarded([&] {
    require(ds && out, "null argument");
    *out = nullptr;
    require(count > 0 && offset <= ds->patches.size() && count <= ds->patches.size() - offset,
            "subset range outside the dataset");
    auto sub = std::make_unique<fsc_dataset>(*ds);
    sub->patches.assign(ds->patches.begin() + static_cast<std::ptrdiff_t>(offset),
                        ds->patches.begin() + static_cast<std::ptrdiff_t>(offset + count));
    *out = sub.release();
  });
}

size_t fsc_dataset_size(const fsc_dataset* ds) { return ds ? ds->patches.size() : 0; }

size_t fsc_dataset_side(const fsc_dataset* ds) { return ds ? ds->side : 0; }

fsc_status fsc_dataset_patch(const fsc_dataset* ds, size_t index, double* out) {
  return guarded([&] {
    require(ds && out, "null argument");
    require(index < ds->patches.size(), "patch index out of range");
    const auto v = ds->patches[index].patch.values();
    std::copy(v.begin(), v.end(), out);
  });
}

void fsc_dataset_free(fsc_dataset* ds) { delete ds; }

fsc_status fsc_train_factored(const fsc_dataset* train, const fsc_transform_prior* prior, size_t m,
                              const fsc_train_config* cfg, fsc_train_callback callback, void* user,
                              fsc_dictionary** out) {
  return guarded([&] {
    require(prior && cfg && out, "null argument");
    *out = nullptr;
    const auto& patches = whitened_patches(train);
    auto result = fsc::train_factored(patches, to_cpp(*prior), m, to_cpp(*cfg), make_observer(callback, user));
    *out = new fsc_dictionary{
        fsc::StoredDictionary{std::move(result.dictionary), train->scale, patches.size(), cfg->seed}};
  });
}

fsc_status fsc_train_baseline(const fsc_dataset* train, size_t m, const fsc_train_config* cfg,
                              fsc_train_callback callback, void* user, fsc_dictionary** out) {
  return guarded([&] {
    require(cfg && out, "null argument");
    *out = nullptr;
    const auto& patches = whitened_patches(train);
    auto result = fsc::train_baseline(patches, m, to_cpp(*cfg), make_observer(callback, user));
    *out = new fsc_dictionary{
        fsc::StoredDictionary{std::move(result.dictionary), train->scale, patches.size(), cfg->seed}};
  });
}

fsc_status fsc_dictionary_load(const char* path, fsc_dictionary** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    *out = new fsc_dictionary{fsc::load_dictionary(path)};
  });
}

fsc_status fsc_dictionary_save(const fsc_dictionary* dict, const char* path, int include_basis) {
  return guarded([&] {
    require(dict && path, "null argument");
    fsc::save_dictionary(path, dict->stored, include_basis != 0);
  });
}

fsc_status fsc_dictionary_get_info(const fsc_dictionary* dict, fsc_dictionary_info* info) {
  return guarded([&] {
    require(dict && info, "null argument");
    const auto& s = dict->stored;
    info->kind = s.is_factored() ? FSC_MODEL_FACTORED : FSC_MODEL_BASELINE;
    info->m = static_cast<size_t>(s.basis().rows());
    info->side = s.side();
    info->filter_side = s.is_factored() ? std::get<fsc::FactoredDictionary>(s.model).filter().side() : 0;
    info->data_scale = s.data_scale;
    info->train_size = static_cast<size_t>(s.train_size);
    info->seed = s.seed;
  });
}

fsc_status fsc_dictionary_basis(const fsc_dictionary* dict, double* out) {
  return guarded([&] {
    require(dict && out, "null argument");
    const auto& b = dict->stored.basis();
    std::copy(b.data(), b.data() + b.size(), out);
  });
}

fsc_status fsc_dictionary_filter(const fsc_dictionary* dict, double* out) {
  return guarded([&] {
    require(dict && out, "null argument");
    require(dict->stored.is_factored(), "baseline dictionaries have no generic filter");
    const auto v = std::get<fsc::FactoredDictionary>(dict->stored.model).filter().patch().values();
    std::copy(v.begin(), v.end(), out);
  });
}

void fsc_dictionary_free(fsc_dictionary* dict) { delete dict; }

fsc_status fsc_encode(const fsc_dictionary* dict, const fsc_dataset* ds, const fsc_inference_config* cfg, size_t k,
                      size_t threads, double* codes) {
  return guarded([&] {
    require(dict && cfg && codes, "null argument");
    const auto& patches = whitened_patches(ds);
    fsc::require_dims(patches.front().patch.side() == dict->stored.side(), "patches and dictionary differ in size");
    const auto& basis = dict->stored.basis();
    const auto m = static_cast<std::size_t>(basis.rows());
    require(k <= m, "K exceeds the dictionary size");
    std::vector<fsc::Vector> zs;
    zs.reserve(patches.size());
    for (const auto& p : patches) zs.emplace_back(p.patch.vec());
    const auto all = fsc::infer_all(zs, basis, to_cpp(*cfg), threads);
    for (std::size_t n = 0; n < all.size(); ++n) {
      const auto code = k == 0 ? all[n] : fsc::top_k(all[n], k);
      std::copy(code.coeffs.data(), code.coeffs.data() + m, codes + n * m);
    }
  });
}

fsc_status fsc_top_k_indices(const double* code, size_t m, size_t k, size_t* indices) {
  return guarded([&] {
    require(code && indices && m > 0, "invalid top-k arguments");
    const auto order = fsc::top_k_indices(Eigen::Map<const fsc::Vector>(code, static_cast<Eigen::Index>(m)), k);
    std::copy(order.begin(), order.end(), indices);
  });
}

fsc_status fsc_reconstruct(const fsc_dictionary* dict, const double* code, double* out) {
  return guarded([&] {
    require(dict && code && out, "null argument");
    const auto& basis = dict->stored.basis();
    fsc::SparseCode c;
    c.coeffs = Eigen::Map<const fsc::Vector>(code, basis.rows());
    const auto p = fsc::reconstruct(basis, c);
    std::copy(p.values().begin(), p.values().end(), out);
  });
}

fsc_status fsc_rmse_curve(const fsc_dictionary* dict, const fsc_dataset* test, const size_t* ks, size_t n_ks,
                          const fsc_inference_config* cfg, size_t threads, double* mean_rmse) {
  return guarded([&] {
    require(dict && ks && cfg && mean_rmse && n_ks > 0, "null argument");
    const auto& patches = whitened_patches(test);
    fsc::require_dims(patches.front().patch.side() == dict->stored.side(), "test patches and dictionary differ in size");
    const auto curve =
        fsc::rmse_curve(dict->stored.basis(), patches, std::span<const std::size_t>(ks, n_ks), to_cpp(*cfg), threads);
    for (std::size_t j = 0; j < n_ks; ++j) mean_rmse[j] = curve.points[j].mean_rmse;
  });
}

fsc_status fsc_data_efficiency_sweep(const fsc_dataset* train, const fsc_dataset* test, const size_t* train_sizes,
                                     size_t n_sizes, size_t m, const fsc_transform_prior* prior,
                                     const fsc_train_config* cfg, double* full_code_rmse) {
  return guarded([&] {
    require(train_sizes && n_sizes > 0 && prior && cfg && full_code_rmse, "null argument");
    fsc::SweepConfig sweep;
    sweep.prior = to_cpp(*prior);
    sweep.train = to_cpp(*cfg);
    const auto curves = fsc::data_efficiency_sweep(whitened_patches(train), whitened_patches(test),
                                                   std::span<const std::size_t>(train_sizes, n_sizes), m, sweep);
    for (std::size_t i = 0; i < curves.size(); ++i) full_code_rmse[i] = curves[i].points.front().mean_rmse;
  });
}

fsc_status fsc_write_pgm(const char* path, size_t side, const double* values) {
  return guarded([&] {
    require(path && values && side > 0, "null argument");
    fsc::write_pgm(path, fsc::Patch::from_span(side, {values, side * side}));
  });
}

fsc_status fsc_write_pgm_grid(const char* path, size_t side, size_t count, const double* values, size_t columns) {
  return guarded([&] {
    require(path && values && side > 0 && count > 0, "null argument");
    std::vector<fsc::Patch> tiles;
    tiles.reserve(count);
    for (std::size_t i = 0; i < count; ++i) tiles.push_back(fsc::Patch::from_span(side, {values + i * side * side, side * side}));
    fsc::write_pgm_grid(path, tiles, columns);
  });
}

}  // extern "C"
