// Command-line front end: train, eval, encode and export-pgm over the C API.
//
// Exit codes: 0 success, 1 numerical failure, 2 input or usage error.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsc/fsc.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct CliFailure {
  int exit_code;
  std::string message;
};

int exit_code_for(fsc_status status) {
  switch (status) {
    case FSC_ERR_NON_FINITE:
    case FSC_ERR_ZERO_BASIS_VECTOR:
    case FSC_ERR_INTERNAL: return kExitNumerical;
    default: return kExitUsage;
  }
}

void check(fsc_status status) {
  if (status != FSC_OK)
    throw CliFailure{exit_code_for(status), std::string(fsc_status_string(status)) + ": " + fsc_last_error()};
}

[[noreturn]] void usage_error(const std::string& message) { throw CliFailure{kExitUsage, message}; }

struct DatasetDeleter {
  void operator()(fsc_dataset* ds) const { fsc_dataset_free(ds); }
};
struct DictionaryDeleter {
  void operator()(fsc_dictionary* d) const { fsc_dictionary_free(d); }
};
using Dataset = std::unique_ptr<fsc_dataset, DatasetDeleter>;
using Dictionary = std::unique_ptr<fsc_dictionary, DictionaryDeleter>;

// Shortest text that parses back to the same double.
std::string exact(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CLI::Option* add_double(CLI::App* app, const std::string& name, double& value, const std::string& help) {
  return app->add_option(name, value, help)->default_str(exact(value));
}

Dataset load_dataset(const std::string& uri, const std::string& split, size_t count, size_t offset) {
  fsc_dataset* raw = nullptr;
  check(fsc_dataset_load(uri.c_str(), split.c_str(), count, offset, &raw));
  return Dataset(raw);
}

// Whitens in place; returns the scale used (fitted when `scale` <= 0).
double whiten(fsc_dataset* ds, double scale, size_t threads) {
  check(fsc_dataset_whiten(ds, &scale, threads));
  return scale;
}

Dictionary load_dictionary(const std::string& path) {
  fsc_dictionary* raw = nullptr;
  check(fsc_dictionary_load(path.c_str(), &raw));
  return Dictionary(raw);
}

fsc_dictionary_info info_of(const fsc_dictionary* dict) {
  fsc_dictionary_info info{};
  check(fsc_dictionary_get_info(dict, &info));
  return info;
}

std::vector<double> patches_of(const fsc_dataset* ds) {
  const size_t k = fsc_dataset_side(ds) * fsc_dataset_side(ds);
  std::vector<double> values(fsc_dataset_size(ds) * k);
  for (size_t i = 0; i < fsc_dataset_size(ds); ++i) check(fsc_dataset_patch(ds, i, values.data() + i * k));
  return values;
}

size_t grid_columns(size_t count) {
  return std::max<size_t>(1, static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(count)))));
}

std::ofstream open_output(const fs::path& file) {
  std::ofstream out(file);
  if (!out) usage_error("cannot write " + file.string());
  out.precision(17);
  return out;
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) usage_error("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string model_name(fsc_model_kind kind) { return kind == FSC_MODEL_FACTORED ? "factored" : "baseline"; }

// ---- shared option groups -------------------------------------------------

struct InferenceOptions {
  fsc_inference_config cfg{};

  InferenceOptions() { fsc_inference_config_default(&cfg); }

  void attach(CLI::App* app) {
    add_double(app, "--noise-scale", cfg.noise_scale, "reconstruction noise scale");
    add_double(app, "--sparsity", cfg.sparsity_weight, "weight of the Cauchy sparsity penalty");
    add_double(app, "--cauchy-scale", cfg.cauchy_scale, "width of the Cauchy penalty");
    add_double(app, "--grad-tol", cfg.grad_tol, "solver gradient tolerance");
    app->add_option("--max-evals", cfg.max_evals, "objective evaluations per code")->capture_default_str();
  }
};

struct TrainOptions {
  fsc_train_config cfg{};

  TrainOptions() { fsc_train_config_default(&cfg); }

  void attach(CLI::App* app, InferenceOptions& inference) {
    app->add_option("--minibatch", cfg.minibatch_size, "patches per update")->capture_default_str();
    add_double(app, "--lr", cfg.learning_rate, "generic filter learning rate");
    add_double(app, "--baseline-lr", cfg.baseline_learning_rate, "baseline dictionary learning rate");
    app->add_option("--epochs", cfg.epochs, "passes over the training data")->capture_default_str();
    app->add_option("--min-steps", cfg.min_steps, "keep adding epochs until this many updates")
        ->capture_default_str();
    app->add_option("--seed", cfg.seed, "training seed (filter init, batch order)")->capture_default_str();
    app->add_option("--filter-side", cfg.filter_side, "generic filter side, 0 for the patch side")
        ->capture_default_str();
    inference_ = &inference;
  }

  fsc_train_config resolved(size_t threads) const {
    fsc_train_config c = cfg;
    c.threads = threads;
    c.inference = inference_->cfg;
    return c;
  }

 private:
  InferenceOptions* inference_ = nullptr;
};

// Transform ranges. Translation ranges and the prior seed depend on the data
// and the training seed, so they are filled in (and written back as defaults
// for the resolved config) once those are known.
struct PriorOptions {
  fsc_transform_prior prior{};
  std::optional<double> delta_lo, delta_hi, eta_lo, eta_hi;
  std::optional<uint64_t> seed;
  std::vector<CLI::Option*> deferred;

  PriorOptions() { fsc_transform_prior_default(&prior, 32); }

  void attach(CLI::App* app) {
    add_double(app, "--alpha-min", prior.alpha.lo, "lower bound of the log vertical scale");
    add_double(app, "--alpha-max", prior.alpha.hi, "upper bound of the log vertical scale");
    add_double(app, "--beta-min", prior.beta.lo, "lower bound of the log horizontal scale");
    add_double(app, "--beta-max", prior.beta.hi, "upper bound of the log horizontal scale");
    add_double(app, "--theta-min", prior.theta.lo, "lower bound of the rotation angle");
    add_double(app, "--theta-max", prior.theta.hi, "upper bound of the rotation angle");
    deferred = {
        app->add_option("--delta-min", delta_lo, "lower vertical translation (default scales with the patch)"),
        app->add_option("--delta-max", delta_hi, "upper vertical translation"),
        app->add_option("--eta-min", eta_lo, "lower horizontal translation"),
        app->add_option("--eta-max", eta_hi, "upper horizontal translation"),
        app->add_option("--prior-seed", seed, "seed for sampling transforms (default: --seed)"),
    };
  }

  fsc_transform_prior resolve(size_t side, uint64_t train_seed) {
    fsc_transform_prior scaled{};
    fsc_transform_prior_default(&scaled, side);
    prior.delta = {delta_lo.value_or(scaled.delta.lo), delta_hi.value_or(scaled.delta.hi)};
    prior.eta = {eta_lo.value_or(scaled.eta.lo), eta_hi.value_or(scaled.eta.hi)};
    prior.seed = seed.value_or(train_seed);
    deferred[0]->default_str(exact(prior.delta.lo));
    deferred[1]->default_str(exact(prior.delta.hi));
    deferred[2]->default_str(exact(prior.eta.lo));
    deferred[3]->default_str(exact(prior.eta.hi));
    deferred[4]->default_str(std::to_string(prior.seed));
    return prior;
  }
};

struct DataOptions {
  std::string uri;
  std::string split;
  size_t count;
  size_t offset = 0;

  DataOptions(std::string default_split, size_t default_count)
      : split(std::move(default_split)), count(default_count) {}

  void attach(CLI::App* app, const std::string& prefix, bool required) {
    auto* opt = app->add_option("--" + prefix + "data", uri, "dataset URI: cifar:<dir-or-file> or synth:[spec-file]");
    if (required) opt->required();
    app->add_option("--" + prefix + "split", split, "train or test")->capture_default_str();
    // Held-out data also answers to --test-count.
    const std::string count_names = "--" + prefix + "count" + (prefix.empty() && split == "test" ? ",--test-count" : "");
    app->add_option(count_names, count, "number of patches")->capture_default_str();
    app->add_option("--" + prefix + "offset", offset, "index of the first patch")->capture_default_str();
  }

  Dataset load() const { return load_dataset(uri, split, count, offset); }
};

// ---- commands -------------------------------------------------------------

struct Context {
  size_t threads = 1;
  std::string log_level;
};

// Global options, then the invoked command's section with every option
// resolved; `fsc --config <file>` reruns it. Unset options (empty values) are
// left out so they stay unset on reload.
void write_config(const Context& ctx, CLI::App* sub, const fs::path& dir) {
  std::ofstream out = open_output(dir / "config.txt");
  out << "threads=" << ctx.threads << "\n";
  out << "log-level=\"" << ctx.log_level << "\"\n";
  out << "[" << sub->get_name() << "]\n";
  std::istringstream lines(sub->config_to_str(true, false));
  for (std::string line; std::getline(lines, line);)
    if (!line.ends_with("=\"\"")) out << line << "\n";
}

struct TrainCommand {
  CLI::App* app;
  std::string model;
  size_t m = 128;
  std::string out_dir;
  bool save_basis = false;
  DataOptions data{"train", 500};
  InferenceOptions inference;
  TrainOptions train;
  PriorOptions prior;

  explicit TrainCommand(CLI::App& root) {
    app = root.add_subcommand("train", "learn a factored or baseline dictionary");
    app->configurable();
    app->add_option("--model", model, "factored or baseline")
        ->required()
        ->check(CLI::IsMember({"factored", "baseline"}));
    app->add_option("--m", m, "number of atoms")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--out", out_dir, "output directory")->required();
    app->add_flag("--save-basis", save_basis, "also store the materialized basis of a factored model");
    data.attach(app, "", true);
    train.attach(app, inference);
    inference.attach(app);
    prior.attach(app);
  }

  int run(const Context& ctx) {
    Dataset ds = data.load();
    const double scale = whiten(ds.get(), 0.0, ctx.threads);
    const size_t side = fsc_dataset_side(ds.get());
    const fsc_train_config cfg = train.resolved(ctx.threads);
    const fsc_transform_prior resolved_prior = prior.resolve(side, cfg.seed);

    const fs::path dir(out_dir);
    prepare_out_dir(dir);
    write_config(ctx, app, dir);

    std::vector<fsc_train_step> log;
    const auto record = [](const fsc_train_step* step, void* user) {
      static_cast<std::vector<fsc_train_step>*>(user)->push_back(*step);
    };
    fsc_dictionary* raw = nullptr;
    if (model == "factored")
      check(fsc_train_factored(ds.get(), &resolved_prior, m, &cfg, record, &log, &raw));
    else
      check(fsc_train_baseline(ds.get(), m, &cfg, record, &log, &raw));
    Dictionary dict(raw);

    check(fsc_dictionary_save(dict.get(), (dir / "dict.fsc").c_str(), save_basis ? 1 : 0));
    {
      std::ofstream csv = open_output(dir / "train_log.csv");
      csv << "step,mean_objective,mean_rmse,update_norm\n";
      for (const auto& s : log) csv << s.step << ',' << s.mean_objective << ',' << s.mean_rmse << ',' << s.update_norm << '\n';
    }

    const auto info = info_of(dict.get());
    std::vector<double> basis(info.m * info.side * info.side);
    check(fsc_dictionary_basis(dict.get(), basis.data()));
    check(fsc_write_pgm_grid((dir / "basis.pgm").c_str(), info.side, info.m, basis.data(), grid_columns(info.m)));
    if (info.kind == FSC_MODEL_FACTORED) {
      std::vector<double> filter(info.filter_side * info.filter_side);
      check(fsc_dictionary_filter(dict.get(), filter.data()));
      check(fsc_write_pgm((dir / "filter.pgm").c_str(), info.filter_side, filter.data()));
    }

    std::printf("trained %s dictionary: m=%zu side=%zu patches=%zu steps=%zu whitening_scale=%s\n", model.c_str(),
                info.m, info.side, fsc_dataset_size(ds.get()), log.size(), exact(scale).c_str());
    if (!log.empty())
      std::printf("last step: mean_objective=%.6g mean_rmse=%.6g\n", log.back().mean_objective, log.back().mean_rmse);
    return 0;
  }
};

struct EvalCommand {
  CLI::App* app;
  std::string dict_path;
  std::vector<size_t> ks;
  std::string out_dir;
  size_t gallery = 8;
  DataOptions test{"test", 200};
  // sweep mode
  std::vector<size_t> sweep_sizes;
  std::string train_uri;
  std::string train_split = "train";
  size_t train_offset = 0;
  size_t m = 128;
  InferenceOptions inference;
  TrainOptions train;
  PriorOptions prior;

  explicit EvalCommand(CLI::App& root) {
    app = root.add_subcommand("eval", "top-K reconstruction error curves, or a training-size sweep");
    app->configurable();
    auto* dict_opt = app->add_option("--dict", dict_path, "dictionary file to evaluate");
    app->add_option("--ks", ks, "comma-separated K values (default: powers of two up to m)")->delimiter(',');
    app->add_option("--out", out_dir, "output directory")->required();
    app->add_option("--gallery", gallery, "test patches in the reconstruction gallery (0: none)")
        ->capture_default_str();
    test.attach(app, "", true);
    auto* sweep_opt = app->add_option("--sweep-train-sizes", sweep_sizes,
                                      "train both models on each prefix size and report full-code RMSE")
                          ->delimiter(',');
    app->add_option("--train-data", train_uri, "training data URI for the sweep (default: --data)");
    app->add_option("--train-split", train_split, "split of the sweep training data")->capture_default_str();
    app->add_option("--train-offset", train_offset, "first training patch of the sweep")->capture_default_str();
    app->add_option("--m", m, "number of atoms in sweep models")->capture_default_str()->check(CLI::PositiveNumber);
    dict_opt->excludes(sweep_opt);
    train.attach(app, inference);
    inference.attach(app);
    prior.attach(app);
  }

  int run(const Context& ctx) { return sweep_sizes.empty() ? run_curve(ctx) : run_sweep(ctx); }

  int run_curve(const Context& ctx) {
    if (dict_path.empty()) usage_error("eval needs --dict or --sweep-train-sizes");
    Dictionary dict = load_dictionary(dict_path);
    const auto info = info_of(dict.get());
    if (ks.empty())
      for (size_t k = 1; k <= info.m; k *= 2) ks.push_back(k);
    for (size_t j = 0; j < ks.size(); ++j)
      if (ks[j] < 1 || ks[j] > info.m || (j > 0 && ks[j] <= ks[j - 1]))
        usage_error("--ks must be strictly increasing values in [1, " + std::to_string(info.m) + "]");

    Dataset ds = test.load();
    whiten(ds.get(), info.data_scale, ctx.threads);
    if (fsc_dataset_side(ds.get()) != info.side) usage_error("test patches do not match the dictionary size");

    const fs::path dir(out_dir);
    prepare_out_dir(dir);
    write_config(ctx, app, dir);

    std::vector<double> rmse(ks.size());
    check(fsc_rmse_curve(dict.get(), ds.get(), ks.data(), ks.size(), &inference.cfg, ctx.threads, rmse.data()));
    {
      std::ofstream csv = open_output(dir / "rmse.csv");
      csv << "model,m,train_size,K,mean_rmse,n_patches,seed\n";
      for (size_t j = 0; j < ks.size(); ++j)
        csv << model_name(info.kind) << ',' << info.m << ',' << info.train_size << ',' << ks[j] << ',' << rmse[j]
            << ',' << fsc_dataset_size(ds.get()) << ',' << info.seed << '\n';
    }
    for (size_t j = 0; j < ks.size(); ++j) std::printf("K=%zu mean_rmse=%.6g\n", ks[j], rmse[j]);

    if (gallery > 0) write_gallery(ctx, dict.get(), info, ds.get(), dir / "gallery.pgm");
    return 0;
  }

  // One row per test patch: the patch, then its reconstruction at each K.
  void write_gallery(const Context& ctx, const fsc_dictionary* dict, const fsc_dictionary_info& info,
                     const fsc_dataset* ds, const fs::path& file) {
    const size_t n = std::min(gallery, fsc_dataset_size(ds));
    fsc_dataset* raw = nullptr;
    check(fsc_dataset_subset(ds, 0, n, &raw));
    Dataset head(raw);
    std::vector<double> codes(n * info.m);
    check(fsc_encode(dict, head.get(), &inference.cfg, 0, ctx.threads, codes.data()));

    const size_t k = info.side * info.side;
    const std::vector<double> originals = patches_of(head.get());
    std::vector<double> tiles;
    std::vector<double> truncated(info.m), recon(k);
    std::vector<size_t> idx(info.m);
    for (size_t i = 0; i < n; ++i) {
      tiles.insert(tiles.end(), originals.begin() + static_cast<std::ptrdiff_t>(i * k),
                   originals.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
      const double* code = codes.data() + i * info.m;
      for (size_t K : ks) {
        check(fsc_top_k_indices(code, info.m, K, idx.data()));
        std::fill(truncated.begin(), truncated.end(), 0.0);
        for (size_t r = 0; r < K; ++r) truncated[idx[r]] = code[idx[r]];
        check(fsc_reconstruct(dict, truncated.data(), recon.data()));
        tiles.insert(tiles.end(), recon.begin(), recon.end());
      }
    }
    check(fsc_write_pgm_grid(file.c_str(), info.side, n * (ks.size() + 1), tiles.data(), ks.size() + 1));
  }

  int run_sweep(const Context& ctx) {
    if (std::find(sweep_sizes.begin(), sweep_sizes.end(), size_t{0}) != sweep_sizes.end())
      usage_error("--sweep-train-sizes must be positive");
    const size_t largest = *std::max_element(sweep_sizes.begin(), sweep_sizes.end());

    Dataset train_ds = load_dataset(train_uri.empty() ? test.uri : train_uri, train_split, largest, train_offset);
    const double scale = whiten(train_ds.get(), 0.0, ctx.threads);
    Dataset test_ds = test.load();
    whiten(test_ds.get(), scale, ctx.threads);
    const size_t side = fsc_dataset_side(train_ds.get());
    if (fsc_dataset_side(test_ds.get()) != side) usage_error("training and test patches differ in size");

    const fsc_train_config cfg = train.resolved(ctx.threads);
    const fsc_transform_prior resolved_prior = prior.resolve(side, cfg.seed);

    const fs::path dir(out_dir);
    prepare_out_dir(dir);
    write_config(ctx, app, dir);

    std::vector<double> rmse(2 * sweep_sizes.size());
    check(fsc_data_efficiency_sweep(train_ds.get(), test_ds.get(), sweep_sizes.data(), sweep_sizes.size(), m,
                                    &resolved_prior, &cfg, rmse.data()));
    std::ofstream csv = open_output(dir / "sweep.csv");
    csv << "model,m,train_size,K,mean_rmse,n_patches,seed\n";
    const char* models[] = {"factored", "baseline"};
    for (size_t f = 0; f < 2; ++f)
      for (size_t j = 0; j < sweep_sizes.size(); ++j) {
        const double v = rmse[f * sweep_sizes.size() + j];
        csv << models[f] << ',' << m << ',' << sweep_sizes[j] << ',' << m << ',' << v << ','
            << fsc_dataset_size(test_ds.get()) << ',' << cfg.seed << '\n';
        std::printf("%s train_size=%zu full_code_rmse=%.6g\n", models[f], sweep_sizes[j], v);
      }
    return 0;
  }
};

struct EncodeCommand {
  CLI::App* app;
  std::string dict_path;
  size_t k = 0;
  std::string out_dir;
  DataOptions data{"test", 200};
  InferenceOptions inference;

  explicit EncodeCommand(CLI::App& root) {
    app = root.add_subcommand("encode", "write the top-K (index, coefficient) pairs of every patch");
    app->configurable();
    app->add_option("--dict", dict_path, "dictionary file")->required();
    app->add_option("--k", k, "coefficients kept per patch (1..m)")->required();
    app->add_option("--out", out_dir, "output directory")->required();
    data.attach(app, "", true);
    inference.attach(app);
  }

  int run(const Context& ctx) {
    if (k == 0) usage_error("--k must be at least 1");
    Dictionary dict = load_dictionary(dict_path);
    const auto info = info_of(dict.get());
    if (k > info.m) usage_error("--k " + std::to_string(k) + " exceeds the dictionary size " + std::to_string(info.m));
    Dataset ds = data.load();
    whiten(ds.get(), info.data_scale, ctx.threads);
    if (fsc_dataset_side(ds.get()) != info.side) usage_error("patches do not match the dictionary size");

    const fs::path dir(out_dir);
    prepare_out_dir(dir);
    write_config(ctx, app, dir);

    const size_t n = fsc_dataset_size(ds.get());
    std::vector<double> codes(n * info.m);
    check(fsc_encode(dict.get(), ds.get(), &inference.cfg, 0, ctx.threads, codes.data()));
    std::vector<size_t> idx(k);
    std::ofstream csv = open_output(dir / "codes.csv");
    csv << "patch,rank,index,coefficient\n";
    for (size_t i = 0; i < n; ++i) {
      const double* code = codes.data() + i * info.m;
      check(fsc_top_k_indices(code, info.m, k, idx.data()));
      for (size_t r = 0; r < k; ++r) csv << data.offset + i << ',' << r << ',' << idx[r] << ',' << code[idx[r]] << '\n';
    }
    std::printf("encoded %zu patches with %zu coefficients each\n", n, k);
    return 0;
  }
};

struct ExportCommand {
  CLI::App* app;
  std::string dict_path;
  std::string out_dir;
  bool whitened = false;
  size_t columns = 0;
  DataOptions data{"train", 64};

  explicit ExportCommand(CLI::App& root) {
    app = root.add_subcommand("export-pgm", "write a dictionary or dataset patches as PGM images");
    app->configurable();
    app->add_option("--dict", dict_path, "dictionary file: writes filter.pgm (factored) and basis.pgm");
    app->add_option("--out", out_dir, "output directory")->required();
    app->add_flag("--whiten", whitened, "whiten dataset patches before export");
    app->add_option("--columns", columns, "tiles per grid row (0: square)")->capture_default_str();
    data.attach(app, "", false);
  }

  int run(const Context& ctx) {
    if (dict_path.empty() && data.uri.empty()) usage_error("export-pgm needs --dict or --data");
    const fs::path dir(out_dir);
    Dictionary dict;
    Dataset ds;
    if (!dict_path.empty()) dict = load_dictionary(dict_path);
    if (!data.uri.empty()) {
      ds = data.load();
      if (whitened) whiten(ds.get(), dict ? info_of(dict.get()).data_scale : 0.0, ctx.threads);
    }
    prepare_out_dir(dir);
    write_config(ctx, app, dir);

    if (dict) {
      const auto info = info_of(dict.get());
      std::vector<double> basis(info.m * info.side * info.side);
      check(fsc_dictionary_basis(dict.get(), basis.data()));
      check(fsc_write_pgm_grid((dir / "basis.pgm").c_str(), info.side, info.m, basis.data(),
                               columns ? columns : grid_columns(info.m)));
      if (info.kind == FSC_MODEL_FACTORED) {
        std::vector<double> filter(info.filter_side * info.filter_side);
        check(fsc_dictionary_filter(dict.get(), filter.data()));
        check(fsc_write_pgm((dir / "filter.pgm").c_str(), info.filter_side, filter.data()));
      }
    }
    if (ds) {
      const std::vector<double> values = patches_of(ds.get());
      const size_t n = fsc_dataset_size(ds.get());
      check(fsc_write_pgm_grid((dir / "patches.pgm").c_str(), fsc_dataset_side(ds.get()), n, values.data(),
                               columns ? columns : grid_columns(n)));
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App root{"Factored sparse coding: learn, evaluate and apply transformation-generated dictionaries"};
  root.set_version_flag("--version", fsc_version());
  root.set_config("--config", "", "read options from a config file written by an earlier run");
  Context ctx;
  ctx.log_level = "warn";
  root.add_option("--threads", ctx.threads, "worker threads (0: one per core)")->capture_default_str();
  root.add_option("--log-level", ctx.log_level, "trace, debug, info, warn, error or off")->capture_default_str();
  root.require_subcommand(1);

  TrainCommand train(root);
  EvalCommand eval(root);
  EncodeCommand encode(root);
  ExportCommand export_pgm(root);

  try {
    root.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return root.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return root.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return root.exit(e);
  } catch (const CLI::ParseError& e) {
    root.exit(e);
    return kExitUsage;
  }

  try {
    check(fsc_set_log_level(ctx.log_level.c_str()));
    if (train.app->parsed()) return train.run(ctx);
    if (eval.app->parsed()) return eval.run(ctx);
    if (encode.app->parsed()) return encode.run(ctx);
    return export_pgm.run(ctx);
  } catch (const CliFailure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.exit_code;
  }
}
