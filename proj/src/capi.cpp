#include "uavzone.h"

#include "uavzone/baselines.hpp"
#include "uavzone/coba.hpp"
#include "uavzone/complexity.hpp"
#include "uavzone/dataset.hpp"
#include "uavzone/error.hpp"
#include "uavzone/fingerprint.hpp"
#include "uavzone/metrics.hpp"
#include "uavzone/radio.hpp"
#include "uavzone/rng.hpp"
#include "uavzone/train.hpp"

#include "json.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <tuple>

struct uz_scene {
  uavzone::radio::SceneConfig config;
};

struct uz_bundle {
  uavzone::data::DatasetBundle bundle;
};

struct uz_model {
  uavzone::CobaModel model;
};

namespace {

using namespace uavzone;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

thread_local std::string g_last_error;

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename F>
uz_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return UZ_OK;
  } catch (const ConfigError& e) {
    g_last_error = e.what();
    return UZ_ERR_CONFIG;
  } catch (const DataError& e) {
    g_last_error = e.what();
    return UZ_ERR_DATA;
  } catch (const NumericError& e) {
    g_last_error = e.what();
    return UZ_ERR_NUMERIC;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return UZ_ERR_ARGUMENT;
  } catch (const std::out_of_range& e) {
    g_last_error = e.what();
    return UZ_ERR_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return UZ_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UZ_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return UZ_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Parses an options object and rejects keys outside `allowed`.
json parse_options(const char* text, const char* what, std::initializer_list<const char*> allowed) {
  if (!text || !*text) return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + " options are not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(std::string(what) + " options must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError(std::string("unknown ") + what + " option '" + key + "'");
  }
  return j;
}

template <typename T>
T opt(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("option '") + key + "' has the wrong type");
  }
}

std::size_t opt_count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(std::string("option '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("write failed: " + path.string());
}

data::PrepareOptions prepare_options(const char* text) {
  const json j = parse_options(text, "prepare",
                               {"train", "val", "test", "seed", "min_altitude", "segment_gap_factor"});
  data::PrepareOptions o;
  o.split.train_frac = opt(j, "train", o.split.train_frac);
  o.split.val_frac = opt(j, "val", o.split.val_frac);
  o.split.test_frac = opt(j, "test", o.split.test_frac);
  o.split.seed = opt<std::uint64_t>(j, "seed", o.split.seed);
  if (j.contains("min_altitude") && !j.at("min_altitude").is_null())
    o.min_altitude = opt(j, "min_altitude", 0.0);
  o.segment_gap_factor = opt(j, "segment_gap_factor", o.segment_gap_factor);
  o.split.validate();
  return o;
}

std::vector<std::string> feature_option(const json& j) {
  if (!j.contains("features") || j.at("features").is_null()) return data::kFeatureNames;
  const auto& f = j.at("features");
  if (f.is_string()) return data::parse_feature_list(f.get<std::string>());
  if (!f.is_array()) throw ConfigError("option 'features' must be a string or an array");
  std::string joined;
  for (const auto& v : f) {
    if (!v.is_string()) throw ConfigError("option 'features' must list names");
    joined += (joined.empty() ? "" : ",") + v.get<std::string>();
  }
  return data::parse_feature_list(joined);
}

data::InputOptions input_options(const char* text) {
  const json j = parse_options(text, "input", {"features", "window", "standardize", "one_hot"});
  data::InputOptions o;
  o.features = feature_option(j);
  o.window = opt_count(j, "window", o.window);
  o.standardize = opt(j, "standardize", o.standardize);
  o.one_hot = opt(j, "one_hot", o.one_hot);
  if (o.window < 1) throw ConfigError("window must be >= 1");
  return o;
}

ojson input_options_json(const data::InputOptions& o) {
  return {{"features", o.features}, {"window", o.window}, {"standardize", o.standardize}, {"one_hot", o.one_hot}};
}

CobaConfig model_config(const char* text, std::size_t window, std::size_t n_features) {
  const json j = parse_options(text, "model",
                               {"cnn_channels", "kernel_size", "lstm_hidden", "dropout", "ablation", "window"});
  CobaConfig c;
  c.seq_len = opt_count(j, "window", window);
  c.n_features = n_features;
  c.cnn_channels = opt_count(j, "cnn_channels", c.cnn_channels);
  c.kernel_size = opt_count(j, "kernel_size", c.kernel_size);
  c.lstm_hidden = opt_count(j, "lstm_hidden", c.lstm_hidden);
  c.dropout = opt(j, "dropout", c.dropout);
  c.ablation = parse_ablation(opt<std::string>(j, "ablation", "full"));
  c.validate();
  return c;
}

TrainConfig train_config(const char* text, std::uint64_t seed) {
  const json j = parse_options(text, "train",
                               {"epochs", "batch_size", "lr", "weight_decay", "max_grad_norm",
                                "weighted_sampling", "weighted_loss", "keep_best", "eval_every"});
  TrainConfig c;
  c.epochs = opt_count(j, "epochs", c.epochs);
  c.batch_size = opt_count(j, "batch_size", c.batch_size);
  c.lr = opt(j, "lr", c.lr);
  c.weight_decay = opt(j, "weight_decay", c.weight_decay);
  if (j.contains("max_grad_norm")) {
    if (j.at("max_grad_norm").is_null()) c.max_grad_norm.reset();
    else c.max_grad_norm = opt(j, "max_grad_norm", 1.0);
  }
  c.weighted_sampling = opt(j, "weighted_sampling", c.weighted_sampling);
  c.weighted_loss = opt(j, "weighted_loss", c.weighted_loss);
  c.keep_best = opt(j, "keep_best", c.keep_best);
  c.eval_every = opt_count(j, "eval_every", c.eval_every);
  c.seed = seed;
  c.validate();
  return c;
}

ojson metrics_object(const Metrics& m, const std::string& model, const std::string& split) {
  ojson j;
  j["model"] = model;
  j["split"] = split;
  const ojson scores = ojson::parse(metrics_json(m));
  for (const auto& [k, v] : scores.items()) j[k] = v;
  return j;
}

std::string model_kind(Ablation a) { return a == Ablation::full ? "coba" : std::string(to_string(a)); }

const std::vector<data::FeatureWindow>& split_windows(const data::ModelInputs& in, std::string_view split) {
  if (split == "train") return in.train_windows;
  if (split == "val") return in.val_windows;
  if (split == "test") return in.test_windows;
  throw ConfigError("unknown split '" + std::string(split) + "'");
}

}  // namespace

extern "C" {

const char* uz_version(void) { return "1.0.0"; }

const char* uz_last_error(void) { return g_last_error.c_str(); }

void uz_string_free(char* s) { std::free(s); }

uz_status uz_scene_load(const char* path, uz_scene** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new uz_scene{radio::load_scene_config(path)};
  });
}

uz_status uz_scene_parse(const char* text, uz_scene** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new uz_scene{radio::parse_scene_config(text)};
  });
}

uz_status uz_scene_set_seed(uz_scene* scene, uint64_t seed) {
  return guarded([&] {
    need(scene, "scene");
    scene->config.seed = seed;
  });
}

void uz_scene_free(uz_scene* scene) { delete scene; }

uz_status uz_simulate_csv(const uz_scene* scene, const char* out_csv, size_t* n_samples) {
  return guarded([&] {
    need(scene, "scene");
    need(out_csv, "out_csv");
    const auto samples = radio::simulate_scene(scene->config);
    radio::write_samples_csv(fs::path(out_csv), samples);
    if (n_samples) *n_samples = samples.size();
  });
}

uz_status uz_prepare_csv(const char* csv_path, const char* options_json, uz_bundle** out) {
  return guarded([&] {
    need(csv_path, "csv_path");
    need(out, "out");
    const auto options = prepare_options(options_json);
    if (!fs::exists(csv_path)) throw DataError(std::string("dataset not found: ") + csv_path);
    std::vector<std::string> required = data::default_required_columns();
    const auto raw = data::ingest_csv(csv_path, required);
    *out = new uz_bundle{data::prepare_dataset(raw, options)};
  });
}

uz_status uz_bundle_load(const char* dir, uz_bundle** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new uz_bundle{data::load_bundle(dir)};
  });
}

uz_status uz_bundle_save(const uz_bundle* bundle, const char* dir) {
  return guarded([&] {
    need(bundle, "bundle");
    need(dir, "dir");
    data::save_bundle(bundle->bundle, dir);
  });
}

uz_status uz_bundle_stats_json(const uz_bundle* bundle, char** out_json) {
  return guarded([&] {
    need(bundle, "bundle");
    need(out_json, "out_json");
    *out_json = dup_string(data::bundle_stats_json(bundle->bundle));
  });
}

void uz_bundle_free(uz_bundle* bundle) { delete bundle; }

uz_status uz_train(const uz_bundle* bundle, const char* model_json, const char* input_json,
                   const char* train_json, uint64_t seed, const char* run_dir,
                   uz_epoch_callback on_epoch, void* user, uz_model** out_model,
                   char** out_summary_json) {
  return guarded([&] {
    need(bundle, "bundle");
    const auto in_opts = input_options(input_json);
    const auto tcfg = train_config(train_json, seed);
    const auto inputs = data::make_model_inputs(bundle->bundle, in_opts);
    const auto mcfg = model_config(model_json, in_opts.window, inputs.feature_names.size());

    auto model = std::make_unique<uz_model>(uz_model{CobaModel(mcfg, mix_seed(seed, 10))});
    model->model.set_feature_names(inputs.feature_names);

    std::optional<fs::path> dir;
    std::ofstream jsonl, curves;
    if (run_dir) {
      dir = fs::path(run_dir);
      fs::create_directories(*dir);
      write_text(*dir / "inputs.json", input_options_json(in_opts).dump(2) + "\n");
      jsonl.open(*dir / "epochs.jsonl", std::ios::binary);
      curves.open(*dir / "curves.csv", std::ios::binary);
      if (!jsonl || !curves) throw DataError("cannot write run directory " + dir->string());
      curves << curves_csv_header() << '\n';
    }
    auto cb = [&](const EpochReport& r) {
      const std::string line = epoch_report_json(r);
      if (dir) {
        jsonl << line << '\n' << std::flush;
        curves << curves_csv_row(r) << '\n' << std::flush;
      }
      if (on_epoch) on_epoch(line.c_str(), user);
    };
    const auto result = train(model->model, inputs, tcfg, cb);

    const auto test = evaluate_windows(model->model, inputs.test_windows);
    const std::string kind = model_kind(mcfg.ablation);
    ojson summary = metrics_object(test.metrics, kind, "test");
    summary["features"] = in_opts.features;
    summary["model_features"] = inputs.feature_names;
    summary["parameters"] = model->model.parameter_count();
    summary["epochs_run"] = result.epochs.size();
    summary["best_epoch"] = result.best_epoch;
    if (result.best_epoch > 0) {
      const auto& best = result.epochs[result.best_epoch - 1];
      summary["val"] = metrics_object(*best.val, kind, "val");
    }
    summary["windows"] = {{"train", inputs.train_windows.size()},
                          {"val", inputs.val_windows.size()},
                          {"test", inputs.test_windows.size()}};
    summary["seed"] = seed;
    const std::string text = summary.dump(2);
    if (dir) {
      model->model.save(*dir / "model.json");
      write_text(*dir / "metrics.json", text + "\n");
    }
    if (out_summary_json) *out_summary_json = dup_string(text);
    if (out_model) *out_model = model.release();
  });
}

uz_status uz_model_load(const char* path, uz_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    if (!fs::exists(path)) throw DataError(std::string("checkpoint not found: ") + path);
    *out = new uz_model{CobaModel::load(path)};
  });
}

uz_status uz_model_save(const uz_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    model->model.save(path);
  });
}

uz_status uz_model_describe(const uz_model* model, char** out_json) {
  return guarded([&] {
    need(model, "model");
    need(out_json, "out_json");
    *out_json = dup_string(model->model.describe());
  });
}

void uz_model_free(uz_model* model) { delete model; }

uz_status uz_evaluate(const uz_model* model, const uz_bundle* bundle, const char* input_json,
                      const char* split, char** out_metrics_json) {
  return guarded([&] {
    need(model, "model");
    need(bundle, "bundle");
    need(out_metrics_json, "out_metrics_json");
    const auto in_opts = input_options(input_json);
    const auto inputs = data::make_model_inputs(bundle->bundle, in_opts);
    const auto& names = model->model.feature_names();
    if (!names.empty() && names != inputs.feature_names)
      throw ConfigError("checkpoint features do not match the evaluation inputs");
    if (model->model.config().n_features != inputs.feature_names.size() ||
        model->model.config().seq_len != in_opts.window)
      throw ConfigError("checkpoint shape does not match the evaluation inputs");
    const std::string which = split ? split : "test";
    const auto m = evaluate(model->model, split_windows(inputs, which));
    ojson out = metrics_object(m, model_kind(model->model.config().ablation), which);
    out["features"] = in_opts.features;
    *out_metrics_json = dup_string(out.dump(2));
  });
}

uz_status uz_baseline(const uz_bundle* bundle, const char* kind, const char* options_json,
                      char** out_metrics_json) {
  return guarded([&] {
    need(bundle, "bundle");
    need(kind, "kind");
    need(out_metrics_json, "out_metrics_json");
    const std::string k(kind);
    if (k != "knn" && k != "logreg") throw ConfigError("unknown baseline '" + k + "'");
    const json j = parse_options(options_json, "baseline",
                                 {"k", "lr", "epochs", "features", "flatten_windows", "window",
                                  "standardize", "one_hot"});
    data::InputOptions in_opts;
    in_opts.features = feature_option(j);
    in_opts.window = opt_count(j, "window", in_opts.window);
    in_opts.standardize = opt(j, "standardize", true);
    in_opts.one_hot = opt(j, "one_hot", false);
    const bool flatten = opt(j, "flatten_windows", false);
    const auto inputs = data::make_model_inputs(bundle->bundle, in_opts);

    nn::Mat xtr, xte;
    std::vector<int> ytr, yte;
    if (flatten) {
      std::tie(xtr, ytr) = baselines::flatten_windows(inputs.train_windows);
      std::tie(xte, yte) = baselines::flatten_windows(inputs.test_windows);
    } else {
      xtr = inputs.train.x;
      ytr = inputs.train.y;
      xte = inputs.test.x;
      yte = inputs.test.y;
    }
    std::vector<int> pred;
    ojson params;
    if (k == "knn") {
      const auto kk = opt_count(j, "k", 5);
      const auto model = baselines::knn_fit(std::move(xtr), std::move(ytr), kk);
      pred = baselines::knn_predict_all(model, xte);
      params = {{"k", kk}};
    } else {
      baselines::LogRegConfig cfg;
      cfg.lr = opt(j, "lr", cfg.lr);
      cfg.epochs = opt_count(j, "epochs", cfg.epochs);
      const auto model = baselines::logreg_fit(xtr, ytr, cfg);
      pred = baselines::logreg_predict_all(model, xte);
      params = ojson::parse(baselines::logreg_to_json(model));
    }
    ojson out = metrics_object(compute_metrics(pred, yte), k, "test");
    out["features"] = in_opts.features;
    out["flatten_windows"] = flatten;
    out["params"] = params;
    *out_metrics_json = dup_string(out.dump(2));
  });
}

uz_status uz_fingerprint(const uz_bundle* bundle, double cell_size, const char* map_json_path,
                         char** out_metrics_json) {
  return guarded([&] {
    need(bundle, "bundle");
    need(out_metrics_json, "out_metrics_json");
    const auto train = fp::points_from_table(bundle->bundle.train);
    const auto test = fp::points_from_table(bundle->bundle.test);
    const auto map = fp::build_map(train, cell_size);
    if (map_json_path) write_text(map_json_path, fp::map_to_json(map) + "\n");
    ojson out = metrics_object(fp::evaluate_fp(train, test, cell_size), "fp", "test");
    out["cell_size"] = cell_size;
    out["voxels"] = map.cells.size();
    *out_metrics_json = dup_string(out.dump(2));
  });
}

uz_status uz_complexity(const char* model_json, size_t n_train, size_t epochs, size_t f_a, size_t f_b,
                        char** out_json) {
  return guarded([&] {
    need(out_json, "out_json");
    const auto cfg = model_config(model_json, 10, std::max<std::size_t>(f_a, 1));
    *out_json = dup_string(complexity_json(cfg, n_train, epochs, f_a, f_b));
  });
}

uz_status uz_sha256_file(const char* path, char* out_hex) {
  return guarded([&] {
    need(path, "path");
    need(out_hex, "out_hex");
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(std::string("cannot read ") + path);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256 init failed");
    char buf[1 << 16];
    while (f) {
      f.read(buf, sizeof buf);
      if (f.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(f.gcount())) != 1)
        throw std::runtime_error("sha256 update failed");
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) throw std::runtime_error("sha256 final failed");
    for (unsigned int i = 0; i < len; ++i) std::snprintf(out_hex + 2 * i, 3, "%02x", md[i]);
  });
}

}  // extern "C"
