// uavzone command-line front end. Talks to the library only through uavzone.h.

#include "uavzone.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Carries a library status out of nested helpers.
struct Failure {
  uz_status status;
  std::string message;
};

int exit_code(uz_status s) {
  switch (s) {
    case UZ_OK: return 0;
    case UZ_ERR_CONFIG: return 2;
    case UZ_ERR_DATA: return 3;
    case UZ_ERR_NUMERIC: return 4;
    default: return 1;
  }
}

void check(uz_status s) {
  if (s != UZ_OK) throw Failure{s, uz_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  uz_string_free(s);
  return out;
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Scene = Handle<uz_scene, uz_scene_free>;
using Bundle = Handle<uz_bundle, uz_bundle_free>;
using Model = Handle<uz_model, uz_model_free>;

std::string sha256(const fs::path& p) {
  char hex[65] = {0};
  check(uz_sha256_file(p.string().c_str(), hex));
  return hex;
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw Failure{UZ_ERR_DATA, "cannot write " + p.string()};
}

// Hashes every regular file under a path (or the file itself), sorted by name.
ojson hash_tree(const fs::path& p) {
  ojson out = ojson::object();
  if (fs::is_regular_file(p)) {
    out[p.filename().string()] = sha256(p);
  } else if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p))
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out[fs::relative(f, p).generic_string()] = sha256(f);
  }
  return out;
}

struct Manifest {
  fs::path path;
  ojson doc;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::vector<fs::path> inputs, outputs;

  void begin(const std::string& sub, std::uint64_t seed, const std::vector<std::string>& argv, ojson config) {
    doc["tool"] = "uavzone";
    doc["version"] = uz_version();
    doc["subcommand"] = sub;
    doc["argv"] = argv;
    doc["cwd"] = fs::current_path().string();
    doc["seed"] = seed;
    doc["config"] = std::move(config);
    doc["inputs"] = ojson::object();
    for (const auto& p : inputs) doc["inputs"][p.string()] = nullptr;
    doc["outputs"] = ojson::object();
    for (const auto& p : outputs) doc["outputs"][p.string()] = nullptr;
    doc["status"] = "running";
    if (!path.empty()) write_file(path, doc.dump(2) + "\n");
  }

  void finish(int code, const std::string& error) {
    if (path.empty()) return;
    for (const auto& p : inputs)
      if (fs::exists(p)) doc["inputs"][p.string()] = hash_tree(p);
    for (const auto& p : outputs)
      if (fs::exists(p)) doc["outputs"][p.string()] = hash_tree(p);
    doc["status"] = code == 0 ? "ok" : "error";
    doc["exit_code"] = code;
    if (!error.empty()) doc["error"] = error;
    doc["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
      write_file(path, doc.dump(2) + "\n");
    } catch (const Failure& f) {
      std::cerr << "warning: " << f.message << "\n";
    }
  }
};

// A dataset argument is either a prepared bundle directory or a raw CSV.
void open_data(const std::string& path, std::uint64_t seed, Bundle& out) {
  if (fs::is_directory(path)) {
    check(uz_bundle_load(path.c_str(), &out.p));
    return;
  }
  const std::string opts = ojson{{"seed", seed}}.dump();
  check(uz_prepare_csv(path.c_str(), opts.c_str(), &out.p));
}

ojson features_value(const std::string& spec) {
  if (spec == "all") return "all";
  ojson arr = ojson::array();
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) arr.push_back(item);
  return arr;
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Failure{UZ_ERR_DATA, "cannot read " + p.string()};
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uavzone: restricted-airspace classification from 5G radio measurements"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::uint64_t seed = 0;
  std::string manifest_path;
  app.add_option("--seed", seed, "Run seed (simulation, splitting, initialization, sampling)");
  app.add_option("--manifest", manifest_path, "Manifest path (default: next to the output)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a scene into a measurement CSV");
  std::string sim_config, sim_out;
  sim->add_option("--config", sim_config, "Scene file")->required();
  sim->add_option("--out", sim_out, "Output CSV")->required();

  // prepare
  auto* prep = app.add_subcommand("prepare", "Clean, split and impute a CSV into a dataset bundle");
  std::string prep_in, prep_out;
  double f_train = 0.7, f_val = 0.15, f_test = 0.15, gap_factor = 5.0;
  std::optional<double> min_alt;
  prep->add_option("--input", prep_in, "Measurement CSV")->required();
  prep->add_option("--out", prep_out, "Bundle directory")->required();
  prep->add_option("--train-frac", f_train, "Training fraction")->capture_default_str();
  prep->add_option("--val-frac", f_val, "Validation fraction")->capture_default_str();
  prep->add_option("--test-frac", f_test, "Test fraction")->capture_default_str();
  prep->add_option("--min-altitude", min_alt, "Drop rows below this altitude (m)");
  prep->add_option("--gap-factor", gap_factor, "Segment break: step > factor x median step")->capture_default_str();

  // shared model input flags
  std::string features = "all";
  std::size_t window = 10;
  bool one_hot = false;

  // train
  auto* tr = app.add_subcommand("train", "Train the sequence classifier");
  std::string tr_data, tr_out, ablation = "full";
  std::size_t epochs = 30, batch = 64, channels = 64, hidden = 64, eval_every = 1;
  double lr = 1e-4, wd = 0.01, clip = 1.0, dropout = 0.3;
  bool no_clip = false, uniform = false, unweighted = false, last = false;
  tr->add_option("--data", tr_data, "Bundle directory or raw CSV")->required();
  tr->add_option("--out", tr_out, "Run directory")->required();
  tr->add_option("--features", features, "Comma list of features or 'all'")->capture_default_str();
  tr->add_option("--window", window, "Window length")->capture_default_str();
  tr->add_flag("--one-hot", one_hot, "One-hot encode pci / ssb_idx");
  tr->add_option("--ablation", ablation, "full | lstm_only")->capture_default_str();
  tr->add_option("--epochs", epochs, "Epochs")->capture_default_str();
  tr->add_option("--batch-size", batch, "Batch size")->capture_default_str();
  tr->add_option("--lr", lr, "AdamW learning rate")->capture_default_str();
  tr->add_option("--weight-decay", wd, "AdamW weight decay")->capture_default_str();
  tr->add_option("--max-grad-norm", clip, "Global gradient norm cap")->capture_default_str();
  tr->add_flag("--no-clip", no_clip, "Disable gradient clipping");
  tr->add_flag("--uniform-sampling", uniform, "Uniform instead of class-weighted sampling");
  tr->add_flag("--unweighted-loss", unweighted, "Unit class weights in the loss");
  tr->add_flag("--keep-last", last, "Keep the final epoch instead of the best validation epoch");
  tr->add_option("--eval-every", eval_every, "Validation cadence in epochs")->capture_default_str();
  tr->add_option("--channels", channels, "Convolution channels")->capture_default_str();
  tr->add_option("--hidden", hidden, "LSTM hidden size")->capture_default_str();
  tr->add_option("--dropout", dropout, "Dropout rate")->capture_default_str();

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  std::string ev_ckpt, ev_data, ev_inputs, ev_out, ev_split = "test";
  ev->add_option("--checkpoint", ev_ckpt, "model.json from a train run")->required();
  ev->add_option("--data", ev_data, "Bundle directory or raw CSV")->required();
  ev->add_option("--inputs", ev_inputs, "inputs.json (default: next to the checkpoint)");
  ev->add_option("--split", ev_split, "train | val | test")->capture_default_str();
  ev->add_option("--out", ev_out, "Metrics JSON")->required();

  // baseline
  auto* bl = app.add_subcommand("baseline", "Fit and score a KNN or logistic-regression baseline");
  std::string bl_data, bl_out, bl_kind = "knn";
  std::size_t k = 5, lr_epochs = 200;
  double lr_rate = 0.1;
  bool flatten = false;
  bl->add_option("--data", bl_data, "Bundle directory or raw CSV")->required();
  bl->add_option("--kind", bl_kind, "knn | logreg")->capture_default_str();
  bl->add_option("--k", k, "Neighbors")->capture_default_str();
  bl->add_option("--lr", lr_rate, "Logistic regression step size")->capture_default_str();
  bl->add_option("--epochs", lr_epochs, "Logistic regression epochs")->capture_default_str();
  bl->add_option("--features", features, "Comma list of features or 'all'")->capture_default_str();
  bl->add_flag("--flatten-windows", flatten, "Classify flattened windows instead of samples");
  bl->add_option("--window", window, "Window length for --flatten-windows")->capture_default_str();
  bl->add_option("--out", bl_out, "Metrics JSON")->required();

  // fingerprint
  auto* fpc = app.add_subcommand("fingerprint", "Voxel fingerprinting benchmark on positions");
  std::string fp_data, fp_out, fp_map;
  double cell = 10.0;
  fpc->add_option("--data", fp_data, "Bundle directory or raw CSV with x,y,h")->required();
  fpc->add_option("--cell-size", cell, "Voxel edge (m)")->capture_default_str();
  fpc->add_option("--map", fp_map, "Write the voxel map JSON here");
  fpc->add_option("--out", fp_out, "Metrics JSON")->required();

  // complexity
  auto* cx = app.add_subcommand("complexity", "Analytic operation counts per model");
  std::string cx_out;
  std::size_t n_train = 15000, cx_epochs = 30;
  std::vector<std::size_t> fcounts = {7, 2};
  cx->add_option("--n-train", n_train, "Training set size")->capture_default_str();
  cx->add_option("--epochs", cx_epochs, "Epochs")->capture_default_str();
  cx->add_option("--feature-counts", fcounts, "Two feature counts to compare")->expected(2)->delimiter(',')->capture_default_str();
  cx->add_option("--channels", channels, "Convolution channels")->capture_default_str();
  cx->add_option("--hidden", hidden, "LSTM hidden size")->capture_default_str();
  cx->add_option("--window", window, "Window length")->capture_default_str();
  cx->add_option("--out", cx_out, "Report JSON")->required();

  // report
  auto* rp = app.add_subcommand("report", "Tabulate metrics JSON files (or run directories)");
  std::vector<std::string> rp_in;
  std::string rp_out;
  rp->add_option("inputs", rp_in, "Metrics files or directories holding metrics.json")->required();
  rp->add_option("--out", rp_out, "Write here (.csv or .md); stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const bool seed_given = app.count("--seed") > 0;
  std::vector<std::string> args(argv, argv + argc);
  Manifest man;
  auto manifest_for = [&](const fs::path& out, bool is_dir) {
    if (!manifest_path.empty()) return fs::path(manifest_path);
    return is_dir ? out / "manifest.json" : fs::path(out.string() + ".manifest.json");
  };

  int code = 0;
  std::string error;
  try {
    if (*sim) {
      man.path = manifest_for(sim_out, false);
      man.inputs = {sim_config};
      man.outputs = {sim_out};
      man.begin("simulate", seed, args, {{"config", sim_config}, {"seed_override", seed_given}, {"out", sim_out}});
      Scene scene;
      check(uz_scene_load(sim_config.c_str(), &scene.p));
      if (seed_given) check(uz_scene_set_seed(scene.p, seed));
      if (fs::path(sim_out).has_parent_path()) fs::create_directories(fs::path(sim_out).parent_path());
      std::size_t n = 0;
      check(uz_simulate_csv(scene.p, sim_out.c_str(), &n));
      std::cerr << "simulated " << n << " samples -> " << sim_out << "\n";
    } else if (*prep) {
      man.path = manifest_for(prep_out, true);
      man.inputs = {prep_in};
      man.outputs = {prep_out};
      ojson opts{{"train", f_train}, {"val", f_val}, {"test", f_test}, {"seed", seed}, {"segment_gap_factor", gap_factor}};
      if (min_alt) opts["min_altitude"] = *min_alt;
      fs::create_directories(prep_out);
      man.begin("prepare", seed, args, opts);
      Bundle b;
      const std::string o = opts.dump();
      check(uz_prepare_csv(prep_in.c_str(), o.c_str(), &b.p));
      check(uz_bundle_save(b.p, prep_out.c_str()));
      char* stats = nullptr;
      check(uz_bundle_stats_json(b.p, &stats));
      std::cerr << take(stats) << "\n";
    } else if (*tr) {
      man.path = manifest_for(tr_out, true);
      man.inputs = {tr_data};
      man.outputs = {tr_out};
      const ojson model{{"cnn_channels", channels}, {"lstm_hidden", hidden}, {"dropout", dropout}, {"ablation", ablation}};
      const ojson inputs{{"features", features_value(features)}, {"window", window}, {"one_hot", one_hot}};
      ojson train{{"epochs", epochs}, {"batch_size", batch}, {"lr", lr}, {"weight_decay", wd},
                  {"weighted_sampling", !uniform}, {"weighted_loss", !unweighted}, {"keep_best", !last},
                  {"eval_every", eval_every}};
      train["max_grad_norm"] = no_clip ? ojson(nullptr) : ojson(clip);
      fs::create_directories(tr_out);
      man.begin("train", seed, args, {{"data", tr_data}, {"model", model}, {"inputs", inputs}, {"train", train}});
      Bundle b;
      open_data(tr_data, seed, b);
      const std::string ms = model.dump(), is = inputs.dump(), ts = train.dump();
      char* summary = nullptr;
      auto progress = [](const char* line, void*) { std::cerr << line << "\n"; };
      check(uz_train(b.p, ms.c_str(), is.c_str(), ts.c_str(), seed, tr_out.c_str(), progress, nullptr,
                     nullptr, &summary));
      std::cout << take(summary) << "\n";
    } else if (*ev) {
      man.path = manifest_for(ev_out, false);
      const fs::path inputs_path = ev_inputs.empty() ? fs::path(ev_ckpt).parent_path() / "inputs.json" : fs::path(ev_inputs);
      man.inputs = {ev_ckpt, ev_data, inputs_path};
      man.outputs = {ev_out};
      man.begin("eval", seed, args, {{"checkpoint", ev_ckpt}, {"data", ev_data}, {"inputs", inputs_path.string()}, {"split", ev_split}});
      Model m;
      check(uz_model_load(ev_ckpt.c_str(), &m.p));
      Bundle b;
      open_data(ev_data, seed, b);
      const std::string in_json = read_text(inputs_path);
      char* metrics = nullptr;
      check(uz_evaluate(m.p, b.p, in_json.c_str(), ev_split.c_str(), &metrics));
      const std::string text = take(metrics);
      write_file(ev_out, text + "\n");
      std::cout << text << "\n";
    } else if (*bl) {
      man.path = manifest_for(bl_out, false);
      man.inputs = {bl_data};
      man.outputs = {bl_out};
      const ojson opts{{"k", k}, {"lr", lr_rate}, {"epochs", lr_epochs}, {"features", features_value(features)},
                       {"flatten_windows", flatten}, {"window", window}};
      man.begin("baseline", seed, args, {{"data", bl_data}, {"kind", bl_kind}, {"options", opts}});
      Bundle b;
      open_data(bl_data, seed, b);
      const std::string o = opts.dump();
      char* metrics = nullptr;
      check(uz_baseline(b.p, bl_kind.c_str(), o.c_str(), &metrics));
      const std::string text = take(metrics);
      write_file(bl_out, text + "\n");
      std::cout << text << "\n";
    } else if (*fpc) {
      man.path = manifest_for(fp_out, false);
      man.inputs = {fp_data};
      man.outputs = {fp_out};
      if (!fp_map.empty()) man.outputs.push_back(fp_map);
      man.begin("fingerprint", seed, args, {{"data", fp_data}, {"cell_size", cell}, {"map", fp_map}});
      Bundle b;
      open_data(fp_data, seed, b);
      char* metrics = nullptr;
      if (!fp_map.empty() && fs::path(fp_map).has_parent_path()) fs::create_directories(fs::path(fp_map).parent_path());
      check(uz_fingerprint(b.p, cell, fp_map.empty() ? nullptr : fp_map.c_str(), &metrics));
      const std::string text = take(metrics);
      write_file(fp_out, text + "\n");
      std::cout << text << "\n";
    } else if (*cx) {
      man.path = manifest_for(cx_out, false);
      man.outputs = {cx_out};
      const ojson model{{"cnn_channels", channels}, {"lstm_hidden", hidden}, {"window", window}};
      man.begin("complexity", seed, args, {{"model", model}, {"n_train", n_train}, {"epochs", cx_epochs}, {"feature_counts", fcounts}});
      const std::string ms = model.dump();
      char* out = nullptr;
      check(uz_complexity(ms.c_str(), n_train, cx_epochs, fcounts.at(0), fcounts.at(1), &out));
      const std::string text = take(out);
      write_file(cx_out, text + "\n");
      std::cout << text << "\n";
    } else if (*rp) {
      if (!rp_out.empty()) {
        man.path = manifest_for(rp_out, false);
        man.outputs = {rp_out};
      }
      std::vector<fs::path> files;
      for (const auto& s : rp_in) files.push_back(fs::is_directory(s) ? fs::path(s) / "metrics.json" : fs::path(s));
      man.inputs = files;
      man.begin("report", seed, args, {{"inputs", rp_in}});
      const bool csv = fs::path(rp_out).extension() == ".csv";
      std::ostringstream os;
      if (csv) os << "source,model,split,features,accuracy,precision,recall,f1,n\n";
      else os << "| source | model | split | features | accuracy | precision | recall | f1 | n |\n"
              << "|---|---|---|---|---|---|---|---|---|\n";
      for (const auto& f : files) {
        ojson j;
        try {
          j = ojson::parse(read_text(f));
        } catch (const nlohmann::json::exception& e) {
          throw Failure{UZ_ERR_DATA, f.string() + ": " + e.what()};
        }
        for (const char* key : {"accuracy", "precision", "recall", "f1"})
          if (!j.contains(key)) throw Failure{UZ_ERR_DATA, f.string() + ": not a metrics file"};
        std::string feats = "all";
        if (j.contains("features") && j["features"].is_array()) {
          feats.clear();
          for (const auto& v : j["features"]) feats += (feats.empty() ? "" : csv ? ";" : ", ") + v.get<std::string>();
        }
        const std::string sep = csv ? "," : " | ";
        os << (csv ? "" : "| ") << f.string() << sep << j.value("model", "?") << sep << j.value("split", "?") << sep
           << feats << sep << fmt(j["accuracy"].get<double>()) << sep << fmt(j["precision"].get<double>()) << sep
           << fmt(j["recall"].get<double>()) << sep << fmt(j["f1"].get<double>()) << sep
           << j.value("n", std::size_t{0}) << (csv ? "" : " |") << "\n";
      }
      if (rp_out.empty()) std::cout << os.str();
      else write_file(rp_out, os.str());
    }
  } catch (const Failure& f) {
    code = exit_code(f.status);
    error = f.message;
  } catch (const std::exception& e) {
    code = 1;
    error = e.what();
  }
  if (!error.empty()) std::cerr << "error: " << error << "\n";
  man.finish(code, error);
  return code;
}
