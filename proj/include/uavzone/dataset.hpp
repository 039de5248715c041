#pragma once

// Measurement CSV -> cleaned, split, imputed tables -> standardized L-step windows.
//
// Order of operations in prepare_dataset():
//   harmonize names, flatten `Mbr k` slots, drop rows without a class,
//   optional take-off/landing filter, stratified split on labels,
//   impute (segment-wise interpolation, then train-median fill).
// Standardization and windowing happen later in make_model_inputs() so one
// prepared bundle serves any feature subset.

#include "uavzone/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uavzone::data {

// Column order of the full feature vector.
inline const std::vector<std::string> kFeatureNames = {
    "pci", "ssb_idx", "rssi", "ssb_rssi", "ss_rsrp", "ss_sinr", "ss_rsrq"};

bool is_categorical(std::string_view feature);

// Missing cells are NaN.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;  // one vector per column

  std::size_t rows() const { return values.empty() ? 0 : values.front().size(); }
  // -1 when absent
  int find(std::string_view name) const;
  const std::vector<double>& column(std::string_view name) const;
};

// Lower-case, trim, collapse non-alphanumerics to '_', strip redundant
// prefixes ("nr_", "5g_nr_", "nr5g_") and map aliases (rsrp -> ss_rsrp, ...).
std::string harmonize_column(std::string_view raw);

// Wide `Mbr k <feature>` columns become one row per populated slot.
RawTable flatten_member_slots(const RawTable& wide);

// Parses CSV text; numeric cells that fail to parse become missing. Throws
// DataError naming the first required column that is absent.
RawTable parse_csv(std::string_view text, std::span<const std::string> required);
RawTable ingest_csv(const std::filesystem::path& path, std::span<const std::string> required);
std::vector<std::string> default_required_columns();

struct SplitSpec {
  double train_frac = 0.70;
  double val_frac = 0.15;
  double test_frac = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;  // each ascending
};

// Per class c: shuffle its indices, take round(n_c * train_frac) for train and
// round(n_c * val_frac) for validation, the rest for test.
SplitIndices stratified_split(std::span<const int> labels, const SplitSpec& spec);

// Segment id per row: a new segment starts where the timestamp step exceeds
// gap_factor times the median step (or goes backwards).
std::vector<std::size_t> segment_ids(std::span<const double> timestamps, double gap_factor = 5.0);

// In place on an N x f matrix with NaN holes. Returns the per-column fill medians.
std::vector<double> impute(nn::Mat& x, std::span<const std::size_t> segments,
                           std::span<const std::size_t> train_rows,
                           std::span<const std::string> names);

struct FeatureTable {
  std::vector<std::string> feature_names;
  nn::Mat x;  // N x f
  std::vector<int> y;
  std::vector<double> timestamps;
  std::optional<nn::Mat> positions;  // N x 3 (x, y, h)

  std::size_t rows() const { return y.size(); }
  int feature_index(std::string_view name) const;
  FeatureTable select_rows(std::span<const std::size_t> rows) const;
};

struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> std;
};

// Training-split statistics; std is floored at 1e-8.
ColumnStats fit_standardizer(const nn::Mat& train);
void standardize(nn::Mat& x, const ColumnStats& stats);

struct FeatureWindow {
  nn::Mat x;  // L x f
  int y = 0;
  std::size_t origin_index = 0;
};

std::vector<FeatureWindow> make_windows(const FeatureTable& table, std::size_t length);

// w_i = N / (2 N_i); both classes must be present.
std::vector<double> class_weights(std::span<const int> labels);
std::vector<double> sampler_probabilities(std::span<const int> window_labels);

struct PrepareOptions {
  SplitSpec split;
  std::optional<double> min_altitude;  // take-off / landing filter, e.g. 2 m
  double segment_gap_factor = 5.0;
};

struct DatasetBundle {
  FeatureTable train, val, test;  // imputed, original units, all features
  std::vector<double> medians;    // imputation fill values per feature
  PrepareOptions options;
  std::size_t dropped_unlabeled = 0;
  std::size_t dropped_filtered = 0;
};

DatasetBundle prepare_dataset(const RawTable& raw, const PrepareOptions& options);

// Directory with train.csv, val.csv, test.csv and stats.json.
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);
DatasetBundle load_bundle(const std::filesystem::path& dir);
std::string bundle_stats_json(const DatasetBundle& bundle);

struct InputOptions {
  std::vector<std::string> features = kFeatureNames;
  std::size_t window = 10;
  bool standardize = true;
  bool one_hot = false;  // expand pci / ssb_idx into indicator columns
};

struct ModelInputs {
  std::vector<std::string> feature_names;  // model columns after one-hot
  ColumnStats stats;
  FeatureTable train, val, test;  // standardized per-sample tables
  std::vector<FeatureWindow> train_windows, val_windows, test_windows;
  std::vector<double> class_weights;  // from training windows
  std::vector<double> sampler_probs;
};

ModelInputs make_model_inputs(const DatasetBundle& bundle, const InputOptions& options);

// "pci,ssb_idx" -> names; "all" -> every feature. Unknown names are ConfigErrors.
std::vector<std::string> parse_feature_list(std::string_view spec);

}  // namespace uavzone::data
