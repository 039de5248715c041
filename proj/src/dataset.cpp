#include "uavzone/dataset.hpp"

#include "uavzone/error.hpp"
#include "uavzone/radio.hpp"
#include "uavzone/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace uavzone::data {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

bool missing(double v) { return std::isnan(v); }

double parse_cell(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return kMissing;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return kMissing;
  return v;
}

// RFC-4180-ish: quoted fields, doubled quotes inside quotes.
std::vector<std::vector<std::string>> split_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2));
  return (lo + hi) / 2.0;
}

// Fisher-Yates with our own index draw: std::shuffle's output is library-specific.
void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> m = {
      {"rsrp", "ss_rsrp"},          {"ssrsrp", "ss_rsrp"},
      {"rsrq", "ss_rsrq"},          {"ssrsrq", "ss_rsrq"},
      {"sinr", "ss_sinr"},          {"sssinr", "ss_sinr"},
      {"ss_rssi", "ssb_rssi"},      {"ssbrssi", "ssb_rssi"},
      {"ssb_index", "ssb_idx"},     {"ssb_id", "ssb_idx"},
      {"ssbidx", "ssb_idx"},        {"beam_idx", "ssb_idx"},
      {"physical_cell_id", "pci"},  {"cell_id", "pci"},
      {"label", "class"},           {"altitude", "h"},
      {"alt", "h"},                 {"time", "timestamp"},
      {"ts", "timestamp"},
  };
  return m;
}

bool parse_member_prefix(const std::string& name, int& slot, std::string& rest) {
  if (name.rfind("mbr_", 0) != 0) return false;
  std::size_t i = 4;
  int k = 0;
  const std::size_t start = i;
  while (i < name.size() && std::isdigit(static_cast<unsigned char>(name[i]))) k = k * 10 + (name[i++] - '0');
  if (i == start || i >= name.size() || name[i] != '_') return false;
  slot = k;
  rest = name.substr(i + 1);
  return !rest.empty();
}

void check_required(const RawTable& t, std::span<const std::string> required) {
  for (const auto& name : required)
    if (t.find(name) < 0) throw DataError("missing mandatory column '" + name + "'");
}

}  // namespace

bool is_categorical(std::string_view feature) { return feature == "pci" || feature == "ssb_idx"; }

int RawTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

const std::vector<double>& RawTable::column(std::string_view name) const {
  const int i = find(name);
  if (i < 0) throw DataError("missing column '" + std::string(name) + "'");
  return values[static_cast<std::size_t>(i)];
}

std::string harmonize_column(std::string_view raw) {
  std::string s;
  bool pending_sep = false;
  for (char c : raw) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      if (pending_sep && !s.empty()) s += '_';
      pending_sep = false;
      s += static_cast<char>(std::tolower(u));
    } else {
      pending_sep = true;
    }
  }
  int slot = 0;
  std::string rest;
  if (parse_member_prefix(s, slot, rest))
    return "mbr_" + std::to_string(slot) + "_" + harmonize_column(rest);
  for (const char* prefix : {"5g_nr_", "nr5g_", "nr_"}) {
    const std::string p(prefix);
    if (s.size() > p.size() && s.rfind(p, 0) == 0) {
      s = s.substr(p.size());
      break;
    }
  }
  const auto it = aliases().find(s);
  return it == aliases().end() ? s : it->second;
}

RawTable flatten_member_slots(const RawTable& wide) {
  std::map<int, std::map<std::string, std::size_t>> slots;  // slot -> feature -> column
  std::vector<std::size_t> shared;
  std::set<std::string> slot_features;
  for (std::size_t c = 0; c < wide.columns.size(); ++c) {
    int k = 0;
    std::string rest;
    if (parse_member_prefix(wide.columns[c], k, rest)) {
      slots[k][rest] = c;
      slot_features.insert(rest);
    } else {
      shared.push_back(c);
    }
  }
  if (slots.empty()) return wide;

  RawTable out;
  std::vector<std::size_t> kept_shared;
  for (std::size_t c : shared) {
    if (slot_features.count(wide.columns[c])) continue;  // slot value wins
    kept_shared.push_back(c);
    out.columns.push_back(wide.columns[c]);
  }
  const std::vector<std::string> feats(slot_features.begin(), slot_features.end());
  for (const auto& f : feats) out.columns.push_back(f);
  out.values.assign(out.columns.size(), {});

  for (std::size_t r = 0; r < wide.rows(); ++r) {
    for (const auto& [k, cols] : slots) {
      bool populated = false;
      for (const auto& [f, c] : cols)
        if (!missing(wide.values[c][r])) populated = true;
      if (!populated) continue;
      std::size_t o = 0;
      for (std::size_t c : kept_shared) out.values[o++].push_back(wide.values[c][r]);
      for (const auto& f : feats) {
        const auto it = cols.find(f);
        out.values[o++].push_back(it == cols.end() ? kMissing : wide.values[it->second][r]);
      }
    }
  }
  return out;
}

std::vector<std::string> default_required_columns() {
  std::vector<std::string> r = kFeatureNames;
  r.push_back("class");
  return r;
}

RawTable parse_csv(std::string_view text, std::span<const std::string> required) {
  const auto rows = split_csv(text);
  if (rows.empty()) throw DataError("CSV has no header row");
  RawTable wide;
  for (const auto& h : rows.front()) wide.columns.push_back(harmonize_column(h));
  for (std::size_t i = 0; i < wide.columns.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (!wide.columns[i].empty() && wide.columns[i] == wide.columns[j])
        throw DataError("duplicate column '" + wide.columns[i] + "' after name harmonization");
  wide.values.assign(wide.columns.size(), {});
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    for (std::size_t c = 0; c < wide.columns.size(); ++c)
      wide.values[c].push_back(c < row.size() ? parse_cell(row[c]) : kMissing);
  }
  RawTable t = flatten_member_slots(wide);
  check_required(t, required);
  return t;
}

RawTable ingest_csv(const std::filesystem::path& path, std::span<const std::string> required) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str(), required);
}

// ---------------------------------------------------------------------------

void SplitSpec::validate() const {
  if (!(train_frac > 0 && val_frac >= 0 && test_frac >= 0))
    throw ConfigError("split fractions must be non-negative with train > 0");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
}

SplitIndices stratified_split(std::span<const int> labels, const SplitSpec& spec) {
  spec.validate();
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() < 2) throw DataError("insufficient samples to stratify: need both classes");
  for (const auto& [c, idx] : by_class)
    if (idx.size() < 3)
      throw DataError("insufficient samples to stratify: class " + std::to_string(c) + " has " +
                      std::to_string(idx.size()));

  SplitIndices out;
  for (auto& [c, idx] : by_class) {
    Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(c) + 101));
    shuffle(idx, rng);
    const double n = static_cast<double>(idx.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * spec.train_frac));
    const auto n_val = std::min(static_cast<std::size_t>(std::llround(n * spec.val_frac)),
                                idx.size() - n_train);
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.val.insert(out.val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                   idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<std::size_t> segment_ids(std::span<const double> timestamps, double gap_factor) {
  std::vector<std::size_t> seg(timestamps.size(), 0);
  std::vector<double> steps;
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    const double d = timestamps[i] - timestamps[i - 1];
    if (d > 0) steps.push_back(d);
  }
  const double limit = steps.empty() ? std::numeric_limits<double>::infinity()
                                     : gap_factor * median_of(steps);
  std::size_t id = 0;
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    const double d = timestamps[i] - timestamps[i - 1];
    if (missing(d) || d < 0 || d > limit) ++id;
    seg[i] = id;
  }
  return seg;
}

std::vector<double> impute(nn::Mat& x, std::span<const std::size_t> segments,
                           std::span<const std::size_t> train_rows,
                           std::span<const std::string> names) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (segments.size() != n) throw std::invalid_argument("impute: segment ids do not match rows");
  if (names.size() != static_cast<std::size_t>(x.cols()))
    throw std::invalid_argument("impute: names do not match columns");
  std::vector<double> medians(names.size(), 0.0);

  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto& name = names[static_cast<std::size_t>(j)];
    std::vector<double> observed;
    for (std::size_t r : train_rows)
      if (!missing(x(static_cast<Eigen::Index>(r), j))) observed.push_back(x(static_cast<Eigen::Index>(r), j));
    bool any = !observed.empty();
    for (std::size_t r = 0; r < n && !any; ++r) any = !missing(x(static_cast<Eigen::Index>(r), j));
    if (!any) throw DataError("column '" + name + "' has no observed values");
    if (observed.empty()) throw DataError("column '" + name + "' has no observed training values");
    const double med = median_of(observed);
    medians[static_cast<std::size_t>(j)] = med;

    // Interior gaps: linear over row index, within one segment.
    std::size_t i = 0;
    while (i < n) {
      if (!missing(x(static_cast<Eigen::Index>(i), j))) {
        ++i;
        continue;
      }
      std::size_t end = i;
      while (end < n && missing(x(static_cast<Eigen::Index>(end), j))) ++end;
      const bool has_left = i > 0 && segments[i - 1] == segments[i];
      const bool has_right = end < n && segments[end] == segments[end - 1];
      if (has_left && has_right && segments[i - 1] == segments[end]) {
        const double a = x(static_cast<Eigen::Index>(i - 1), j);
        const double b = x(static_cast<Eigen::Index>(end), j);
        const double span = static_cast<double>(end - (i - 1));
        for (std::size_t k = i; k < end; ++k)
          x(static_cast<Eigen::Index>(k), j) = a + (b - a) * static_cast<double>(k - (i - 1)) / span;
      }
      i = end;
    }
    for (std::size_t r = 0; r < n; ++r)
      if (missing(x(static_cast<Eigen::Index>(r), j))) x(static_cast<Eigen::Index>(r), j) = med;
  }
  return medians;
}

// ---------------------------------------------------------------------------

int FeatureTable::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i)
    if (feature_names[i] == name) return static_cast<int>(i);
  return -1;
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> rows) const {
  FeatureTable t;
  t.feature_names = feature_names;
  t.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  if (positions) t.positions = nn::Mat(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(rows[k]);
    t.x.row(static_cast<Eigen::Index>(k)) = x.row(r);
    t.y.push_back(y[rows[k]]);
    t.timestamps.push_back(timestamps[rows[k]]);
    if (positions) t.positions->row(static_cast<Eigen::Index>(k)) = positions->row(r);
  }
  return t;
}

ColumnStats fit_standardizer(const nn::Mat& train) {
  if (train.rows() == 0) throw DataError("cannot standardize an empty training split");
  ColumnStats s;
  const double n = static_cast<double>(train.rows());
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    const double mean = train.col(j).sum() / n;
    const double var = (train.col(j).array() - mean).square().sum() / n;
    s.mean.push_back(mean);
    s.std.push_back(std::max(std::sqrt(var), 1e-8));
  }
  return s;
}

void standardize(nn::Mat& x, const ColumnStats& stats) {
  if (stats.mean.size() != static_cast<std::size_t>(x.cols()))
    throw std::invalid_argument("standardize: statistics do not match columns");
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    x.col(j) = (x.col(j).array() - stats.mean[k]) / stats.std[k];
  }
}

std::vector<FeatureWindow> make_windows(const FeatureTable& table, std::size_t length) {
  if (length < 1) throw ConfigError("window length must be >= 1");
  const std::size_t n = table.rows();
  if (n < length)
    throw DataError("split shorter than window (" + std::to_string(n) + " rows, window " +
                    std::to_string(length) + ")");
  std::vector<FeatureWindow> out;
  out.reserve(n - length + 1);
  const auto L = static_cast<Eigen::Index>(length);
  for (std::size_t i = 0; i + length <= n; ++i) {
    FeatureWindow w;
    w.x = table.x.middleRows(static_cast<Eigen::Index>(i), L);
    w.y = table.y[i + length - 1];
    w.origin_index = i;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<double> class_weights(std::span<const int> labels) {
  std::size_t counts[2] = {0, 0};
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
    ++counts[y];
  }
  if (counts[0] == 0 || counts[1] == 0) throw DataError("class weights need both classes present");
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(counts[0])), n / (2.0 * static_cast<double>(counts[1]))};
}

std::vector<double> sampler_probabilities(std::span<const int> window_labels) {
  const auto w = class_weights(window_labels);
  double total = 0.0;
  for (int y : window_labels) total += w[static_cast<std::size_t>(y)];
  std::vector<double> p;
  p.reserve(window_labels.size());
  for (int y : window_labels) p.push_back(w[static_cast<std::size_t>(y)] / total);
  return p;
}

// ---------------------------------------------------------------------------

DatasetBundle prepare_dataset(const RawTable& raw_in, const PrepareOptions& options) {
  options.split.validate();
  const RawTable raw = flatten_member_slots(raw_in);
  check_required(raw, default_required_columns());

  const auto& cls = raw.column("class");
  const int col_h = raw.find("h");
  const int col_flight = raw.find("in_flight");
  if (options.min_altitude && col_h < 0)
    throw ConfigError("altitude filter requires an 'h' column");

  DatasetBundle bundle;
  bundle.options = options;
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const double c = cls[r];
    if (missing(c)) {
      ++bundle.dropped_unlabeled;
      continue;
    }
    if (c != 0.0 && c != 1.0)
      throw DataError("class must be 0 or 1 (data row " + std::to_string(r + 1) + ")");
    if (col_flight >= 0) {
      const double f = raw.values[static_cast<std::size_t>(col_flight)][r];
      if (!missing(f) && f == 0.0) {
        ++bundle.dropped_filtered;
        continue;
      }
    }
    if (options.min_altitude) {
      const double h = raw.values[static_cast<std::size_t>(col_h)][r];
      if (!missing(h) && h < *options.min_altitude) {
        ++bundle.dropped_filtered;
        continue;
      }
    }
    keep.push_back(r);
  }

  const bool has_pos = raw.find("x") >= 0 && raw.find("y") >= 0 && col_h >= 0;
  std::vector<std::string> cols = kFeatureNames;
  if (has_pos) {
    cols.push_back("x");
    cols.push_back("y");
    cols.push_back("h");
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  nn::Mat m(n, static_cast<Eigen::Index>(cols.size()));
  std::vector<int> labels;
  std::vector<double> ts;
  const int col_t = raw.find("timestamp");
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t r = keep[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < cols.size(); ++j) m(i, static_cast<Eigen::Index>(j)) = raw.column(cols[j])[r];
    labels.push_back(static_cast<int>(cls[r]));
    ts.push_back(col_t >= 0 ? raw.values[static_cast<std::size_t>(col_t)][r] : static_cast<double>(i));
  }

  const SplitIndices split = stratified_split(labels, options.split);
  const auto segments = segment_ids(ts, options.segment_gap_factor);
  // missing timestamps: carry the row index so output stays finite
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (missing(ts[i])) ts[i] = static_cast<double>(i);
  auto medians = impute(m, segments, split.train, cols);

  FeatureTable all;
  all.feature_names = kFeatureNames;
  all.x = m.leftCols(static_cast<Eigen::Index>(kFeatureNames.size()));
  all.y = labels;
  all.timestamps = ts;
  if (has_pos) all.positions = m.rightCols(3);
  medians.resize(kFeatureNames.size());
  bundle.medians = medians;
  bundle.train = all.select_rows(split.train);
  bundle.val = all.select_rows(split.val);
  bundle.test = all.select_rows(split.test);
  return bundle;
}

// ---------------------------------------------------------------------------

namespace {

using radio::format_double;

void write_table_csv(const FeatureTable& t, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << "timestamp";
  if (t.positions) f << ",x,y,h";
  for (const auto& name : t.feature_names) f << ',' << name;
  f << ",class\n";
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    f << format_double(t.timestamps[r]);
    if (t.positions)
      for (Eigen::Index k = 0; k < 3; ++k) f << ',' << format_double((*t.positions)(i, k));
    for (Eigen::Index j = 0; j < t.x.cols(); ++j) f << ',' << format_double(t.x(i, j));
    f << ',' << t.y[r] << '\n';
  }
  if (!f) throw DataError("write failed: " + path.string());
}

FeatureTable read_table_csv(const std::filesystem::path& path) {
  std::vector<std::string> req = default_required_columns();
  req.push_back("timestamp");
  const RawTable raw = ingest_csv(path, req);
  FeatureTable t;
  t.feature_names = kFeatureNames;
  const std::size_t n = raw.rows();
  t.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kFeatureNames.size()));
  const bool has_pos = raw.find("x") >= 0;
  if (has_pos) t.positions = nn::Mat(static_cast<Eigen::Index>(n), 3);
  for (std::size_t r = 0; r < n; ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    for (std::size_t j = 0; j < kFeatureNames.size(); ++j) {
      const double v = raw.column(kFeatureNames[j])[r];
      if (missing(v)) throw DataError(path.string() + ": missing value in prepared split");
      t.x(i, static_cast<Eigen::Index>(j)) = v;
    }
    if (has_pos) {
      (*t.positions)(i, 0) = raw.column("x")[r];
      (*t.positions)(i, 1) = raw.column("y")[r];
      (*t.positions)(i, 2) = raw.column("h")[r];
    }
    const double c = raw.column("class")[r];
    if (c != 0.0 && c != 1.0) throw DataError(path.string() + ": bad class value");
    t.y.push_back(static_cast<int>(c));
    t.timestamps.push_back(raw.column("timestamp")[r]);
  }
  return t;
}

std::map<std::string, std::size_t> class_counts(const FeatureTable& t) {
  std::size_t c[2] = {0, 0};
  for (int y : t.y) ++c[y];
  return {{"0", c[0]}, {"1", c[1]}};
}

}  // namespace

std::string bundle_stats_json(const DatasetBundle& b) {
  using nlohmann::ordered_json;
  const ColumnStats s = fit_standardizer(b.train.x);
  ordered_json j;
  j["format"] = "uavzone-dataset";
  j["version"] = 1;
  j["features"] = kFeatureNames;
  j["has_positions"] = b.train.positions.has_value();
  j["split"] = {{"train_frac", b.options.split.train_frac},
                {"val_frac", b.options.split.val_frac},
                {"test_frac", b.options.split.test_frac},
                {"seed", b.options.split.seed}};
  j["min_altitude"] = b.options.min_altitude ? ordered_json(*b.options.min_altitude) : ordered_json(nullptr);
  j["segment_gap_factor"] = b.options.segment_gap_factor;
  j["means"] = s.mean;
  j["stds"] = s.std;
  j["medians"] = b.medians;
  j["class_counts"] = {{"train", class_counts(b.train)},
                       {"val", class_counts(b.val)},
                       {"test", class_counts(b.test)}};
  j["rows"] = {{"train", b.train.rows()}, {"val", b.val.rows()}, {"test", b.test.rows()}};
  j["dropped_unlabeled"] = b.dropped_unlabeled;
  j["dropped_filtered"] = b.dropped_filtered;
  return j.dump(2) + "\n";
}

void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  write_table_csv(bundle.train, dir / "train.csv");
  write_table_csv(bundle.val, dir / "val.csv");
  write_table_csv(bundle.test, dir / "test.csv");
  std::ofstream f(dir / "stats.json", std::ios::binary);
  if (!f) throw DataError("cannot write " + (dir / "stats.json").string());
  f << bundle_stats_json(bundle);
}

DatasetBundle load_bundle(const std::filesystem::path& dir) {
  const auto stats_path = dir / "stats.json";
  std::ifstream f(stats_path, std::ios::binary);
  if (!f) throw DataError("dataset bundle not found: " + stats_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(stats_path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "uavzone-dataset") throw DataError(stats_path.string() + ": not a dataset bundle");
  DatasetBundle b;
  try {
    b.options.split.train_frac = j.at("split").at("train_frac").get<double>();
    b.options.split.val_frac = j.at("split").at("val_frac").get<double>();
    b.options.split.test_frac = j.at("split").at("test_frac").get<double>();
    b.options.split.seed = j.at("split").at("seed").get<std::uint64_t>();
    if (!j.at("min_altitude").is_null()) b.options.min_altitude = j.at("min_altitude").get<double>();
    b.options.segment_gap_factor = j.at("segment_gap_factor").get<double>();
    b.medians = j.at("medians").get<std::vector<double>>();
    b.dropped_unlabeled = j.at("dropped_unlabeled").get<std::size_t>();
    b.dropped_filtered = j.at("dropped_filtered").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(stats_path.string() + ": " + e.what());
  }
  b.train = read_table_csv(dir / "train.csv");
  b.val = read_table_csv(dir / "val.csv");
  b.test = read_table_csv(dir / "test.csv");
  return b;
}

// ---------------------------------------------------------------------------

std::vector<std::string> parse_feature_list(std::string_view spec) {
  std::vector<std::string> out;
  std::string s(spec);
  if (s == "all") return kFeatureNames;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string name = harmonize_column(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (std::find(kFeatureNames.begin(), kFeatureNames.end(), name) == kFeatureNames.end())
      throw ConfigError("unknown feature '" + name + "'");
    if (std::find(out.begin(), out.end(), name) != out.end())
      throw ConfigError("feature '" + name + "' listed twice");
    out.push_back(name);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("empty feature list");
  return out;
}

namespace {

struct ColumnPlan {
  std::string name;
  std::size_t source = 0;
  std::optional<double> category;  // one-hot indicator value
};

FeatureTable apply_plan(const FeatureTable& t, const std::vector<ColumnPlan>& plan) {
  FeatureTable out;
  out.y = t.y;
  out.timestamps = t.timestamps;
  out.positions = t.positions;
  out.x.resize(t.x.rows(), static_cast<Eigen::Index>(plan.size()));
  for (std::size_t j = 0; j < plan.size(); ++j) {
    out.feature_names.push_back(plan[j].name);
    const auto src = t.x.col(static_cast<Eigen::Index>(plan[j].source));
    if (plan[j].category)
      out.x.col(static_cast<Eigen::Index>(j)) = (src.array() == *plan[j].category).cast<double>().matrix();
    else
      out.x.col(static_cast<Eigen::Index>(j)) = src;
  }
  return out;
}

}  // namespace

ModelInputs make_model_inputs(const DatasetBundle& bundle, const InputOptions& options) {
  if (options.features.empty()) throw ConfigError("no features selected");
  std::vector<ColumnPlan> plan;
  for (const auto& name : options.features) {
    const int src = bundle.train.feature_index(name);
    if (src < 0) throw ConfigError("unknown feature '" + name + "'");
    if (options.one_hot && is_categorical(name)) {
      std::set<double> cats;
      for (Eigen::Index r = 0; r < bundle.train.x.rows(); ++r) cats.insert(std::round(bundle.train.x(r, src)));
      for (double c : cats)
        plan.push_back({name + "=" + format_double(c), static_cast<std::size_t>(src), c});
    } else {
      plan.push_back({name, static_cast<std::size_t>(src), std::nullopt});
    }
  }

  ModelInputs in;
  in.train = apply_plan(bundle.train, plan);
  in.val = apply_plan(bundle.val, plan);
  in.test = apply_plan(bundle.test, plan);
  in.feature_names = in.train.feature_names;

  if (options.standardize) {
    in.stats = fit_standardizer(in.train.x);
  } else {
    in.stats.mean.assign(plan.size(), 0.0);
    in.stats.std.assign(plan.size(), 1.0);
  }
  for (std::size_t j = 0; j < plan.size(); ++j)
    if (plan[j].category) {
      in.stats.mean[j] = 0.0;
      in.stats.std[j] = 1.0;
    }
  standardize(in.train.x, in.stats);
  standardize(in.val.x, in.stats);
  standardize(in.test.x, in.stats);

  auto windows = [&](const FeatureTable& t, const char* split) {
    try {
      return make_windows(t, options.window);
    } catch (const DataError& e) {
      throw DataError(std::string(split) + " " + e.what());
    }
  };
  in.train_windows = windows(in.train, "train");
  in.val_windows = windows(in.val, "val");
  in.test_windows = windows(in.test, "test");

  std::vector<int> labels;
  for (const auto& w : in.train_windows) labels.push_back(w.y);
  in.class_weights = class_weights(labels);
  in.sampler_probs = sampler_probabilities(labels);
  return in;
}

}  // namespace uavzone::data
