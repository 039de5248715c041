#include "doctest.h"

#include "uavzone/dataset.hpp"
#include "uavzone/error.hpp"
#include "uavzone/radio.hpp"
#include "uavzone/rng.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace uavzone;
using namespace uavzone::data;

namespace {

constexpr double NaN = std::numeric_limits<double>::quiet_NaN();

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("uavzone_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

// Small simulated log: the campus scene cut down to two short flights.
RawTable small_campus_table(std::uint64_t seed) {
  auto sc = radio::load_scene_config(std::filesystem::path(UAVZONE_SOURCE_DIR) / "configs" / "campus.conf");
  radio::Flight in, out;
  in.waypoints = {{30, 120, 20}, {80, 150, 30}};
  out.waypoints = {{-150, 60, 20}, {-190, 20, 30}};
  sc.flights = {in, out};
  sc.seed = seed;
  std::ostringstream csv;
  radio::write_samples_csv(csv, radio::simulate_scene(sc));
  return parse_csv(csv.str(), default_required_columns());
}

// Straight reimplementation: interpolate, then fill with the train median.
nn::Mat impute_oracle(const nn::Mat& x, const std::vector<std::size_t>& seg,
                      const std::vector<std::size_t>& train) {
  nn::Mat out = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (!std::isnan(x(r, j))) continue;
      Eigen::Index a = r - 1, b = r + 1;
      while (a >= 0 && std::isnan(x(a, j))) --a;
      while (b < x.rows() && std::isnan(x(b, j))) ++b;
      if (a >= 0 && b < x.rows() && seg[static_cast<std::size_t>(a)] == seg[static_cast<std::size_t>(r)] &&
          seg[static_cast<std::size_t>(b)] == seg[static_cast<std::size_t>(r)]) {
        out(r, j) = x(a, j) + (x(b, j) - x(a, j)) * static_cast<double>(r - a) / static_cast<double>(b - a);
      }
    }
    std::vector<double> vals;
    for (std::size_t r : train)
      if (!std::isnan(x(static_cast<Eigen::Index>(r), j))) vals.push_back(x(static_cast<Eigen::Index>(r), j));
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    const double med = n % 2 ? vals[n / 2] : (vals[n / 2 - 1] + vals[n / 2]) / 2;
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      if (std::isnan(out(r, j))) out(r, j) = med;
  }
  return out;
}

}  // namespace

TEST_CASE("ingest_csv") {
  const std::string header = "timestamp,x,y,h,pci,ssb_idx,rssi,ssb_rssi,ss_rsrp,ss_sinr,ss_rsrq,class\n";
  SUBCASE("exact schema") {
    const auto t = parse_csv(header +
                                 "0,1,2,3,0,1,-40,-41,-42,20,-3,1\n"
                                 "0.5,1,2,3,0,1,-40,-41,-42,20,-3,1\n"
                                 "1,1,2,3,0,1,-40,-41,-42,20,-3,0\n",
                             default_required_columns());
    CHECK(t.rows() == 3);
    CHECK(t.column("class")[2] == 0.0);
    CHECK(t.column("ss_rsrp")[0] == -42.0);
  }
  SUBCASE("header variants are harmonized") {
    CHECK(harmonize_column("SS-RSRP ") == "ss_rsrp");
    CHECK(harmonize_column("  SSB Idx") == "ssb_idx");
    CHECK(harmonize_column("NR_SS-SINR") == "ss_sinr");
    CHECK(harmonize_column("RSRQ") == "ss_rsrq");
    CHECK(harmonize_column("Mbr 3 SS-RSRP") == "mbr_3_ss_rsrp");
    const auto t = parse_csv("PCI,SSB Idx,RSSI,SSB-RSSI,SS-RSRP ,SS-SINR,SS-RSRQ,Class\n1,2,3,4,5,6,7,1\n",
                             default_required_columns());
    CHECK(t.column("ss_rsrp")[0] == 5.0);
  }
  SUBCASE("empty and garbage cells are missing") {
    const auto t = parse_csv(header + "0,1,2,3,0,1,-40,-41,-42,,-3,1\n0,1,2,3,0,1,abc,-41,-42,1,-3,1\n",
                             default_required_columns());
    CHECK(std::isnan(t.column("ss_sinr")[0]));
    CHECK(std::isnan(t.column("rssi")[1]));
  }
  SUBCASE("missing mandatory column is named") {
    CHECK_THROWS_WITH_AS(parse_csv("pci,ssb_idx,rssi,ssb_rssi,ss_rsrp,ss_rsrq,class\n", default_required_columns()),
                         doctest::Contains("ss_sinr"), DataError);
  }
  SUBCASE("unknown columns are kept") {
    const auto t = parse_csv("pci,ssb_idx,rssi,ssb_rssi,ss_rsrp,ss_sinr,ss_rsrq,class,weather\n0,0,0,0,0,0,0,0,7\n",
                             default_required_columns());
    CHECK(t.column("weather")[0] == 7.0);
  }
  SUBCASE("quoted fields") {
    const auto t = parse_csv("\"pci\",ssb_idx,rssi,ssb_rssi,ss_rsrp,ss_sinr,ss_rsrq,\"cl\"\"ass\"\n\"4\",0,0,0,0,0,0,1\n", {});
    CHECK(t.column("pci")[0] == 4.0);
    CHECK(t.find("cl_ass") >= 0);
  }
}

TEST_CASE("member slots flatten to one row per populated slot") {
  const std::string csv =
      "timestamp,class,Mbr 1 PCI,Mbr 1 SSB Idx,Mbr 1 RSSI,Mbr 1 SSB-RSSI,Mbr 1 SS-RSRP,Mbr 1 SS-SINR,Mbr 1 SS-RSRQ,"
      "Mbr 2 PCI,Mbr 2 SSB Idx,Mbr 2 RSSI,Mbr 2 SSB-RSSI,Mbr 2 SS-RSRP,Mbr 2 SS-SINR,Mbr 2 SS-RSRQ\n"
      "0,1,0,3,-40,-41,-42,20,-3,1,5,-50,-51,-52,10,-4\n"
      "1,0,2,4,-45,-46,-47,15,-5,,,,,,,\n";
  const auto t = parse_csv(csv, default_required_columns());
  REQUIRE(t.rows() == 3);
  CHECK(t.column("pci")[0] == 0);
  CHECK(t.column("pci")[1] == 1);
  CHECK(t.column("pci")[2] == 2);
  CHECK(t.column("timestamp")[1] == 0);
  CHECK(t.column("class")[2] == 0);
  CHECK(t.column("ss_rsrq")[1] == -4);
}

TEST_CASE("impute") {
  const std::vector<std::string> names{"a"};
  SUBCASE("midpoint") {
    nn::Mat x(3, 1);
    x << 1, NaN, 3;
    const std::vector<std::size_t> seg{0, 0, 0}, train{0, 1, 2};
    impute(x, seg, train, names);
    CHECK(x(1, 0) == 2.0);
  }
  SUBCASE("leading gap takes the train median") {
    nn::Mat x(3, 1);
    x << NaN, 5, 5;
    const std::vector<std::size_t> seg{0, 0, 0}, train{0, 1, 2};
    CHECK(impute(x, seg, train, names)[0] == 5.0);
    CHECK(x(0, 0) == 5.0);
  }
  SUBCASE("no interpolation across a segment boundary") {
    nn::Mat x(4, 1);
    x << 1, NaN, 9, 11;
    const std::vector<std::size_t> seg{0, 1, 1, 1}, train{0, 2, 3};
    impute(x, seg, train, names);
    CHECK(x(1, 0) == 9.0);
  }
  SUBCASE("median uses training rows only") {
    nn::Mat x(4, 1);
    x << NaN, 2, 4, 100;
    const std::vector<std::size_t> seg{0, 0, 0, 0}, train{1, 2};
    impute(x, seg, train, names);
    CHECK(x(0, 0) == 3.0);
  }
  SUBCASE("all-missing column is named") {
    nn::Mat x(2, 1);
    x << NaN, NaN;
    const std::vector<std::size_t> seg{0, 0}, train{0, 1};
    CHECK_THROWS_WITH_AS(impute(x, seg, train, names), doctest::Contains("'a'"), DataError);
  }
  SUBCASE("random 10% masking matches the two-pass oracle exactly") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(seed);
      std::normal_distribution<double> normal;
      const Eigen::Index n = 400, f = 5;
      nn::Mat x(n, f);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform01(rng) < 0.1 ? NaN : normal(rng);
      std::vector<std::size_t> seg(n), train;
      for (Eigen::Index i = 0; i < n; ++i) {
        seg[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i / 97);
        if (uniform01(rng) < 0.7) train.push_back(static_cast<std::size_t>(i));
      }
      const nn::Mat expect = impute_oracle(x, seg, train);
      nn::Mat got = x;
      impute(got, seg, train, std::vector<std::string>(f, "c"));
      CHECK(got == expect);
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!std::isnan(x.data()[i])) CHECK(got.data()[i] == x.data()[i]);
    }
  }
}

TEST_CASE("segment ids split on large gaps") {
  const std::vector<double> t{0, 0.5, 1, 1.5, 10, 10.5, 11, 5, 5.5};
  const auto s = segment_ids(t, 5.0);
  CHECK(s == std::vector<std::size_t>{0, 0, 0, 0, 1, 1, 1, 2, 2});
}

TEST_CASE("stratified_split") {
  std::vector<int> labels(1000, 0);
  for (std::size_t i = 600; i < 1000; ++i) labels[i] = 1;
  SplitSpec spec;
  spec.seed = 3;
  const auto s = stratified_split(labels, spec);
  auto count = [&](const std::vector<std::size_t>& idx, int c) {
    return std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return labels[i] == c; });
  };
  CHECK(std::abs(count(s.train, 0) - 420) <= 1);
  CHECK(std::abs(count(s.train, 1) - 280) <= 1);
  CHECK(std::abs(count(s.val, 0) - 90) <= 1);
  CHECK(std::abs(count(s.test, 1) - 60) <= 1);

  std::vector<int> seen(labels.size(), 0);
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    CHECK(std::is_sorted(part->begin(), part->end()));
    for (std::size_t i : *part) ++seen[i];
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));

  const auto again = stratified_split(labels, spec);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  spec.seed = 4;
  CHECK(stratified_split(labels, spec).train != s.train);

  CHECK_THROWS_WITH_AS(stratified_split(std::vector<int>(10, 0), spec),
                       doctest::Contains("insufficient samples to stratify"), DataError);
  std::vector<int> tiny(10, 0);
  tiny[0] = 1;
  tiny[1] = 1;
  CHECK_THROWS_AS(stratified_split(tiny, spec), DataError);

  SUBCASE("random class mixes stay within one sample of the fractions") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 20 + rng() % 500;
      std::vector<int> y(n);
      for (auto& v : y) v = uniform01(rng) < 0.3 ? 1 : 0;
      y[0] = y[1] = y[2] = 1;
      y[3] = y[4] = y[5] = 0;
      const auto p = stratified_split(y, spec);
      for (int c : {0, 1}) {
        const double nc = static_cast<double>(std::count(y.begin(), y.end(), c));
        auto cnt = [&](const std::vector<std::size_t>& idx) {
          return static_cast<double>(std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return y[i] == c; }));
        };
        CHECK(std::abs(cnt(p.train) - 0.7 * nc) <= 1.0);
        CHECK(std::abs(cnt(p.val) - 0.15 * nc) <= 1.0);
        CHECK(std::abs(cnt(p.test) - 0.15 * nc) <= 1.0);
      }
    }
  }
}

TEST_CASE("make_windows") {
  auto table = [](std::size_t n) {
    FeatureTable t;
    t.feature_names = {"a", "b"};
    t.x.resize(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
      t.x(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
      t.x(static_cast<Eigen::Index>(i), 1) = -static_cast<double>(i);
      t.y.push_back(static_cast<int>(i % 3 == 0));
      t.timestamps.push_back(static_cast<double>(i));
    }
    return t;
  };
  CHECK(make_windows(table(12), 10).size() == 3);
  CHECK(make_windows(table(10), 10).size() == 1);
  CHECK_THROWS_WITH_AS(make_windows(table(9), 10), doctest::Contains("split shorter than window"), DataError);
  const auto t = table(30);
  const auto w = make_windows(t, 10);
  for (const auto& win : w) {
    CHECK(win.y == t.y[win.origin_index + 9]);
    CHECK(win.x(0, 0) == static_cast<double>(win.origin_index));
    CHECK(win.x.rows() == 10);
  }
}

TEST_CASE("class_weights") {
  auto labels = [](std::size_t n0, std::size_t n1) {
    std::vector<int> y(n0, 0);
    y.insert(y.end(), n1, 1);
    return y;
  };
  auto w = class_weights(labels(500, 500));
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 1.0);
  w = class_weights(labels(900, 100));
  CHECK(w[0] == doctest::Approx(0.5556).epsilon(1e-4));
  CHECK(w[1] == doctest::Approx(5.0).epsilon(1e-4));
  w = class_weights(labels(1, 999));
  CHECK(w[0] == doctest::Approx(500.0).epsilon(1e-4));
  CHECK(w[1] == doctest::Approx(0.5005).epsilon(1e-4));
  CHECK_THROWS_AS(class_weights(labels(5, 0)), DataError);
}

TEST_CASE("sampler_probabilities") {
  const std::vector<int> y{0, 0, 1};
  const auto p = sampler_probabilities(y);
  CHECK(p[0] == doctest::Approx(0.25));
  CHECK(p[1] == doctest::Approx(0.25));
  CHECK(p[2] == doctest::Approx(0.5));
  const auto u = sampler_probabilities(std::vector<int>{0, 1, 1, 0});
  for (double v : u) CHECK(v == doctest::Approx(0.25));
  CHECK_THROWS_AS(sampler_probabilities(std::vector<int>{1, 1}), DataError);

  std::vector<int> big(1000, 0);
  for (std::size_t i = 0; i < 137; ++i) big[i * 7] = 1;
  const auto q = sampler_probabilities(big);
  double s = 0;
  for (double v : q) s += v;
  CHECK(std::abs(s - 1.0) < 1e-12);

  // inverse-CDF draws
  Rng rng(5);
  std::size_t ones = 0;
  const std::size_t draws = 100000;
  for (std::size_t d = 0; d < draws; ++d) {
    double u01 = uniform01(rng), acc = 0;
    std::size_t k = 0;
    for (; k + 1 < p.size(); ++k) {
      acc += p[k];
      if (u01 < acc) break;
    }
    ones += static_cast<std::size_t>(y[k] == 1);
  }
  CHECK(std::abs(static_cast<double>(ones) / draws - 0.5) < 0.01);
}

TEST_CASE("standardize") {
  nn::Mat c = nn::Mat::Constant(5, 1, 3.0);
  standardize(c, fit_standardizer(c));
  CHECK(c.isZero(0));

  ColumnStats s{{10.0}, {2.0}};
  nn::Mat v(1, 1);
  v << 14.0;
  standardize(v, s);
  CHECK(v(0, 0) == 2.0);

  Rng rng(1);
  std::normal_distribution<double> normal(7.0, 3.0);
  nn::Mat t(500, 4);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = normal(rng);
  standardize(t, fit_standardizer(t));
  for (Eigen::Index j = 0; j < 4; ++j) {
    const double mean = t.col(j).mean();
    const double sd = std::sqrt((t.col(j).array() - mean).square().mean());
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(sd - 1.0) < 1e-6);
  }
}

TEST_CASE("parse_feature_list") {
  CHECK(parse_feature_list("pci,ssb_idx") == std::vector<std::string>{"pci", "ssb_idx"});
  CHECK(parse_feature_list("all").size() == 7);
  CHECK(parse_feature_list("SS-RSRP") == std::vector<std::string>{"ss_rsrp"});
  CHECK_THROWS_AS(parse_feature_list("pci,speed"), ConfigError);
  CHECK_THROWS_AS(parse_feature_list("pci,pci"), ConfigError);
}

TEST_CASE("prepared pipeline: counts, determinism, bundle round trip") {
  const RawTable raw = small_campus_table(1);
  PrepareOptions opt;
  opt.split.seed = 17;
  const DatasetBundle b = prepare_dataset(raw, opt);
  CHECK(b.train.rows() + b.val.rows() + b.test.rows() == raw.rows());
  REQUIRE(b.train.positions.has_value());

  const ModelInputs in = make_model_inputs(b, {});
  CHECK(in.train_windows.size() == b.train.rows() - 10 + 1);
  CHECK(in.val_windows.size() == b.val.rows() - 10 + 1);
  CHECK(in.test_windows.size() == b.test.rows() - 10 + 1);
  CHECK(in.feature_names == kFeatureNames);

  const auto d1 = scratch_dir("bundle1"), d2 = scratch_dir("bundle2");
  save_bundle(b, d1);
  save_bundle(prepare_dataset(small_campus_table(1), opt), d2);
  for (const char* f : {"train.csv", "val.csv", "test.csv", "stats.json"})
    CHECK(read_file(d1 / f) == read_file(d2 / f));

  const DatasetBundle back = load_bundle(d1);
  CHECK(back.train.x == b.train.x);
  CHECK(back.test.y == b.test.y);
  CHECK(*back.val.positions == *b.val.positions);
  CHECK(back.train.timestamps == b.train.timestamps);
  CHECK(back.medians == b.medians);
  CHECK(back.options.split.seed == 17);
  save_bundle(back, d2);
  CHECK(read_file(d1 / "stats.json") == read_file(d2 / "stats.json"));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("prepare: filters and label checks") {
  const std::string header = "timestamp,x,y,h,pci,ssb_idx,rssi,ssb_rssi,ss_rsrp,ss_sinr,ss_rsrq,class\n";
  std::string body;
  for (int i = 0; i < 40; ++i) {
    const double h = i < 3 ? 0.5 : 20.0;
    const std::string cls = i == 5 ? "" : std::to_string(i % 2);
    body += std::to_string(i) + ",0,0," + std::to_string(h) + ",0,1,-40,-41,-42,20,-3," + cls + "\n";
  }
  const auto raw = parse_csv(header + body, default_required_columns());
  PrepareOptions opt;
  auto b = prepare_dataset(raw, opt);
  CHECK(b.dropped_unlabeled == 1);
  CHECK(b.train.rows() + b.val.rows() + b.test.rows() == 39);
  opt.min_altitude = 2.0;
  b = prepare_dataset(raw, opt);
  CHECK(b.dropped_filtered == 3);
  CHECK(b.train.rows() + b.val.rows() + b.test.rows() == 36);

  const auto bad = parse_csv(header + "0,0,0,1,0,1,-40,-41,-42,20,-3,2\n", default_required_columns());
  CHECK_THROWS_AS(prepare_dataset(bad, {}), DataError);
}

TEST_CASE("one-hot categorical columns") {
  const DatasetBundle b = prepare_dataset(small_campus_table(2), {});
  InputOptions io;
  io.features = {"pci", "ss_rsrp"};
  io.one_hot = true;
  const auto in = make_model_inputs(b, io);
  REQUIRE(in.feature_names.size() >= 3);
  CHECK(in.feature_names.front().rfind("pci=", 0) == 0);
  CHECK(in.feature_names.back() == "ss_rsrp");
  for (Eigen::Index r = 0; r < in.train.x.rows(); ++r) {
    double s = 0;
    for (std::size_t j = 0; j + 1 < in.feature_names.size(); ++j) {
      const double v = in.train.x(r, static_cast<Eigen::Index>(j));
      CHECK((v == 0.0 || v == 1.0));
      s += v;
    }
    CHECK(s == 1.0);
  }
}
