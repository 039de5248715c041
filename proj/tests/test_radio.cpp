#include "doctest.h"

#include "uavzone/error.hpp"
#include "uavzone/radio.hpp"
#include "uavzone/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace uavzone;
using namespace uavzone::radio;

namespace {

std::filesystem::path campus_path() {
  return std::filesystem::path(UAVZONE_SOURCE_DIR) / "configs" / "campus.conf";
}

SceneConfig single_ru_scene() {
  SceneConfig sc;
  RadioUnit ru;
  ru.id = 0;
  ru.position = {0, 0, 20};
  ru.height_agl = 20;
  ru.bearing_deg = 0;
  ru.n_beams = 1;
  sc.radio_units = {ru};
  sc.zone.polygon = {{-10, 50}, {10, 50}, {10, 150}, {-10, 150}};
  sc.fading = false;
  sc.shadowing = false;
  sc.interference = false;
  return sc;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

std::string to_csv(const std::vector<MeasurementSample>& s) {
  std::ostringstream out;
  write_samples_csv(out, s);
  return out.str();
}

Flight short_campus_flight() {
  Flight f;
  f.waypoints = {{20, 80, 30}, {60, 120, 30}, {-80, 120, 20}};
  return f;
}

}  // namespace

TEST_CASE("received_signal hand examples") {
  const std::vector<cplx> one{cplx(1, 0)};
  const std::vector<cplx> s(16, cplx(1, 0));
  SUBCASE("noiseless identity channel") {
    for (const cplx& y : received_signal(1.0, one, s, 0.0, 1)) CHECK(y == cplx(1, 0));
  }
  SUBCASE("P=4, h=0.5j") {
    const std::vector<cplx> h{cplx(0, 0.5)};
    for (const cplx& y : received_signal(4.0, h, s, 0.0, 1)) {
      CHECK(y.real() == doctest::Approx(0.0));
      CHECK(y.imag() == doctest::Approx(1.0));
    }
  }
  SUBCASE("deterministic per seed") {
    CHECK(received_signal(1.0, one, s, 0.1, 9) == received_signal(1.0, one, s, 0.1, 9));
    CHECK(received_signal(1.0, one, s, 0.1, 9) != received_signal(1.0, one, s, 0.1, 10));
  }
  SUBCASE("beam index checked") {
    RadioUnit ru;
    ru.height_agl = 10;
    ChannelRealization chan;
    chan.h = {cplx(1, 0)};
    chan.noise_var = 1e-3;
    UavState uav;
    uav.position = {0, 50, 20};
    CHECK_THROWS_WITH_AS(received_signal(ru, 8, uav, chan, 0), "beam out of range", std::out_of_range);
    CHECK_THROWS_AS(received_signal(ru, -1, uav, chan, 0), std::out_of_range);
    CHECK(received_signal(ru, 3, uav, chan, 0).size() == 127);
  }
}

TEST_CASE("received power Monte-Carlo matches P + noise") {
  // unit-modulus LoS channel, sigma^2 = 1e-3, 1000 REs, 10^4 draws
  const std::size_t n_rs = 1000, draws = 10000;
  const double var = 1e-3;
  const auto s = reference_symbols(0, 0, n_rs);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    Rng rng(mix_seed(k, 3));
    const std::vector<cplx> h{std::polar(1.0, 2 * std::numbers::pi * uniform01(rng))};
    for (const cplx& y : received_signal(1.0, h, s, var, k)) {
      const double p = std::norm(y);
      sum += p;
      sum_sq += p * p;
    }
  }
  const double n = static_cast<double>(n_rs * draws);
  const double mean = sum / n;
  const double sd_of_mean = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - (1.0 + var)) < 3.0 * sd_of_mean);
}

TEST_CASE("rsrp") {
  const std::vector<cplx> ones(4, cplx(1, 0));
  CHECK(rsrp(ones) == 1.0);
  const std::vector<cplx> v{cplx(3, 0), cplx(0, 4)};
  CHECK(rsrp(v) == 12.5);
  CHECK_THROWS(rsrp(std::vector<cplx>{}));
}

TEST_CASE("noiseless single-RU RSRP matches free-space path loss") {
  SceneConfig sc = single_ru_scene();
  sc.noise_power_dbm = -200;
  Flight f;
  f.waypoints = {{0, 100, 20}, {0, 101, 20}};
  const auto out = simulate_flight(sc, f, 1.0, 5);
  CHECK(std::abs(out.front().ss_rsrp - (-38.2)) <= 0.1);
  CHECK(fspl_db(100, 24.42288e9) == doctest::Approx(100.205).epsilon(1e-4));
}

TEST_CASE("rssi") {
  CHECK(rssi(1.0, 0.0) == 1.0);
  CHECK_THROWS_WITH_AS(rssi(1.0, -1.0), "non-physical RSSI", NumericError);
  CHECK_THROWS_AS(rssi(-1.0, 3.0), std::invalid_argument);

  SUBCASE("orthogonal interferer adds its power") {
    const auto s0 = reference_symbols(0, 2, 127);
    const auto s1 = reference_symbols(1, 2, 127);
    const double rho = rsrp(s0);
    const double i = interference(s0, s1);
    CHECK(rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rssi(rho, i) == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("3-RU scene equals the literal double summation") {
    const SceneConfig sc = load_scene_config(campus_path());
    std::vector<TickSignals> sig;
    simulate_flight(sc, short_campus_flight(), 2.0, 77, 0.0, &sig);
    REQUIRE(sig.size() > 50);
    for (const auto& t : sig) {
      const auto b = static_cast<std::size_t>(t.serving_beam);
      const auto& serve = t.components[t.serving_ru][b];
      const std::size_t n = serve.size();
      double first = 0.0, cross = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cplx sum_other{};
        for (std::size_t r = 0; r < t.components.size(); ++r)
          if (r != t.serving_ru) sum_other += t.components[r][b][i];
        first += std::norm(sum_other);
        const cplx y = serve[i] + t.noise[b][i];
        for (std::size_t r = 0; r < t.components.size(); ++r)
          if (r != t.serving_ru) cross += (std::conj(y) * t.components[r][b][i]).real();
      }
      const double i_ref = first / n + 2.0 * cross / n;
      CHECK(rel_diff(t.interference_lin, i_ref) < 1e-12);
      CHECK(rel_diff(t.ssb_rssi_lin, t.rsrp_lin + i_ref) < 1e-12);
    }
  }
}

TEST_CASE("sinr") {
  CHECK(sinr(10, 0, 1) == 10);
  CHECK(sinr(1, 1, 0) == 1);
  CHECK(linear_to_db(sinr(1, 0.5, 0.5)) == 0.0);
  CHECK_THROWS_AS(sinr(1, 0, 0), NumericError);
  CHECK_THROWS_AS(sinr(1, -1, 0.5), NumericError);
}

TEST_CASE("rsrq") {
  CHECK(rsrq(1, 3.0, 3.0) == 1.0);
  CHECK(rsrq(2, 2.0, 4.0) == 1.0);
  CHECK_THROWS_AS(rsrq(1, 1.0, 0.0), NumericError);

  SUBCASE("recomputed from stored rho and gamma") {
    const SceneConfig sc = load_scene_config(campus_path());
    std::vector<TickSignals> sig;
    const auto out = simulate_flight(sc, short_campus_flight(), 2.0, 78, 0.0, &sig);
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double theta = static_cast<double>(sc.n_rb) * sig[k].rsrp_lin / sig[k].rssi_lin;
      CHECK(rel_diff(db_to_linear(out[k].ss_rsrq), theta) < 1e-12);
    }
  }
}

TEST_CASE("serving_beam_select") {
  CHECK(serving_beam_select({{{0, 0}, 1.0}, {{1, 0}, 0.5}}) == BeamKey{0, 0});
  CHECK(serving_beam_select({{{2, 1}, 1.0}, {{1, 3}, 1.0}, {{1, 2}, 1.0}}) == BeamKey{1, 2});
  CHECK_THROWS(serving_beam_select({}));

  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<BeamKey, double> table;
    std::vector<std::pair<BeamKey, double>> flat;
    for (int r = 0; r < 3; ++r)
      for (int b = 0; b < 8; ++b) {
        // coarse values so ties occur
        const double v = static_cast<double>(rng() % 6);
        table[{r, b}] = v;
        flat.push_back({{r, b}, v});
      }
    BeamKey best = flat[0].first;
    double best_v = flat[0].second;
    for (const auto& [k, v] : flat)
      if (v > best_v || (v == best_v && k < best)) {
        best = k;
        best_v = v;
      }
    CHECK(serving_beam_select(table) == best);
  }
}

TEST_CASE("label_position") {
  RestrictedZone z;
  z.polygon = {{0, 0}, {100, 0}, {100, 50}, {0, 50}};
  z.max_height = 50;
  CHECK(label_position({50, 25, 10}, z) == 1);
  CHECK(label_position({1050, 25, 10}, z) == 0);
  CHECK(label_position({100, 25, 10}, z) == 1);
  CHECK(label_position({0, 0, 10}, z) == 1);
  CHECK(label_position({50, 25, 50}, z) == 1);
  CHECK(label_position({50, 25, 50.5}, z) == 0);
  CHECK(label_position({100.001, 25, 10}, z) == 0);

  SUBCASE("slanted edge point") {
    RestrictedZone t;
    t.polygon = {{0, 0}, {3, 0}, {0, 7}};
    CHECK(label_position({1.5, 3.5, 1}, t) == 1);
    CHECK(label_position({1.5001, 3.5, 1}, t) == 0);
  }
}

TEST_CASE("zone validation") {
  RestrictedZone z;
  z.polygon = {{0, 0}, {1, 1}, {2, 2}};
  CHECK_THROWS_AS(z.validate(), ConfigError);
  z.polygon = {{0, 0}, {4, 0}, {1, 1}, {0, 4}};
  CHECK_THROWS_WITH_AS(z.validate(), doctest::Contains("convex"), ConfigError);
  z.polygon = {{0, 0}, {4, 0}, {4, 4}, {0, 4}};
  CHECK_NOTHROW(z.validate());
}

TEST_CASE("radio unit validation") {
  RadioUnit ru;
  ru.height_agl = 20;
  CHECK_NOTHROW(ru.validate());
  ru.eirp_dbm = 63;
  CHECK_THROWS_AS(ru.validate(), ConfigError);
  CHECK_NOTHROW(ru.validate(65));
  ru.eirp_dbm = 62;
  ru.n_beams = 65;
  CHECK_THROWS_AS(ru.validate(), ConfigError);
  ru.n_beams = 8;
  ru.carrier_hz = 3.5e9;
  CHECK_THROWS_AS(ru.validate(), ConfigError);
  ru.carrier_hz = 26e9;
  ru.height_agl = 0;
  CHECK_THROWS_AS(ru.validate(), ConfigError);
}

TEST_CASE("beam pattern") {
  RadioUnit ru;
  ru.bearing_deg = 26;
  ru.n_beams = 8;
  CHECK(beam_boresight_deg(ru, 0, 60) == doctest::Approx(-34));
  CHECK(beam_boresight_deg(ru, 7, 60) == doctest::Approx(86));
  CHECK(beam_gain_db(0, 15, 24, -10) == 24);
  CHECK(beam_gain_db(15, 15, 24, -10) == 12);
  CHECK(beam_gain_db(90, 15, 24, -10) == -10);
  ru.bearing_deg = 0;
  ru.n_beams = 1;
  ru.position = {0, 0, 10};
  CHECK(off_boresight_deg(ru, 0, {0, 30, 10}, 60) == doctest::Approx(0));
  CHECK(off_boresight_deg(ru, 0, {30, 0, 10}, 60) == doctest::Approx(90));
  CHECK(off_boresight_deg(ru, 0, {0, 10, 20}, 60) == doctest::Approx(45));
}

TEST_CASE("blocker intersection") {
  BlockerBox box{{-1, -1, -1}, {1, 1, 1}};
  CHECK(segment_hits_box({-5, 0, 0}, {5, 0, 0}, box));
  CHECK_FALSE(segment_hits_box({-5, 3, 0}, {5, 3, 0}, box));
  CHECK_FALSE(segment_hits_box({-5, 0, 0}, {-2, 0, 0}, box));
  CHECK(segment_hits_box({0, 0, 0}, {9, 9, 9}, box));
}

TEST_CASE("reference symbols are unit-modulus and mutually orthogonal") {
  const auto a = reference_symbols(0, 1, 127);
  const auto b = reference_symbols(2, 1, 127);
  cplx dot{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i]) == doctest::Approx(1.0));
    dot += std::conj(a[i]) * b[i];
  }
  CHECK(std::abs(dot) < 1e-11);
}

TEST_CASE("simulate_flight tick count, labels and determinism") {
  SceneConfig sc = single_ru_scene();
  SUBCASE("100 m at 1 m/s, 1 Hz -> 101 samples") {
    Flight f;
    f.speed = 1.0;
    f.waypoints = {{-50, 20, 10}, {50, 20, 10}};
    CHECK(simulate_flight(sc, f, 1.0, 0).size() == 101);
    CHECK(tick_count(f, 1.0) == 101);
  }
  SUBCASE("flight inside the zone is all restricted") {
    Flight f;
    f.waypoints = {{0, 60, 10}, {0, 140, 40}, {5, 70, 30}};
    for (const auto& s : simulate_flight(sc, f, 2.0, 1)) CHECK(s.label == 1);
  }
  SUBCASE("same scene and seed give identical bytes") {
    const SceneConfig campus = load_scene_config(campus_path());
    CHECK(to_csv(simulate_flight(campus, short_campus_flight(), 2.0, 3)) ==
          to_csv(simulate_flight(campus, short_campus_flight(), 2.0, 3)));
    CHECK(to_csv(simulate_flight(campus, short_campus_flight(), 2.0, 3)) !=
          to_csv(simulate_flight(campus, short_campus_flight(), 2.0, 4)));
  }
  SUBCASE("altitude limit") {
    Flight f;
    f.waypoints = {{0, 60, 10}, {0, 70, 55}};
    CHECK_THROWS_WITH_AS(simulate_flight(sc, f, 1.0, 0), doctest::Contains("exceeds low-altitude regime"),
                         ConfigError);
    sc.allow_high_altitude = true;
    CHECK_NOTHROW(simulate_flight(sc, f, 1.0, 0));
  }
  SUBCASE("degenerate inputs") {
    Flight f;
    f.waypoints = {{0, 60, 10}};
    CHECK_THROWS_AS(simulate_flight(sc, f, 1.0, 0), ConfigError);
    f.waypoints.push_back({0, 70, 10});
    CHECK_THROWS_AS(simulate_flight(sc, f, 0.0, 0), ConfigError);
  }
}

TEST_CASE("campus scene properties") {
  const SceneConfig sc = load_scene_config(campus_path());
  CHECK(sc.radio_units.size() == 3);
  CHECK(sc.flights.size() == 3);
  const auto out = simulate_scene(sc);
  CHECK(out.size() >= 20000);

  std::size_t positives = 0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& s = out[k];
    positives += s.label;
    CHECK(s.label == label_position(*s.position, sc.zone));
    REQUIRE(s.pci >= 0);
    REQUIRE(s.pci < 3);
    CHECK(s.ssb_idx < sc.radio_units[static_cast<std::size_t>(s.pci)].n_beams);
    const double rsrp_lin = db_to_linear(s.ss_rsrp);
    const double rssi_lin = db_to_linear(s.rssi);
    CHECK(rel_diff(db_to_linear(s.ss_rsrq) * rssi_lin, static_cast<double>(sc.n_rb) * rsrp_lin) < 1e-12);
    // ssb_rssi > ss_rsrp  <=>  I > 0
    if (s.ssb_rssi >= s.ss_rsrp) CHECK(rsrp_lin <= rssi_lin);
    if (k > 0) CHECK(s.timestamp > out[k - 1].timestamp);
  }
  CHECK(positives > out.size() / 4);
  CHECK(positives < out.size() * 3 / 4);
}

TEST_CASE("without fading, shadowing and interference RSRP falls with distance") {
  SceneConfig sc = load_scene_config(campus_path());
  sc.fading = false;
  sc.shadowing = false;
  sc.interference = false;
  sc.noise_power_dbm = -160;
  const Vec3 ru = sc.radio_units[0].position;
  const double az = 26.0 * std::numbers::pi / 180.0;
  Flight f;
  f.waypoints = {{ru.x + 20 * std::sin(az), ru.y + 20 * std::cos(az), ru.z},
                 {ru.x + 220 * std::sin(az), ru.y + 220 * std::cos(az), ru.z}};
  auto out = simulate_flight(sc, f, 2.0, 11);
  for (const auto& s : out) REQUIRE(s.pci == 0);
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    return (*a.position - ru).norm() < (*b.position - ru).norm();
  });
  for (std::size_t k = 1; k < out.size(); ++k) CHECK(out[k].ss_rsrp < out[k - 1].ss_rsrp);
}

TEST_CASE("restricted sample fraction tracks time inside the zone") {
  SceneConfig sc = single_ru_scene();
  // zone spans y in [50, 150]; the path enters at y = 50 and leaves at y = 150
  Flight f;
  f.speed = 1.7;
  f.waypoints = {{0, 13.3, 10}, {0, 231.9, 10}};
  for (double rate : {0.5, 1.0, 3.0}) {
    const auto out = simulate_flight(sc, f, rate, 2);
    std::size_t inside = 0;
    for (const auto& s : out) inside += s.label;
    const double total_time = path_length(f.waypoints) / f.speed;
    const double inside_time = 100.0 / f.speed;
    const double tick = 1.0 / rate;
    const double frac_samples = static_cast<double>(inside) / out.size();
    const double frac_time = inside_time / total_time;
    CHECK(std::abs(frac_samples - frac_time) <= 1.0 / out.size() + tick / total_time);
  }
}

TEST_CASE("arc raster geometry") {
  const auto pts = arc_raster({0, 0, 0}, 50, 90, 20, 0, 90, {10, 20});
  // 3 radii x 46 points x 2 layers
  CHECK(pts.size() == 3 * 46 * 2);
  for (const auto& p : pts) {
    const double r = std::hypot(p.x, p.y);
    CHECK((std::abs(r - 50) < 1e-9 || std::abs(r - 70) < 1e-9 || std::abs(r - 90) < 1e-9));
    CHECK(p.x >= -1e-9);
    CHECK(p.y >= -1e-9);
  }
  CHECK_THROWS_AS(arc_raster({}, 0, 10, 1, 0, 10, {5}), ConfigError);
}

TEST_CASE("scene config parsing") {
  const std::string base =
      "ru.0.position = 0,0,10\n"
      "zone.polygon = 0,0; 10,0; 10,10; 0,10\n"
      "flight.0.waypoints = 1,1,5; 2,2,5\n";
  SUBCASE("minimal") {
    const auto sc = parse_scene_config(base + "# comment\nseed = 5  # trailing\n");
    CHECK(sc.seed == 5);
    CHECK(sc.radio_units[0].height_agl == 10);
    CHECK(sc.flights[0].waypoints.size() == 2);
  }
  SUBCASE("unknown key") {
    CHECK_THROWS_WITH_AS(parse_scene_config(base + "colour = red\n"), doctest::Contains("unknown key"),
                         ConfigError);
  }
  SUBCASE("duplicate key") {
    CHECK_THROWS_WITH_AS(parse_scene_config(base + "seed = 1\nseed = 2\n"),
                         doctest::Contains("duplicate"), ConfigError);
  }
  SUBCASE("bad number names the line") {
    CHECK_THROWS_WITH_AS(parse_scene_config(base + "n_rb = twenty\n"), doctest::Contains("line 4"),
                         ConfigError);
  }
  SUBCASE("no radio units") {
    CHECK_THROWS_AS(parse_scene_config("zone.polygon = 0,0; 10,0; 10,10\n"), ConfigError);
  }
  SUBCASE("zero-area zone") {
    CHECK_THROWS_AS(parse_scene_config("ru.0.position = 0,0,10\nzone.polygon = 0,0; 1,1; 2,2\n"),
                    ConfigError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(load_scene_config("/nonexistent/scene.conf"), doctest::Contains("config not found"),
                         ConfigError);
  }
}

TEST_CASE("sample CSV layout") {
  MeasurementSample s;
  s.pci = 2;
  s.ssb_idx = 5;
  s.rssi = -40.5;
  s.ssb_rssi = -41;
  s.ss_rsrp = -42;
  s.ss_sinr = 20.25;
  s.ss_rsrq = -3;
  s.label = 1;
  s.timestamp = 0.5;
  std::ostringstream out;
  std::vector<MeasurementSample> v{s};
  s.position = Vec3{1, 2, 3};
  v.push_back(s);
  write_samples_csv(out, v);
  CHECK(out.str() ==
        "timestamp,x,y,h,pci,ssb_idx,rssi,ssb_rssi,ss_rsrp,ss_sinr,ss_rsrq,class\n"
        "0.5,,,,2,5,-40.5,-41,-42,20.25,-3,1\n"
        "0.5,1,2,3,2,5,-40.5,-41,-42,20.25,-3,1\n");
}
