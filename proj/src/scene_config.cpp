// Scene file parser. Format: one `key = value` per line, `#` comments.
//
//   seed, sample_rate_hz, flight_gap_s, shadowing_sigma_db,
//   shadowing_decorrelation_m, rician_k_db, noise_power_dbm, n_rs, n_rb,
//   gain_max_db, gain_min_db, beam_span_deg, max_eirp_dbm, max_altitude_m,
//   allow_high_altitude, fading, shadowing, interference
//   zone.polygon    = x,y; x,y; ...          zone.max_height = 50
//   ru.N.position   = x,y,z                  ru.N.id (defaults to N)
//   ru.N.bearing_deg / height_agl / eirp_dbm / carrier_hz / n_beams / beam_width_deg
//   blocker.N       = xmin,ymin,zmin, xmax,ymax,zmax
//   flight.N.speed
//   flight.N.waypoints  = x,y,h; x,y,h; ...
//   flight.N.arc_raster = r_min, r_max, r_step, az_min, az_max
//   flight.N.center     = x,y                (arc_raster origin, default 0,0)
//   flight.N.altitudes  = h1, h2, ...        (arc_raster layers)

#include "uavzone/error.hpp"
#include "uavzone/radio.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace uavzone::radio {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  explicit Reader(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) raw.resize(hash);
      const std::string s = trim(raw);
      if (s.empty()) continue;
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected key = value");
      const std::string key = trim(std::string_view(s).substr(0, eq));
      const std::string val = trim(std::string_view(s).substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
      if (!entries_.emplace(key, Entry{val, line}).second)
        throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    }
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  static std::string where(const std::string& key, const Entry& e) {
    return "line " + std::to_string(e.line) + " (" + key + "): ";
  }

  static double number(const std::string& key, const Entry& e, std::string_view text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || text.empty())
      throw ConfigError(where(key, e) + "invalid number '" + std::string(text) + "'");
    return v;
  }

  static double number(const std::string& key, const Entry& e) { return number(key, e, e.value); }

  static long long integer(const std::string& key, const Entry& e) {
    long long v = 0;
    const auto* end = e.value.data() + e.value.size();
    auto res = std::from_chars(e.value.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || e.value.empty())
      throw ConfigError(where(key, e) + "invalid integer '" + e.value + "'");
    return v;
  }

  static bool boolean(const std::string& key, const Entry& e) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw ConfigError(where(key, e) + "invalid boolean '" + e.value + "'");
  }

  static std::vector<double> numbers(const std::string& key, const Entry& e) {
    std::vector<double> out;
    for (const auto& part : split(e.value, ',')) out.push_back(number(key, e, part));
    return out;
  }

  // "a,b,c; d,e,f" with a fixed tuple width
  static std::vector<std::vector<double>> tuples(const std::string& key, const Entry& e,
                                                 std::size_t width) {
    std::vector<std::vector<double>> out;
    for (const auto& group : split(e.value, ';')) {
      if (group.empty()) continue;
      std::vector<double> t;
      for (const auto& part : split(group, ',')) t.push_back(number(key, e, part));
      if (t.size() != width)
        throw ConfigError(where(key, e) + "expected " + std::to_string(width) +
                          " values per point, got " + std::to_string(t.size()));
      out.push_back(std::move(t));
    }
    return out;
  }

 private:
  std::map<std::string, Entry> entries_;
};

// "ru.3.position" -> (3, "position"); "blocker.2" -> (2, "")
std::pair<int, std::string> indexed(const std::string& key, const Entry& e, std::size_t prefix_len) {
  const std::string rest = key.substr(prefix_len);
  const auto dot = rest.find('.');
  const std::string idx = rest.substr(0, dot);
  int n = -1;
  auto res = std::from_chars(idx.data(), idx.data() + idx.size(), n);
  if (res.ec != std::errc() || res.ptr != idx.data() + idx.size() || n < 0)
    throw ConfigError(Reader::where(key, e) + "bad index");
  return {n, dot == std::string::npos ? std::string() : rest.substr(dot + 1)};
}

struct FlightSpec {
  Flight flight;
  std::vector<double> raster;
  std::vector<double> altitudes;
  Vec3 center;
  bool has_waypoints = false;
  std::string first_key;
  Entry first_entry;
};

}  // namespace

SceneConfig parse_scene_config(const std::string& text) {
  Reader reader(text);
  SceneConfig sc;
  std::map<int, RadioUnit> rus;
  std::map<int, bool> ru_has_position, ru_has_height, ru_has_id;
  std::map<int, BlockerBox> blockers;
  std::map<int, FlightSpec> flights;
  bool has_polygon = false;

  for (const auto& [key, e] : reader.entries()) {
    auto num = [&] { return Reader::number(key, e); };
    auto flag = [&] { return Reader::boolean(key, e); };
    auto count = [&](const char* what) {
      const long long v = Reader::integer(key, e);
      if (v < 0) throw ConfigError(Reader::where(key, e) + what + " must be non-negative");
      return static_cast<std::size_t>(v);
    };

    if (key == "seed") {
      const long long v = Reader::integer(key, e);
      sc.seed = static_cast<std::uint64_t>(v);
    } else if (key == "sample_rate_hz") sc.sample_rate_hz = num();
    else if (key == "flight_gap_s") sc.flight_gap_s = num();
    else if (key == "shadowing_sigma_db") sc.shadowing_sigma_db = num();
    else if (key == "shadowing_decorrelation_m") sc.shadowing_decorrelation_m = num();
    else if (key == "rician_k_db") sc.rician_k_db = num();
    else if (key == "noise_power_dbm") sc.noise_power_dbm = num();
    else if (key == "n_rs") sc.n_rs = count("n_rs");
    else if (key == "n_rb") sc.n_rb = count("n_rb");
    else if (key == "gain_max_db") sc.gain_max_db = num();
    else if (key == "gain_min_db") sc.gain_min_db = num();
    else if (key == "beam_span_deg") sc.beam_span_deg = num();
    else if (key == "max_eirp_dbm") sc.max_eirp_dbm = num();
    else if (key == "max_altitude_m") sc.max_altitude_m = num();
    else if (key == "allow_high_altitude") sc.allow_high_altitude = flag();
    else if (key == "fading") sc.fading = flag();
    else if (key == "shadowing") sc.shadowing = flag();
    else if (key == "interference") sc.interference = flag();
    else if (key == "zone.polygon") {
      for (const auto& t : Reader::tuples(key, e, 2)) sc.zone.polygon.push_back({t[0], t[1]});
      has_polygon = true;
    } else if (key == "zone.max_height") sc.zone.max_height = num();
    else if (key.rfind("ru.", 0) == 0) {
      auto [n, field] = indexed(key, e, 3);
      RadioUnit& ru = rus[n];
      if (field == "id") {
        ru.id = static_cast<int>(Reader::integer(key, e));
        ru_has_id[n] = true;
      } else if (field == "position") {
        auto v = Reader::numbers(key, e);
        if (v.size() != 3) throw ConfigError(Reader::where(key, e) + "expected x,y,z");
        ru.position = {v[0], v[1], v[2]};
        ru_has_position[n] = true;
      } else if (field == "bearing_deg") ru.bearing_deg = num();
      else if (field == "height_agl") {
        ru.height_agl = num();
        ru_has_height[n] = true;
      } else if (field == "eirp_dbm") ru.eirp_dbm = num();
      else if (field == "carrier_hz") ru.carrier_hz = num();
      else if (field == "n_beams") ru.n_beams = static_cast<int>(Reader::integer(key, e));
      else if (field == "beam_width_deg") ru.beam_width_deg = num();
      else throw ConfigError(Reader::where(key, e) + "unknown key");
    } else if (key.rfind("blocker.", 0) == 0) {
      auto [n, field] = indexed(key, e, 8);
      if (!field.empty()) throw ConfigError(Reader::where(key, e) + "unknown key");
      auto v = Reader::numbers(key, e);
      if (v.size() != 6) throw ConfigError(Reader::where(key, e) + "expected 6 values");
      if (v[0] > v[3] || v[1] > v[4] || v[2] > v[5])
        throw ConfigError(Reader::where(key, e) + "blocker min corner exceeds max corner");
      blockers[n] = {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
    } else if (key.rfind("flight.", 0) == 0) {
      auto [n, field] = indexed(key, e, 7);
      FlightSpec& fs = flights[n];
      if (fs.first_key.empty()) {
        fs.first_key = key;
        fs.first_entry = e;
      }
      if (field == "speed") fs.flight.speed = num();
      else if (field == "waypoints") {
        for (const auto& t : Reader::tuples(key, e, 3)) fs.flight.waypoints.push_back({t[0], t[1], t[2]});
        fs.has_waypoints = true;
      } else if (field == "arc_raster") {
        fs.raster = Reader::numbers(key, e);
        if (fs.raster.size() != 5)
          throw ConfigError(Reader::where(key, e) + "expected r_min, r_max, r_step, az_min, az_max");
      } else if (field == "altitudes") fs.altitudes = Reader::numbers(key, e);
      else if (field == "center") {
        auto v = Reader::numbers(key, e);
        if (v.size() != 2) throw ConfigError(Reader::where(key, e) + "expected x,y");
        fs.center = {v[0], v[1], 0.0};
      } else throw ConfigError(Reader::where(key, e) + "unknown key");
    } else {
      throw ConfigError(Reader::where(key, e) + "unknown key");
    }
  }

  if (!has_polygon) throw ConfigError("missing zone.polygon");
  for (auto& [n, ru] : rus) {
    if (!ru_has_position[n]) throw ConfigError("ru." + std::to_string(n) + ".position missing");
    if (!ru_has_id[n]) ru.id = n;
    if (!ru_has_height[n]) ru.height_agl = ru.position.z;
    sc.radio_units.push_back(ru);
  }
  for (auto& [n, b] : blockers) sc.blockers.push_back(b);
  for (auto& [n, fs] : flights) {
    const std::string where = Reader::where(fs.first_key, fs.first_entry);
    if (fs.has_waypoints == !fs.raster.empty())
      throw ConfigError(where + "flight." + std::to_string(n) +
                        " needs exactly one of waypoints or arc_raster");
    if (!fs.raster.empty()) {
      if (fs.altitudes.empty())
        throw ConfigError(where + "flight." + std::to_string(n) + ".altitudes missing");
      fs.flight.waypoints = arc_raster(fs.center, fs.raster[0], fs.raster[1], fs.raster[2],
                                       fs.raster[3], fs.raster[4], fs.altitudes);
    }
    if (fs.flight.waypoints.size() < 2)
      throw ConfigError(where + "flight." + std::to_string(n) + " needs at least 2 waypoints");
    if (!(fs.flight.speed > 0.0))
      throw ConfigError(where + "flight." + std::to_string(n) + " speed must be positive");
    sc.flights.push_back(std::move(fs.flight));
  }
  sc.validate();
  return sc;
}

SceneConfig load_scene_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("config not found: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_scene_config(ss.str());
}

}  // namespace uavzone::radio
