#include "uavzone/radio.hpp"

#include "uavzone/error.hpp"
#include "uavzone/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace uavzone::radio {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSpeedOfLight = 299792458.0;

double deg2rad(double d) { return d * kPi / 180.0; }
double rad2deg(double r) { return r * 180.0 / kPi; }

cplx complex_normal(Rng& rng, double var) {
  std::normal_distribution<double> n(0.0, std::sqrt(var / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

double cross2(std::array<double, 2> o, std::array<double, 2> a, std::array<double, 2> b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double mean_power(std::span<const cplx> v) {
  double s = 0.0;
  for (const cplx& c : v) s += std::norm(c);
  return s / static_cast<double>(v.size());
}

}  // namespace

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

void RadioUnit::validate(double max_eirp_dbm) const {
  const std::string who = "RU " + std::to_string(id) + ": ";
  if (!(eirp_dbm <= max_eirp_dbm))
    throw ConfigError(who + "EIRP " + format_double(eirp_dbm) + " dBm above cap " +
                      format_double(max_eirp_dbm));
  if (!(height_agl > 0.0)) throw ConfigError(who + "height_agl must be positive");
  if (n_beams < 1 || n_beams > 64) throw ConfigError(who + "n_beams must be in [1, 64]");
  if (!(carrier_hz >= 24.25e9 && carrier_hz <= 29.5e9))
    throw ConfigError(who + "carrier frequency outside [24.25, 29.5] GHz");
  if (!(beam_width_deg > 0.0)) throw ConfigError(who + "beam_width must be positive");
  if (id < 0) throw ConfigError(who + "id must be non-negative");
}

double RestrictedZone::area() const {
  double a = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const auto& p = polygon[i];
    const auto& q = polygon[(i + 1) % polygon.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return std::abs(a) / 2.0;
}

void RestrictedZone::validate() const {
  if (polygon.size() < 3) throw ConfigError("restricted zone needs at least 3 vertices");
  if (!(area() > 0.0)) throw ConfigError("restricted zone is degenerate (zero area)");
  if (!(max_height > 0.0)) throw ConfigError("restricted zone height bound must be positive");
  int sign = 0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double c = cross2(polygon[i], polygon[(i + 1) % n], polygon[(i + 2) % n]);
    if (c == 0.0) continue;
    const int s = c > 0 ? 1 : -1;
    if (sign != 0 && s != sign) throw ConfigError("restricted zone polygon is not convex");
    sign = s;
  }
}

void SceneConfig::validate() const {
  if (radio_units.empty()) throw ConfigError("scene needs at least one radio unit");
  for (std::size_t i = 0; i < radio_units.size(); ++i) {
    radio_units[i].validate(max_eirp_dbm);
    for (std::size_t j = 0; j < i; ++j)
      if (radio_units[j].id == radio_units[i].id)
        throw ConfigError("duplicate RU id " + std::to_string(radio_units[i].id));
  }
  zone.validate();
  if (n_rs < 1) throw ConfigError("n_rs must be >= 1");
  if (n_rb < 1) throw ConfigError("n_rb must be >= 1");
  if (radio_units.size() >= n_rs)
    throw ConfigError("n_rs must exceed the RU count to keep reference sequences orthogonal");
  if (!(shadowing_sigma_db >= 0.0)) throw ConfigError("shadowing_sigma_db must be >= 0");
  if (!(shadowing_decorrelation_m > 0.0))
    throw ConfigError("shadowing_decorrelation_m must be positive");
  if (!std::isfinite(rician_k_db)) throw ConfigError("rician_k_db must be finite");
  if (!std::isfinite(noise_power_dbm)) throw ConfigError("noise_power_dbm must be finite");
  if (!(gain_max_db >= gain_min_db)) throw ConfigError("gain_max_db must be >= gain_min_db");
  if (!(beam_span_deg >= 0.0 && beam_span_deg <= 180.0))
    throw ConfigError("beam_span_deg must be in [0, 180]");
  if (!(sample_rate_hz > 0.0)) throw ConfigError("sample_rate_hz must be positive");
  if (!(flight_gap_s >= 0.0)) throw ConfigError("flight_gap_s must be >= 0");
  if (!(max_altitude_m > 0.0)) throw ConfigError("max_altitude_m must be positive");
}

// ---------------------------------------------------------------------------

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

std::vector<cplx> received_signal(double tx_power, std::span<const cplx> h,
                                  std::span<const cplx> symbols, double noise_var,
                                  std::uint64_t seed) {
  if (symbols.empty()) throw std::invalid_argument("received_signal: no reference symbols");
  if (h.size() != 1 && h.size() != symbols.size())
    throw std::invalid_argument("received_signal: channel length " + std::to_string(h.size()) +
                                " does not match " + std::to_string(symbols.size()) + " REs");
  if (!(tx_power >= 0.0)) throw std::invalid_argument("received_signal: negative power");
  if (!(noise_var >= 0.0)) throw std::invalid_argument("received_signal: negative noise variance");
  const double amp = std::sqrt(tx_power);
  Rng rng(mix_seed(seed, 0x5167));
  std::vector<cplx> y(symbols.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const cplx hi = h.size() == 1 ? h[0] : h[i];
    y[i] = amp * hi * symbols[i];
    if (noise_var > 0.0) y[i] += complex_normal(rng, noise_var);
  }
  return y;
}

std::vector<cplx> received_signal(const RadioUnit& ru, int beam, const UavState& uav,
                                  const ChannelRealization& chan, std::uint64_t seed,
                                  double gain_max_db, double gain_min_db, double beam_span_deg) {
  if (beam < 0 || beam >= ru.n_beams) throw std::out_of_range("beam out of range");
  if (chan.n_rs < 1) throw std::invalid_argument("received_signal: n_rs must be >= 1");
  const double theta = off_boresight_deg(ru, beam, uav.position, beam_span_deg);
  const double gain = beam_gain_db(theta, ru.beam_width_deg, gain_max_db, gain_min_db);
  const double p = db_to_linear(ru.eirp_dbm + gain - gain_max_db);
  const auto s = reference_symbols(ru.id, beam, chan.n_rs);
  return received_signal(p, chan.h, s, chan.noise_var, seed);
}

double rsrp(std::span<const cplx> samples) {
  if (samples.empty()) throw std::invalid_argument("rsrp: empty sample array");
  return mean_power(samples);
}

double interference(std::span<const cplx> serving, std::span<const cplx> interferers) {
  if (serving.size() != interferers.size() || serving.empty())
    throw std::invalid_argument("interference: serving and interferer arrays must match");
  double own = 0.0;
  double cross = 0.0;
  for (std::size_t i = 0; i < serving.size(); ++i) {
    own += std::norm(interferers[i]);
    cross += (std::conj(serving[i]) * interferers[i]).real();
  }
  const double n = static_cast<double>(serving.size());
  return own / n + 2.0 * cross / n;
}

double rssi(double rsrp_lin, double interference_lin) {
  if (!(rsrp_lin >= 0.0)) throw std::invalid_argument("rssi: negative RSRP");
  const double g = rsrp_lin + interference_lin;
  if (!(g > 0.0)) throw NumericError("non-physical RSSI");
  return g;
}

double sinr(double rsrp_lin, double interference_lin, double noise_var) {
  const double d = interference_lin + noise_var;
  if (!(d > 0.0)) throw NumericError("sinr: interference plus noise is not positive");
  return rsrp_lin / d;
}

double rsrq(std::size_t n_rb, double rsrp_lin, double rssi_lin) {
  if (n_rb < 1) throw std::invalid_argument("rsrq: n_rb must be >= 1");
  if (!(rssi_lin > 0.0)) throw NumericError("rsrq: RSSI is not positive");
  return static_cast<double>(n_rb) * rsrp_lin / rssi_lin;
}

double fspl_db(double distance_m, double freq_hz) {
  if (!(distance_m > 0.0) || !(freq_hz > 0.0))
    throw std::invalid_argument("fspl_db: distance and frequency must be positive");
  return 20.0 * std::log10(distance_m) + 20.0 * std::log10(freq_hz) - 147.55;
}

double beam_boresight_deg(const RadioUnit& ru, int beam, double span_deg) {
  if (beam < 0 || beam >= ru.n_beams) throw std::out_of_range("beam out of range");
  if (ru.n_beams == 1) return ru.bearing_deg;
  const double step = 2.0 * span_deg / (ru.n_beams - 1);
  return ru.bearing_deg - span_deg + step * beam;
}

double beam_gain_db(double off_boresight_deg, double beam_width_deg, double gain_max_db,
                    double gain_min_db) {
  const double r = off_boresight_deg / beam_width_deg;
  return std::max(gain_max_db - 12.0 * r * r, gain_min_db);
}

double off_boresight_deg(const RadioUnit& ru, int beam, const Vec3& target, double span_deg) {
  const double az = deg2rad(beam_boresight_deg(ru, beam, span_deg));
  const Vec3 d = target - ru.position;
  const double len = d.norm();
  if (len == 0.0) return 0.0;
  // bearing is clockwise from north: east = sin, north = cos
  const double c = (std::sin(az) * d.x + std::cos(az) * d.y) / len;
  return rad2deg(std::acos(std::clamp(c, -1.0, 1.0)));
}

std::vector<cplx> reference_symbols(int ru_index, int beam, std::size_t n_rs) {
  // Common QPSK base per beam, modulated by a per-RU DFT row: distinct RUs
  // are exactly orthogonal over the n_rs REs.
  Rng rng(mix_seed(0x55B0 + static_cast<std::uint64_t>(beam), n_rs));
  std::vector<cplx> s(n_rs);
  const double inv = 1.0 / std::sqrt(2.0);
  const auto k = static_cast<double>(static_cast<std::size_t>(ru_index) % n_rs);
  for (std::size_t i = 0; i < n_rs; ++i) {
    const auto bits = rng();
    const cplx q((bits & 1) ? inv : -inv, (bits & 2) ? inv : -inv);
    const double ph = 2.0 * kPi * k * static_cast<double>(i) / static_cast<double>(n_rs);
    s[i] = q * std::polar(1.0, ph);
  }
  return s;
}

BeamKey serving_beam_select(const std::map<BeamKey, double>& all_rsrp) {
  if (all_rsrp.empty()) throw std::invalid_argument("serving_beam_select: empty RSRP table");
  // std::map iterates in lexicographic key order, so strict > keeps the lowest key on ties.
  auto best = all_rsrp.begin();
  for (auto it = all_rsrp.begin(); it != all_rsrp.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

int label_position(const Vec3& p, const RestrictedZone& zone) {
  if (p.z > zone.max_height) return 0;
  const auto& poly = zone.polygon;
  const std::size_t n = poly.size();
  const std::array<double, 2> q{p.x, p.y};
  bool pos = false;
  bool neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    double c = cross2(a, b, q);
    // treat values at rounding level as on the edge
    const double scale = std::hypot(b[0] - a[0], b[1] - a[1]) * std::hypot(q[0] - a[0], q[1] - a[1]);
    if (std::abs(c) <= 1e-12 * scale) c = 0.0;
    if (c > 0) pos = true;
    if (c < 0) neg = true;
    if (pos && neg) return 0;
  }
  return 1;
}

bool segment_hits_box(const Vec3& a, const Vec3& b, const BlockerBox& box) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double start[3] = {a.x, a.y, a.z};
  const double delta[3] = {b.x - a.x, b.y - a.y, b.z - a.z};
  const double lo[3] = {box.min.x, box.min.y, box.min.z};
  const double hi[3] = {box.max.x, box.max.y, box.max.z};
  for (int k = 0; k < 3; ++k) {
    if (delta[k] == 0.0) {
      if (start[k] < lo[k] || start[k] > hi[k]) return false;
      continue;
    }
    double ta = (lo[k] - start[k]) / delta[k];
    double tb = (hi[k] - start[k]) / delta[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

double path_length(const std::vector<Vec3>& waypoints) {
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i)
    len += (waypoints[i] - waypoints[i - 1]).norm();
  return len;
}

Vec3 position_at(const std::vector<Vec3>& waypoints, double distance) {
  if (waypoints.empty()) throw std::invalid_argument("position_at: no waypoints");
  double left = distance;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Vec3 seg = waypoints[i] - waypoints[i - 1];
    const double len = seg.norm();
    if (left <= len) {
      if (len == 0.0) return waypoints[i - 1];
      return waypoints[i - 1] + (left / len) * seg;
    }
    left -= len;
  }
  return waypoints.back();
}

std::size_t tick_count(const Flight& flight, double sample_rate_hz) {
  if (flight.waypoints.size() < 2) throw ConfigError("flight needs at least 2 waypoints");
  if (!(sample_rate_hz > 0.0)) throw ConfigError("sample_rate_hz must be positive");
  if (!(flight.speed > 0.0)) throw ConfigError("flight speed must be positive");
  const double duration = path_length(flight.waypoints) / flight.speed;
  return static_cast<std::size_t>(std::floor(duration * sample_rate_hz + 1e-9)) + 1;
}

std::vector<Vec3> arc_raster(Vec3 center, double r_min, double r_max, double r_step,
                             double az_min_deg, double az_max_deg,
                             const std::vector<double>& altitudes) {
  if (!(r_min > 0.0) || !(r_max >= r_min) || !(r_step > 0.0))
    throw ConfigError("arc_raster: need 0 < r_min <= r_max and r_step > 0");
  if (!(az_max_deg > az_min_deg)) throw ConfigError("arc_raster: az_max must exceed az_min");
  if (altitudes.empty()) throw ConfigError("arc_raster: no altitudes");
  std::vector<double> radii;
  for (double r = r_min; r <= r_max + 1e-9; r += r_step) radii.push_back(r);
  const auto n_seg = static_cast<int>(std::ceil((az_max_deg - az_min_deg) / 2.0));
  std::vector<Vec3> out;
  bool sweep_up = true;
  for (std::size_t a = 0; a < altitudes.size(); ++a) {
    std::vector<double> order = radii;
    if (a % 2 == 1) std::reverse(order.begin(), order.end());
    for (double r : order) {
      for (int k = 0; k <= n_seg; ++k) {
        const double frac = static_cast<double>(sweep_up ? k : n_seg - k) / n_seg;
        const double az = deg2rad(az_min_deg + frac * (az_max_deg - az_min_deg));
        out.push_back({center.x + r * std::sin(az), center.y + r * std::cos(az), altitudes[a]});
      }
      sweep_up = !sweep_up;
    }
  }
  return out;
}

namespace {

struct RuGeometry {
  double lambda = 0.0;
  double k_lin = 0.0;
};

}  // namespace

std::vector<MeasurementSample> simulate_flight(const SceneConfig& scene, const Flight& flight,
                                               double sample_rate_hz, std::uint64_t seed,
                                               double start_time,
                                               std::vector<TickSignals>* signals) {
  scene.validate();
  const std::size_t n_ticks = tick_count(flight, sample_rate_hz);
  for (const Vec3& w : flight.waypoints) {
    if (!scene.allow_high_altitude && w.z > scene.max_altitude_m)
      throw ConfigError("waypoint altitude " + format_double(w.z) +
                        " m exceeds low-altitude regime (" + format_double(scene.max_altitude_m) +
                        " m)");
    if (w.z < 0.0) throw ConfigError("waypoint altitude below ground");
  }

  const std::size_t n_ru = scene.radio_units.size();
  const std::size_t n_rs = scene.n_rs;
  int max_beams = 0;
  for (const auto& ru : scene.radio_units) max_beams = std::max(max_beams, ru.n_beams);
  const auto n_beams = static_cast<std::size_t>(max_beams);

  // Reference symbols and beam-independent per-RU constants.
  std::vector<std::vector<std::vector<cplx>>> symbols(n_ru);
  std::vector<RuGeometry> geo(n_ru);
  for (std::size_t r = 0; r < n_ru; ++r) {
    const auto& ru = scene.radio_units[r];
    for (int b = 0; b < ru.n_beams; ++b) symbols[r].push_back(reference_symbols(ru.id, b, n_rs));
    geo[r].lambda = kSpeedOfLight / ru.carrier_hz;
  }
  const double k_los = db_to_linear(scene.rician_k_db);
  const double noise_var = db_to_linear(scene.noise_power_dbm);

  Rng rng(seed);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::vector<double> shadow(n_ru, 0.0);
  Vec3 prev_pos;

  std::vector<MeasurementSample> out;
  out.reserve(n_ticks);
  if (signals) {
    signals->clear();
    signals->reserve(n_ticks);
  }

  std::vector<cplx> h(n_ru);
  std::vector<std::vector<std::vector<cplx>>> comp(
      n_ru, std::vector<std::vector<cplx>>(n_beams, std::vector<cplx>(n_rs)));
  std::vector<std::vector<cplx>> noise(n_beams, std::vector<cplx>(n_rs));
  std::vector<cplx> y(n_rs), u(n_rs), total(n_rs);

  for (std::size_t t = 0; t < n_ticks; ++t) {
    const double time = static_cast<double>(t) / sample_rate_hz;
    const Vec3 pos = position_at(flight.waypoints, flight.speed * time);

    // Large-scale and small-scale channel per RU.
    for (std::size_t r = 0; r < n_ru; ++r) {
      const auto& ru = scene.radio_units[r];
      if (scene.shadowing) {
        const double z = std_normal(rng);
        if (t == 0) {
          shadow[r] = scene.shadowing_sigma_db * z;
        } else {
          const double step = (pos - prev_pos).norm();
          const double a = std::exp(-step / scene.shadowing_decorrelation_m);
          shadow[r] = a * shadow[r] + std::sqrt(1.0 - a * a) * scene.shadowing_sigma_db * z;
        }
      }
      const double dist = std::max((pos - ru.position).norm(), 1.0);
      const double gain_db = -fspl_db(dist, ru.carrier_hz) + shadow[r];
      const double los_phase = -2.0 * kPi * std::fmod(dist / geo[r].lambda, 1.0);
      cplx fade = std::polar(1.0, los_phase);
      if (scene.fading) {
        bool blocked = false;
        for (const auto& box : scene.blockers)
          if (segment_hits_box(ru.position, pos, box)) blocked = true;
        const double k = blocked ? 0.0 : k_los;
        fade = std::sqrt(k / (k + 1.0)) * fade + std::sqrt(1.0 / (k + 1.0)) * complex_normal(rng, 1.0);
      }
      h[r] = std::pow(10.0, gain_db / 20.0) * fade;
    }

    // Per-beam RE signals.
    for (std::size_t b = 0; b < n_beams; ++b) {
      for (std::size_t i = 0; i < n_rs; ++i) noise[b][i] = complex_normal(rng, noise_var);
      for (std::size_t r = 0; r < n_ru; ++r) {
        const auto& ru = scene.radio_units[r];
        if (static_cast<int>(b) >= ru.n_beams) {
          std::fill(comp[r][b].begin(), comp[r][b].end(), cplx{});
          continue;
        }
        const int bi = static_cast<int>(b);
        const double theta = off_boresight_deg(ru, bi, pos, scene.beam_span_deg);
        const double g = beam_gain_db(theta, ru.beam_width_deg, scene.gain_max_db, scene.gain_min_db);
        const cplx a = std::sqrt(db_to_linear(ru.eirp_dbm + g - scene.gain_max_db)) * h[r];
        for (std::size_t i = 0; i < n_rs; ++i) comp[r][b][i] = a * symbols[r][b][i];
      }
    }

    std::map<BeamKey, double> table;
    std::map<BeamKey, std::size_t> index_of;
    for (std::size_t r = 0; r < n_ru; ++r) {
      const auto& ru = scene.radio_units[r];
      for (int b = 0; b < ru.n_beams; ++b) {
        for (std::size_t i = 0; i < n_rs; ++i) y[i] = comp[r][b][i] + noise[b][i];
        table[{ru.id, b}] = rsrp(y);
        index_of[{ru.id, b}] = r;
      }
    }
    const BeamKey serving = serving_beam_select(table);
    const std::size_t rs = index_of.at(serving);
    const auto bs = static_cast<std::size_t>(serving.second);

    for (std::size_t i = 0; i < n_rs; ++i) {
      y[i] = comp[rs][bs][i] + noise[bs][i];
      cplx acc{};
      for (std::size_t r = 0; r < n_ru; ++r)
        if (r != rs) acc += comp[r][bs][i];
      u[i] = acc;
    }
    const double rho = table.at(serving);
    const double interf = scene.interference ? interference(y, u) : 0.0;
    const double gamma = rssi(rho, interf);

    // Wideband RSSI: received power over every SSB beam's REs.
    double wide = 0.0;
    for (std::size_t b = 0; b < n_beams; ++b) {
      for (std::size_t i = 0; i < n_rs; ++i) {
        cplx v = noise[b][i];
        if (scene.interference) {
          for (std::size_t r = 0; r < n_ru; ++r) v += comp[r][b][i];
        } else {
          v += comp[rs][b][i];
        }
        total[i] = v;
      }
      wide += mean_power(total);
    }

    MeasurementSample s;
    s.pci = serving.first;
    s.ssb_idx = serving.second;
    s.ss_rsrp = linear_to_db(rho);
    s.ssb_rssi = linear_to_db(gamma);
    s.rssi = linear_to_db(wide);
    s.ss_sinr = linear_to_db(sinr(rho, interf, noise_var));
    s.ss_rsrq = linear_to_db(rsrq(scene.n_rb, rho, wide));
    s.label = label_position(pos, scene.zone);
    s.position = pos;
    s.timestamp = start_time + time;
    out.push_back(s);

    if (signals) {
      TickSignals sig;
      sig.components = comp;
      sig.noise = noise;
      sig.noise_var = noise_var;
      sig.serving_ru = rs;
      sig.serving_beam = serving.second;
      sig.rsrp_lin = rho;
      sig.interference_lin = interf;
      sig.ssb_rssi_lin = gamma;
      sig.rssi_lin = wide;
      signals->push_back(std::move(sig));
    }
    prev_pos = pos;
  }
  return out;
}

std::vector<MeasurementSample> simulate_scene(const SceneConfig& scene) {
  if (scene.flights.empty()) throw ConfigError("scene defines no flights");
  std::vector<MeasurementSample> all;
  double t0 = 0.0;
  for (std::size_t k = 0; k < scene.flights.size(); ++k) {
    auto part = simulate_flight(scene, scene.flights[k], scene.sample_rate_hz,
                                mix_seed(scene.seed, k), t0);
    t0 = part.back().timestamp + 1.0 / scene.sample_rate_hz + scene.flight_gap_s;
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_samples_csv(std::ostream& out, std::span<const MeasurementSample> samples) {
  out << kSampleCsvHeader << '\n';
  for (const auto& s : samples) {
    out << format_double(s.timestamp) << ',';
    if (s.position) {
      out << format_double(s.position->x) << ',' << format_double(s.position->y) << ','
          << format_double(s.position->z) << ',';
    } else {
      out << ",,,";
    }
    out << s.pci << ',' << s.ssb_idx << ',' << format_double(s.rssi) << ','
        << format_double(s.ssb_rssi) << ',' << format_double(s.ss_rsrp) << ','
        << format_double(s.ss_sinr) << ',' << format_double(s.ss_rsrq) << ',' << s.label << '\n';
  }
}

void write_samples_csv(const std::filesystem::path& path,
                       std::span<const MeasurementSample> samples) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  write_samples_csv(f, samples);
  if (!f) throw DataError("write failed: " + path.string());
}

}  // namespace uavzone::radio
