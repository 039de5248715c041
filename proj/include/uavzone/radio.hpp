#pragma once

// Synthetic mmWave measurement generator.
//
// Per reference resource element i of SSB beam b, RU r contributes
// sqrt(P_rb) h_r s_rb(i); the UAV observes the sum over RUs plus one
// CN(0, sigma^2) noise sample. Power quantities are linear milliwatts.
// The channel h_r combines free-space path loss, log-normal shadowing
// (AR(1) along the flight) and Rician fading (Rayleigh when blocked).
// Beam gain is the parabolic mainlobe max(Gmax - 12 (theta/bw)^2, Gmin) dB,
// taken relative to Gmax so that EIRP is the boresight power.

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace uavzone::radio {

using cplx = std::complex<double>;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  double norm() const;
  bool operator==(const Vec3&) const = default;
};

struct RadioUnit {
  int id = 0;
  Vec3 position;              // local east / north / up, metres
  double bearing_deg = 0.0;   // clockwise from north
  double height_agl = 0.0;
  double eirp_dbm = 62.0;
  double carrier_hz = 24.42288e9;
  int n_beams = 8;
  double beam_width_deg = 15.0;

  // max_eirp_dbm is the configurable cap (62 dBm by default).
  void validate(double max_eirp_dbm = 62.0) const;
};

struct UavState {
  Vec3 position;  // x, y, altitude h
  double timestamp = 0.0;
  double speed = 1.5;
};

// One RU/beam link at one instant. `h` holds one coefficient per reference RE
// (a single entry is broadcast over all REs: the channel is flat).
struct ChannelRealization {
  std::vector<cplx> h;
  double interference_power = 0.0;
  double noise_var = 0.0;
  std::size_t n_rs = 127;
  std::size_t n_rb = 20;
};

struct MeasurementSample {
  int pci = 0;
  int ssb_idx = 0;
  double rssi = 0.0;      // dBm, all SSB beams
  double ssb_rssi = 0.0;  // dBm, serving beam REs
  double ss_rsrp = 0.0;   // dBm
  double ss_sinr = 0.0;   // dB
  double ss_rsrq = 0.0;   // dB
  int label = 0;          // 1 restricted, 0 authorized
  std::optional<Vec3> position;
  double timestamp = 0.0;
};

struct RestrictedZone {
  std::vector<std::array<double, 2>> polygon;  // convex, either orientation
  double max_height = 50.0;

  double area() const;
  void validate() const;
};

struct BlockerBox {
  Vec3 min;
  Vec3 max;
};

struct Flight {
  std::vector<Vec3> waypoints;
  double speed = 1.5;
};

struct SceneConfig {
  std::vector<RadioUnit> radio_units;
  RestrictedZone zone;
  std::vector<BlockerBox> blockers;
  std::vector<Flight> flights;

  double shadowing_sigma_db = 4.0;
  double shadowing_decorrelation_m = 20.0;
  double rician_k_db = 10.0;
  double noise_power_dbm = -100.0;  // per RE
  std::size_t n_rs = 127;
  std::size_t n_rb = 20;
  double gain_max_db = 24.0;
  double gain_min_db = -10.0;
  double beam_span_deg = 60.0;  // boresights spread over bearing +/- span
  double max_eirp_dbm = 62.0;
  double max_altitude_m = 50.0;
  bool allow_high_altitude = false;
  double sample_rate_hz = 1.0;
  double flight_gap_s = 60.0;

  bool fading = true;
  bool shadowing = true;
  bool interference = true;

  std::uint64_t seed = 0;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Signal model.

double db_to_linear(double db);
double linear_to_db(double lin);

// y(i) = sqrt(P) h(i) s(i) + n(i), n ~ CN(0, noise_var), deterministic per seed.
std::vector<cplx> received_signal(double tx_power, std::span<const cplx> h,
                                  std::span<const cplx> symbols, double noise_var,
                                  std::uint64_t seed);

// Same, with P from the RU's EIRP and the beam's gain toward the UAV and the
// RU's reference symbols. Throws std::out_of_range("beam out of range").
std::vector<cplx> received_signal(const RadioUnit& ru, int beam, const UavState& uav,
                                  const ChannelRealization& chan, std::uint64_t seed,
                                  double gain_max_db = 24.0, double gain_min_db = -10.0,
                                  double beam_span_deg = 60.0);

// Mean |y|^2 over reference REs. Throws on an empty array.
double rsrp(std::span<const cplx> samples);

// In-band interference on the serving link: mean |u|^2 + 2 mean Re{conj(y) u},
// u = summed non-serving RU signal per RE.
double interference(std::span<const cplx> serving, std::span<const cplx> interferers);

// gamma = rho + I. Throws NumericError("non-physical RSSI") when the result is <= 0.
double rssi(double rsrp_lin, double interference_lin);

// rho / (I + sigma^2). Throws NumericError when the denominator is <= 0.
double sinr(double rsrp_lin, double interference_lin, double noise_var);

// N_RB rho / gamma. Throws NumericError when gamma <= 0.
double rsrq(std::size_t n_rb, double rsrp_lin, double rssi_lin);

// Free-space path loss in dB: 20 log10 d + 20 log10 f - 147.55.
double fspl_db(double distance_m, double freq_hz);

double beam_boresight_deg(const RadioUnit& ru, int beam, double span_deg);
// Absolute gain in dB for an off-boresight angle.
double beam_gain_db(double off_boresight_deg, double beam_width_deg, double gain_max_db,
                    double gain_min_db);
// Angle between the (horizontal) beam boresight and the RU -> target ray.
double off_boresight_deg(const RadioUnit& ru, int beam, const Vec3& target, double span_deg);

// Unit-modulus reference symbols for one RU/beam. Sequences of distinct RUs
// are mutually orthogonal over n_rs REs (for fewer than n_rs RUs).
std::vector<cplx> reference_symbols(int ru_index, int beam, std::size_t n_rs);

using BeamKey = std::pair<int, int>;  // (RU id, beam index)

// argmax by RSRP; ties resolve to the lexicographically lowest (RU id, beam).
// Returns (pci, ssb_idx); pci equals the RU id.
BeamKey serving_beam_select(const std::map<BeamKey, double>& all_rsrp);

// 1 iff inside or on the polygon boundary and h <= zone.max_height.
int label_position(const Vec3& p, const RestrictedZone& zone);

bool segment_hits_box(const Vec3& a, const Vec3& b, const BlockerBox& box);

// ---------------------------------------------------------------------------
// Flight simulation.

// Per-tick raw signals, kept for verification. components[r][b][i] is
// sqrt(P) h s of RU index r (position in scene.radio_units) on beam b, RE i;
// noise[b][i] is the receiver noise on beam b.
struct TickSignals {
  std::vector<std::vector<std::vector<cplx>>> components;
  std::vector<std::vector<cplx>> noise;
  double noise_var = 0.0;
  std::size_t serving_ru = 0;  // index into scene.radio_units
  int serving_beam = 0;
  double rsrp_lin = 0.0;
  double interference_lin = 0.0;
  double ssb_rssi_lin = 0.0;
  double rssi_lin = 0.0;
};

// Samples the flight at sample_rate_hz moving at constant speed along the
// waypoint polyline. Throws ConfigError("... exceeds low-altitude regime")
// for waypoints above scene.max_altitude_m unless allow_high_altitude.
std::vector<MeasurementSample> simulate_flight(const SceneConfig& scene, const Flight& flight,
                                               double sample_rate_hz, std::uint64_t seed,
                                               double start_time = 0.0,
                                               std::vector<TickSignals>* signals = nullptr);

// All configured flights back to back, separated by flight_gap_s.
std::vector<MeasurementSample> simulate_scene(const SceneConfig& scene);

// Number of ticks simulate_flight emits.
std::size_t tick_count(const Flight& flight, double sample_rate_hz);
double path_length(const std::vector<Vec3>& waypoints);
Vec3 position_at(const std::vector<Vec3>& waypoints, double distance);

// Polar lawnmower: arcs around `center` from r_min to r_max in r_step, sweeping
// az_min..az_max (bearing degrees), repeated at every altitude.
std::vector<Vec3> arc_raster(Vec3 center, double r_min, double r_max, double r_step,
                             double az_min_deg, double az_max_deg,
                             const std::vector<double>& altitudes);

// ---------------------------------------------------------------------------
// Scene files and sample CSVs.

inline constexpr const char* kSampleCsvHeader =
    "timestamp,x,y,h,pci,ssb_idx,rssi,ssb_rssi,ss_rsrp,ss_sinr,ss_rsrq,class";

SceneConfig parse_scene_config(const std::string& text);
SceneConfig load_scene_config(const std::filesystem::path& path);

void write_samples_csv(std::ostream& out, std::span<const MeasurementSample> samples);
void write_samples_csv(const std::filesystem::path& path,
                       std::span<const MeasurementSample> samples);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace uavzone::radio
