#pragma once

// File formats: binary I/Q cubes, product CSV + JSON metadata, clutter mask
// and persistency files, disdrometer CSV, scattering tables, and the JSON
// scene / chain configurations used by the command-line tool.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "bswrm/clutter.hpp"
#include "bswrm/core.hpp"
#include "bswrm/dsd.hpp"
#include "bswrm/pipeline.hpp"
#include "bswrm/radar.hpp"
#include "bswrm/simulator.hpp"

namespace bswrm::io {

using json = nlohmann::json;

/// Stable error codes of the readers and writers.
enum class Errc : int {
  file_not_found = 1,
  bad_magic = 2,
  truncated = 3,
  size_mismatch = 4,
  invalid_header = 5,
  parse_error = 6,
  schema_error = 7,
  write_failed = 8,
};

inline const char* to_string(Errc e) {
  switch (e) {
    case Errc::file_not_found: return "file-not-found";
    case Errc::bad_magic: return "bad-magic";
    case Errc::truncated: return "truncated";
    case Errc::size_mismatch: return "size-mismatch";
    case Errc::invalid_header: return "invalid-header";
    case Errc::parse_error: return "parse-error";
    case Errc::schema_error: return "schema-error";
    case Errc::write_failed: return "write-failed";
  }
  return "unknown";
}

class io_error : public std::runtime_error {
 public:
  io_error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

// ---------------------------------------------------------------------------
// Text helpers

/// Shortest round-trip decimal form; "nan" for NaN.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(Errc::file_not_found, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file and renames it into place, so a failed
/// write never leaves partial output behind.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error(Errc::write_failed, "cannot create " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw io_error(Errc::write_failed, "write error on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw io_error(Errc::write_failed, "cannot rename into " + path.string());
  }
}

// ---------------------------------------------------------------------------
// Binary cube

inline constexpr char kCubeMagic[8] = {'B', 'S', 'W', 'R', 'M', '0', '1', '\0'};
inline constexpr std::size_t kCubeHeaderBytes = 8 + 3 * 4 + 10 * 8;
inline constexpr std::size_t kCubeBeamBytes = 4 + 9 * 8;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

struct Reader {
  std::string_view data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > data.size()) throw io_error(Errc::truncated, "unexpected end of cube data");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
};

}  // namespace detail

/// Layout (little endian): magic[8]; u32 M, N_p', N_g; f64 dr, T_s, tau_tx,
/// tau_gu, tau_rx, tau_id, f0, B, B_adc, timestamp; per beam u32 id and f64
/// az, el, hpbw_az, hpbw_el, G_max, x, y, z, C_g (NaN if absent); then f32
/// I, Q pairs beam-major, then pulse, then gate.
inline std::string encode_cube(const IqCube& cube) {
  std::string out;
  out.reserve(kCubeHeaderBytes + cube.n_beams() * kCubeBeamBytes + cube.samples().size() * 8);
  out.append(kCubeMagic, 8);
  const FrameTiming& f = cube.frame();
  detail::put_u32(out, static_cast<std::uint32_t>(cube.n_gates()));
  detail::put_u32(out, static_cast<std::uint32_t>(cube.n_pulses()));
  detail::put_u32(out, static_cast<std::uint32_t>(cube.n_beams()));
  for (double v : {cube.range_step(), f.slow_time(), f.tau_tx, f.tau_gu, f.tau_rx, f.tau_id, f.carrier, f.bandwidth,
                   f.adc_bandwidth, cube.timestamp()})
    detail::put_f64(out, v);
  for (const auto& b : cube.beams()) {
    detail::put_u32(out, b.id);
    for (double v : {b.azimuth, b.elevation, b.hpbw_az, b.hpbw_el, b.max_gain, b.site.x, b.site.y, b.site.z,
                     b.radar_constant})
      detail::put_f64(out, v);
  }
  for (const auto& s : cube.samples()) {
    detail::put_f32(out, s.real());
    detail::put_f32(out, s.imag());
  }
  return out;
}

inline IqCube decode_cube(std::string_view data) {
  if (data.size() < 8 || std::memcmp(data.data(), kCubeMagic, 8) != 0) throw io_error(Errc::bad_magic, "not a cube file");
  detail::Reader rd{data, 8};
  if (data.size() < kCubeHeaderBytes) throw io_error(Errc::truncated, "cube header shorter than expected");
  const std::uint32_t n_gates = rd.u32(), np = rd.u32(), n_beams = rd.u32();
  const double dr = rd.f64(), ts = rd.f64();
  FrameTiming f;
  f.tau_tx = rd.f64();
  f.tau_gu = rd.f64();
  f.tau_rx = rd.f64();
  f.tau_id = rd.f64();
  f.carrier = rd.f64();
  f.bandwidth = rd.f64();
  f.adc_bandwidth = rd.f64();
  f.pulses_per_beam = np;
  const double timestamp = rd.f64();
  if (n_gates == 0 || np == 0 || n_beams == 0) throw io_error(Errc::invalid_header, "zero dimension in cube header");
  const std::uint64_t expected = kCubeHeaderBytes + static_cast<std::uint64_t>(n_beams) * kCubeBeamBytes +
                                 static_cast<std::uint64_t>(n_beams) * np * n_gates * 8;
  if (data.size() != expected)
    throw io_error(Errc::size_mismatch, "payload holds " + std::to_string(data.size()) + " bytes, header declares " +
                                            std::to_string(expected));
  if (ts != f.slow_time()) throw io_error(Errc::invalid_header, "T_s differs from the sum of the frame intervals");
  try {
    f.validate();
  } catch (const std::invalid_argument& e) {
    throw io_error(Errc::invalid_header, e.what());
  }
  if (dr != f.range_step()) throw io_error(Errc::invalid_header, "range step differs from c / (2 B_adc)");
  std::vector<BeamGeometry> beams(n_beams);
  for (auto& b : beams) {
    b.id = rd.u32();
    b.azimuth = rd.f64();
    b.elevation = rd.f64();
    b.hpbw_az = rd.f64();
    b.hpbw_el = rd.f64();
    b.max_gain = rd.f64();
    b.site.x = rd.f64();
    b.site.y = rd.f64();
    b.site.z = rd.f64();
    b.radar_constant = rd.f64();
  }
  IqCube cube;
  try {
    cube = IqCube(f, std::move(beams), n_gates, timestamp);
  } catch (const std::invalid_argument& e) {
    throw io_error(Errc::invalid_header, e.what());
  }
  for (auto& s : cube.samples()) {
    const float re = rd.f32();
    const float im = rd.f32();
    s = cfloat(re, im);
  }
  return cube;
}

inline void write_cube(const std::filesystem::path& path, const IqCube& cube) {
  write_file_atomic(path, encode_cube(cube));
}

inline IqCube read_cube(const std::filesystem::path& path) { return decode_cube(read_file(path)); }

// ---------------------------------------------------------------------------
// Truth sidecar

inline constexpr const char* kTruthHeader = "beam,gate,range_m,Z_dBZ,V_ms,W_ms,L2,rain_power_W,clutter_power_W,blind";

inline std::string encode_truth(const IqCube& cube, const SceneTruth& truth) {
  std::string out = std::string(kTruthHeader) + "\n";
  for (std::size_t b = 0; b < truth.gates.rows(); ++b)
    for (std::size_t m = 0; m < truth.gates.cols(); ++m) {
      const GateTruth& t = truth.gates(b, m);
      out += std::to_string(cube.beams()[b].id) + "," + std::to_string(m) + "," +
             fmt(gate_range(m, cube.range_step())) + "," + fmt(t.z > 0 ? linear_to_db(t.z) : std::nan("")) + "," +
             fmt(t.velocity) + "," + fmt(t.width) + "," + fmt(t.two_way_loss) + "," + fmt(t.rain_power) + "," +
             fmt(t.clutter_power) + "," + (t.blind ? "1" : "0") + "\n";
    }
  return out;
}

// ---------------------------------------------------------------------------
// JSON helpers with field-path diagnostics

inline json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i) line += text[i] == '\n';
    throw io_error(Errc::parse_error, source + ":" + std::to_string(line) + ": " + e.what());
  }
}

inline json load_json(const std::filesystem::path& path) { return parse_json(read_file(path), path.string()); }

class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw io_error(Errc::schema_error, "field '" + name(key) + "': " + what);
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : (key.empty() ? path_ : path_ + "." + key); }
  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) const {
    if (!has(key)) fail(key, "missing");
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
  double positive(const std::string& key) const {
    const double v = number(key);
    if (!(v > 0)) fail(key, "must be positive");
    return v;
  }
  double positive(const std::string& key, double fallback) const { return has(key) ? positive(key) : fallback; }

  std::uint64_t count(const std::string& key) const {
    if (!has(key)) fail(key, "missing");
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) const { return has(key) ? count(key) : fallback; }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) fail(key, "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string string(const std::string& key) const {
    if (!has(key)) fail(key, "missing");
    if (!j_.at(key).is_string()) fail(key, "expected a string");
    return j_.at(key).get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) const { return has(key) ? string(key) : fallback; }

  std::vector<double> numbers(const std::string& key, std::size_t n) const {
    if (!has(key)) fail(key, "missing");
    const auto& v = j_.at(key);
    if (!v.is_array() || v.size() != n) fail(key, "expected an array of " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Fields object(const std::string& key) const {
    if (!has(key)) fail(key, "missing");
    return Fields(j_.at(key), name(key));
  }

  const json& array(const std::string& key) const {
    if (!has(key)) fail(key, "missing");
    if (!j_.at(key).is_array()) fail(key, "expected an array");
    return j_.at(key);
  }

  const json& raw() const { return j_; }

 private:
  const json& j_;
  std::string path_;
};

// ---------------------------------------------------------------------------
// System spec, Z-R coefficients, frame

inline json spec_to_json(const RadarSystemSpec& s) {
  json j{{"name", s.name},
         {"carrier_hz", s.carrier},
         {"peak_power_w", s.peak_power},
         {"noise_figure_db", linear_to_db(s.noise_figure)},
         {"pulse_length_s", s.pulse_length},
         {"bandwidth_hz", s.bandwidth},
         {"max_gain_dbi", linear_to_db(s.max_gain)},
         {"hpbw_az_deg", rad_to_deg(s.hpbw_az)},
         {"hpbw_el_deg", rad_to_deg(s.hpbw_el)},
         {"dielectric_factor", s.dielectric_factor},
         {"range_step_m", s.range_step}};
  if (const auto* ura = std::get_if<UniformRectangularArray>(&s.pattern)) {
    j["pattern"] = {{"type", "ura"}, {"n_az", ura->n_az}, {"n_el", ura->n_el}, {"spacing", ura->spacing}};
  } else if (std::holds_alternative<TabulatedPattern>(s.pattern)) {
    j["pattern"] = {{"type", "tabulated"}};
  } else {
    j["pattern"] = {{"type", "gaussian"}};
  }
  // Exact values next to the readable ones, preferred when reading back.
  j["noise_figure"] = s.noise_figure;
  j["max_gain"] = s.max_gain;
  j["hpbw_az_rad"] = s.hpbw_az;
  j["hpbw_el_rad"] = s.hpbw_el;
  return j;
}

/// A preset name (optional "preset" key, default "bs") with any field
/// overridden.
inline RadarSystemSpec spec_from_json(const json& j, const std::string& path = "system") {
  const Fields f(j, path);
  RadarSystemSpec s;
  const std::string preset = f.string("preset", "bs");
  try {
    s = system_preset(preset);
  } catch (const std::invalid_argument& e) {
    f.fail("preset", e.what());
  }
  s.name = f.string("name", s.name);
  s.carrier = f.positive("carrier_hz", s.carrier);
  s.peak_power = f.positive("peak_power_w", s.peak_power);
  if (f.has("noise_figure_db")) s.noise_figure = db_to_linear(f.number("noise_figure_db"));
  s.noise_figure = f.positive("noise_figure", s.noise_figure);
  s.pulse_length = f.positive("pulse_length_s", s.pulse_length);
  s.bandwidth = f.positive("bandwidth_hz", s.bandwidth);
  if (f.has("max_gain_dbi")) s.max_gain = db_to_linear(f.number("max_gain_dbi"));
  if (f.has("hpbw_az_deg")) s.hpbw_az = deg_to_rad(f.positive("hpbw_az_deg"));
  if (f.has("hpbw_el_deg")) s.hpbw_el = deg_to_rad(f.positive("hpbw_el_deg"));
  s.max_gain = f.positive("max_gain", s.max_gain);
  s.hpbw_az = f.positive("hpbw_az_rad", s.hpbw_az);
  s.hpbw_el = f.positive("hpbw_el_rad", s.hpbw_el);
  s.dielectric_factor = f.positive("dielectric_factor", s.dielectric_factor);
  s.range_step = f.positive("range_step_m", s.range_step);
  s.pattern = GaussianPattern{s.hpbw_az, s.hpbw_el};
  if (f.has("pattern")) {
    const Fields p = f.object("pattern");
    const std::string type = p.string("type", "gaussian");
    if (type == "ura") {
      UniformRectangularArray ura;
      ura.n_az = static_cast<int>(p.count("n_az"));
      ura.n_el = static_cast<int>(p.count("n_el"));
      ura.spacing = p.positive("spacing", 0.5);
      if (ura.n_az < 1 || ura.n_el < 1) p.fail("n_az", "array sizes must be >= 1");
      s.pattern = ura;
    } else if (type != "gaussian") {
      p.fail("type", "unknown pattern type '" + type + "'");
    }
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw io_error(Errc::schema_error, path + ": " + e.what());
  }
  return s;
}

inline json zr_to_json(const ZrCoefficients& c) {
  return {{"a", c.a},
          {"b", c.b},
          {"provenance", to_string(c.provenance)},
          {"n_samples", c.n_samples},
          {"residual_db", c.residual_db}};
}

/// {"preset": "tuned" | "marshall-palmer"} or explicit {"a", "b"}.
inline ZrCoefficients zr_from_json(const json& j, const std::string& path = "zr") {
  const Fields f(j, path);
  if (f.has("preset")) {
    const std::string p = f.string("preset");
    if (p == "tuned") return ZrCoefficients::base_station_tuned();
    if (p == "marshall-palmer") return ZrCoefficients::marshall_palmer();
    f.fail("preset", "unknown Z-R preset '" + p + "'");
  }
  ZrCoefficients c;
  c.a = f.positive("a");
  c.b = f.positive("b");
  c.provenance = provenance_from_string(f.string("provenance", "custom"));
  c.n_samples = f.count("n_samples", 0);
  c.residual_db = f.number("residual_db", 0.0);
  return c;
}

inline FrameTiming frame_from_json(const json& j, const std::string& path = "frame") {
  const Fields f(j, path);
  FrameTiming t;
  t.tau_tx = f.positive("tau_tx_s");
  t.tau_gu = f.positive("tau_gu_s");
  t.tau_rx = f.positive("tau_rx_s");
  t.tau_id = f.positive("tau_id_s");
  t.pulses_per_beam = static_cast<std::uint32_t>(f.count("pulses_per_beam"));
  t.bandwidth = f.positive("bandwidth_hz");
  t.adc_bandwidth = f.positive("adc_bandwidth_hz");
  t.carrier = f.positive("carrier_hz");
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw io_error(Errc::schema_error, path + ": " + e.what());
  }
  return t;
}

inline json frame_to_json(const FrameTiming& t) {
  return {{"tau_tx_s", t.tau_tx},         {"tau_gu_s", t.tau_gu},
          {"tau_rx_s", t.tau_rx},         {"tau_id_s", t.tau_id},
          {"pulses_per_beam", t.pulses_per_beam}, {"bandwidth_hz", t.bandwidth},
          {"adc_bandwidth_hz", t.adc_bandwidth}, {"carrier_hz", t.carrier}};
}

inline json beam_to_json(const BeamGeometry& b) {
  json j{{"id", b.id},
         {"azimuth_deg", rad_to_deg(b.azimuth)},
         {"elevation_deg", rad_to_deg(b.elevation)},
         {"hpbw_az_deg", rad_to_deg(b.hpbw_az)},
         {"hpbw_el_deg", rad_to_deg(b.hpbw_el)},
         {"max_gain", b.max_gain},
         {"site", {b.site.x, b.site.y, b.site.z}}};
  // Radians are stored as well so the geometry round-trips exactly.
  j["azimuth_rad"] = b.azimuth;
  j["elevation_rad"] = b.elevation;
  j["hpbw_az_rad"] = b.hpbw_az;
  j["hpbw_el_rad"] = b.hpbw_el;
  if (b.has_radar_constant()) j["radar_constant"] = b.radar_constant;
  return j;
}

inline BeamGeometry beam_from_json(const json& j, const std::string& path) {
  const Fields f(j, path);
  BeamGeometry b;
  b.id = static_cast<std::uint32_t>(f.count("id"));
  b.azimuth = f.number("azimuth_rad");
  b.elevation = f.number("elevation_rad");
  b.hpbw_az = f.number("hpbw_az_rad");
  b.hpbw_el = f.number("hpbw_el_rad");
  b.max_gain = f.number("max_gain");
  const auto site = f.numbers("site", 3);
  b.site = {site[0], site[1], site[2]};
  if (f.has("radar_constant")) b.radar_constant = f.number("radar_constant");
  return b;
}

// ---------------------------------------------------------------------------
// Chain configuration

inline ChainConfig chain_from_json(const json& j, const std::string& path = "chain") {
  const Fields f(j, path);
  ChainConfig c;
  try {
    c.window = window_from_string(f.string("window", to_string(c.window)));
  } catch (const std::invalid_argument& e) {
    f.fail("window", e.what());
  }
  c.subsample.offset = f.count("offset", c.subsample.offset);
  c.subsample.shift_step = f.count("shift_step", c.subsample.shift_step);
  c.subsample.n_shifts = f.count("n_shifts", c.subsample.n_shifts);
  c.subsample.window_len = f.count("window_len", c.subsample.window_len);
  c.cv_threshold = f.number("cv_threshold", c.cv_threshold);
  if (!(c.cv_threshold >= 0 && c.cv_threshold <= 1)) f.fail("cv_threshold", "must lie in [0, 1]");
  c.filter_clutter = f.boolean("filter_clutter", c.filter_clutter);
  c.min_fit_bins = f.count("min_fit_bins", c.min_fit_bins);
  c.snr_min = f.positive("snr_min", c.snr_min);
  c.correction_factor = f.positive("correction_factor", c.correction_factor);
  if (f.has("fit")) {
    const Fields fit = f.object("fit");
    c.fit.max_iterations = static_cast<int>(fit.count("max_iterations", static_cast<std::uint64_t>(c.fit.max_iterations)));
    c.fit.tolerance = fit.positive("tolerance", c.fit.tolerance);
  }
  if (f.has("zr")) c.zr = zr_from_json(j.at("zr"), f.name("zr"));
  if (f.has("system")) c.spec = spec_from_json(j.at("system"), f.name("system"));
  c.threads = static_cast<unsigned>(f.count("threads", 0));
  return c;
}

inline json chain_to_json(const ChainConfig& c) {
  return {{"window", to_string(c.window)},
          {"offset", c.subsample.offset},
          {"shift_step", c.subsample.shift_step},
          {"n_shifts", c.subsample.n_shifts},
          {"window_len", c.subsample.window_len},
          {"cv_threshold", c.cv_threshold},
          {"filter_clutter", c.filter_clutter},
          {"min_fit_bins", c.min_fit_bins},
          {"snr_min", c.snr_min},
          {"correction_factor", c.correction_factor},
          {"fit", {{"max_iterations", c.fit.max_iterations}, {"tolerance", c.fit.tolerance}}},
          {"zr", zr_to_json(c.zr)},
          {"system", spec_to_json(c.spec)}};
}

// ---------------------------------------------------------------------------
// Products

inline constexpr const char* kProductHeader = "beam,gate,range_m,az_deg,el_deg,Z_dBZ,VD_ms,WD_ms,R_mmh,valid";

inline std::string encode_products(const ProductGrid& grid) {
  std::string out = std::string(kProductHeader) + "\n";
  for (std::size_t b = 0; b < grid.n_beams(); ++b) {
    const BeamGeometry& beam = grid.beams[b];
    for (std::size_t m = 0; m < grid.n_gates; ++m) {
      const GateProduct& g = grid.at(b, m);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out += std::to_string(beam.id) + "," + std::to_string(m) + "," + fmt(gate_range(m, grid.range_step)) + "," +
             fmt(rad_to_deg(beam.azimuth)) + "," + fmt(rad_to_deg(beam.elevation)) + "," +
             fmt(g.valid ? g.dbz() : nan) + "," + fmt(g.valid ? g.velocity : nan) + "," +
             fmt(g.valid ? g.spread : nan) + "," + fmt(g.valid ? g.rain_rate : nan) + "," + (g.valid ? "1" : "0") +
             "\n";
    }
  }
  return out;
}

/// Metadata document written next to a product CSV.
inline json product_metadata(const ProductGrid& grid, const ChainConfig& cfg, const std::string& mask_source,
                             std::optional<double> mask_threshold = std::nullopt) {
  json beams = json::array();
  for (const auto& b : grid.beams) beams.push_back(beam_to_json(b));
  json j{{"version", kVersion},
         {"timestamp", grid.timestamp},
         {"n_gates", grid.n_gates},
         {"range_step_m", grid.range_step},
         {"chain", chain_to_json(cfg)},
         {"mask_source", mask_source},
         {"beams", beams}};
  if (mask_threshold) j["mask_threshold"] = *mask_threshold;
  return j;
}

inline std::filesystem::path metadata_path(const std::filesystem::path& product) {
  auto p = product;
  p += ".json";
  return p;
}

inline void write_products(const std::filesystem::path& path, const ProductGrid& grid, const json& metadata) {
  write_file_atomic(path, encode_products(grid));
  write_file_atomic(metadata_path(path), metadata.dump(2) + "\n");
}

/// Parses a product CSV against its metadata (beam geometry, gate count).
/// Z is held back in linear units from the dBZ column.
inline ProductGrid decode_products(std::string_view csv, const json& metadata, const std::string& source = "products") {
  const Fields meta(metadata, "");
  const json& jbeams = meta.array("beams");
  std::vector<BeamGeometry> beams;
  for (std::size_t i = 0; i < jbeams.size(); ++i) beams.push_back(beam_from_json(jbeams[i], "beams[" + std::to_string(i) + "]"));
  ProductGrid grid(beams, meta.count("n_gates"), meta.number("range_step_m"), meta.number("timestamp"));
  std::map<std::uint32_t, std::size_t> index;
  for (std::size_t i = 0; i < beams.size(); ++i) index[beams[i].id] = i;

  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw io_error(Errc::parse_error, source + ":" + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(in, line) || trim(line) != kProductHeader) {
    lineno = 1;
    fail("unexpected header");
  }
  lineno = 1;
  std::vector<std::uint8_t> seen(grid.n_beams() * grid.n_gates, 0);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 10) fail("expected 10 columns");
    std::vector<double> v(10);
    for (std::size_t i = 0; i < 10; ++i) {
      const auto d = parse_double(cols[i]);
      if (!d) fail("column " + std::to_string(i + 1) + " is not a number");
      v[i] = *d;
    }
    const auto it = index.find(static_cast<std::uint32_t>(v[0]));
    if (it == index.end()) fail("beam id not in metadata");
    if (!(v[1] >= 0 && v[1] < static_cast<double>(grid.n_gates))) fail("gate index out of range");
    const std::size_t b = it->second, m = static_cast<std::size_t>(v[1]);
    GateProduct& g = grid.at(b, m);
    g.valid = v[9] == 1.0;
    if (g.valid) {
      g.reflectivity = db_to_linear(v[5]);
      g.velocity = v[6];
      g.spread = v[7];
      g.rain_rate = v[8];
    }
    seen[b * grid.n_gates + m] = 1;
  }
  for (auto s : seen)
    if (!s) throw io_error(Errc::size_mismatch, source + ": product rows do not cover every (beam, gate)");
  return grid;
}

inline ProductGrid read_products(const std::filesystem::path& path) {
  const json meta = load_json(metadata_path(path));
  return decode_products(read_file(path), meta, path.string());
}

// ---------------------------------------------------------------------------
// Clutter masks and persistency maps: a JSON header line, then one text row
// per (beam, gate).

inline std::string encode_masks(const std::vector<ClutterMask>& masks) {
  if (masks.empty()) throw std::invalid_argument("encode_masks: no masks");
  const auto& first = masks.front();
  json meta{{"kind", to_string(first.kind)},     {"offset", first.offset},
            {"threshold", first.threshold},      {"n_beams", masks.size()},
            {"n_gates", first.n_gates()},        {"n_bins", first.n_bins()}};
  std::string out = meta.dump() + "\n";
  for (const auto& m : masks) {
    if (!m.mask.same_shape(first.mask)) throw std::invalid_argument("encode_masks: shape mismatch");
    for (std::size_t r = 0; r < m.n_gates(); ++r) {
      for (std::size_t c = 0; c < m.n_bins(); ++c) out.push_back(m.mask(r, c) ? '1' : '0');
      out.push_back('\n');
    }
  }
  return out;
}

inline std::vector<ClutterMask> decode_masks(std::string_view text, const std::string& source = "mask") {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw io_error(Errc::truncated, source + ": empty mask file");
  const json meta = parse_json(line, source);
  const Fields f(meta, "");
  const std::string kind = f.string("kind");
  if (kind != "cv" && kind != "persistency") f.fail("kind", "expected 'cv' or 'persistency'");
  const auto nb = f.count("n_beams"), ng = f.count("n_gates"), nk = f.count("n_bins");
  std::vector<ClutterMask> out(nb);
  std::size_t lineno = 1;
  for (auto& m : out) {
    m.kind = kind == "cv" ? MaskKind::cv_driven : MaskKind::persistency_driven;
    m.offset = f.count("offset");
    m.threshold = f.number("threshold");
    m.mask = Grid2<std::uint8_t>(ng, nk, 1);
    for (std::size_t r = 0; r < ng; ++r) {
      ++lineno;
      if (!std::getline(in, line)) throw io_error(Errc::truncated, source + ": fewer mask rows than declared");
      const std::string row = trim(line);
      if (row.size() != nk) throw io_error(Errc::size_mismatch, source + ":" + std::to_string(lineno) + ": row length");
      for (std::size_t c = 0; c < nk; ++c) {
        if (row[c] != '0' && row[c] != '1')
          throw io_error(Errc::parse_error, source + ":" + std::to_string(lineno) + ": mask entries must be 0 or 1");
        m.mask(r, c) = row[c] == '1';
      }
    }
  }
  while (std::getline(in, line))
    if (!trim(line).empty()) throw io_error(Errc::size_mismatch, source + ": more mask rows than declared");
  return out;
}

inline void write_masks(const std::filesystem::path& path, const std::vector<ClutterMask>& masks) {
  write_file_atomic(path, encode_masks(masks));
}
inline std::vector<ClutterMask> read_masks(const std::filesystem::path& path) {
  return decode_masks(read_file(path), path.string());
}

inline std::string encode_persistency(const std::vector<PersistencyMap>& maps) {
  if (maps.empty()) throw std::invalid_argument("encode_persistency: no maps");
  const auto& first = maps.front();
  json meta{{"n_scenes", first.n_scenes},       {"window_seconds", first.window_seconds},
            {"offset", first.offset},           {"n_beams", maps.size()},
            {"n_gates", first.counts.rows()},   {"n_bins", first.counts.cols()}};
  std::string out = meta.dump() + "\n";
  for (const auto& m : maps) {
    if (!m.counts.same_shape(first.counts)) throw std::invalid_argument("encode_persistency: shape mismatch");
    for (std::size_t r = 0; r < m.counts.rows(); ++r) {
      for (std::size_t c = 0; c < m.counts.cols(); ++c) {
        if (c) out.push_back(' ');
        out += std::to_string(m.counts(r, c));
      }
      out.push_back('\n');
    }
  }
  return out;
}

inline std::vector<PersistencyMap> decode_persistency(std::string_view text, const std::string& source = "persistency") {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw io_error(Errc::truncated, source + ": empty persistency file");
  const json meta = parse_json(line, source);
  const Fields f(meta, "");
  const auto nb = f.count("n_beams"), ng = f.count("n_gates"), nk = f.count("n_bins");
  std::vector<PersistencyMap> out(nb);
  std::size_t lineno = 1;
  for (auto& m : out) {
    m.n_scenes = static_cast<std::uint32_t>(f.count("n_scenes"));
    m.window_seconds = f.number("window_seconds");
    m.offset = f.count("offset");
    m.counts = Grid2<std::uint32_t>(ng, nk, 0);
    for (std::size_t r = 0; r < ng; ++r) {
      ++lineno;
      if (!std::getline(in, line)) throw io_error(Errc::truncated, source + ": fewer rows than declared");
      const std::string row = trim(line);
      const auto cols = split(row, ' ');
      if (cols.size() != nk) throw io_error(Errc::size_mismatch, source + ":" + std::to_string(lineno) + ": row length");
      for (std::size_t c = 0; c < nk; ++c) {
        std::uint32_t v = 0;
        const auto res = std::from_chars(cols[c].data(), cols[c].data() + cols[c].size(), v);
        if (res.ec != std::errc{} || res.ptr != cols[c].data() + cols[c].size() || v > m.n_scenes)
          throw io_error(Errc::parse_error, source + ":" + std::to_string(lineno) + ": bad count");
        m.counts(r, c) = v;
      }
    }
  }
  while (std::getline(in, line))
    if (!trim(line).empty()) throw io_error(Errc::size_mismatch, source + ": more rows than declared");
  return out;
}

inline void write_persistency(const std::filesystem::path& path, const std::vector<PersistencyMap>& maps) {
  write_file_atomic(path, encode_persistency(maps));
}
inline std::vector<PersistencyMap> read_persistency(const std::filesystem::path& path) {
  return decode_persistency(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Disdrometer records

inline constexpr const char* kDsdHeader = "timestamp,site,altitude_m,D_center_mm,dD_mm,N_per_m3_per_mm";

struct Diagnostic {
  std::size_t line = 0;
  std::string message;
};

struct DsdIngest {
  std::vector<DsdRecord> records;
  std::vector<Diagnostic> diagnostics;
  std::vector<std::string> warnings;
};

/// Rows are grouped into records by (timestamp, site) in order of first
/// appearance. A malformed row rejects its whole record with a diagnostic
/// naming the line.
inline DsdIngest decode_dsd(std::string_view text) {
  DsdIngest out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  struct Group {
    DsdRecord rec;
    std::optional<Diagnostic> error;
  };
  std::vector<Group> groups;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      if (t != kDsdHeader) throw io_error(Errc::parse_error, "line " + std::to_string(lineno) + ": bad header");
      header = true;
      continue;
    }
    const auto cols = split(t, ',');
    const std::string ts = cols.empty() ? "" : trim(cols[0]);
    const std::string site = cols.size() > 1 ? trim(cols[1]) : "";
    const auto key = std::make_pair(ts, site);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      groups.emplace_back();
    }
    Group& g = groups[it->second];
    if (g.error) continue;
    auto reject = [&](const std::string& msg) { g.error = Diagnostic{lineno, msg}; };
    if (cols.size() != 6) {
      reject("expected 6 columns, found " + std::to_string(cols.size()));
      continue;
    }
    std::optional<double> vals[4];
    const auto stamp = parse_double(cols[0]);
    for (int i = 0; i < 4; ++i) vals[i] = parse_double(cols[2 + static_cast<std::size_t>(i)]);
    if (!stamp || !vals[0] || !vals[1] || !vals[2] || !vals[3]) {
      reject("non-numeric field");
      continue;
    }
    if (site.empty()) {
      reject("empty site id");
      continue;
    }
    const double alt = *vals[0], d = *vals[1], dd = *vals[2], n = *vals[3];
    if (!(d > 0) || !(dd > 0)) {
      reject("diameter and bin width must be positive");
      continue;
    }
    if (!(n >= 0)) {
      reject("negative concentration");
      continue;
    }
    if (!(alt >= -430.0)) {
      reject("altitude below -430 m");
      continue;
    }
    DsdRecord& r = g.rec;
    if (r.diameters.empty()) {
      r.timestamp = *stamp;
      r.site_id = site;
      r.altitude = alt;
    } else if (alt != r.altitude) {
      reject("altitude changes within a record");
      continue;
    } else if (!(d > r.diameters.back())) {
      reject("diameter bins not strictly increasing");
      continue;
    }
    r.diameters.push_back(d);
    r.widths.push_back(dd);
    r.concentrations.push_back(n);
  }
  if (!header) out.warnings.push_back("empty disdrometer file");
  for (auto& g : groups) {
    if (g.error) {
      out.diagnostics.push_back(*g.error);
      continue;
    }
    out.records.push_back(std::move(g.rec));
  }
  return out;
}

inline DsdIngest read_dsd(const std::filesystem::path& path) { return decode_dsd(read_file(path)); }

inline std::string encode_dsd(const std::vector<DsdRecord>& records) {
  std::string out = std::string(kDsdHeader) + "\n";
  for (const auto& r : records) {
    r.validate();
    if (r.site_id.empty() || r.site_id.find_first_of(",\n") != std::string::npos)
      throw std::invalid_argument("encode_dsd: site id must be non-empty without commas or newlines");
    for (std::size_t i = 0; i < r.size(); ++i)
      out += fmt(r.timestamp) + "," + r.site_id + "," + fmt(r.altitude) + "," + fmt(r.diameters[i]) + "," +
             fmt(r.widths[i]) + "," + fmt(r.concentrations[i]) + "\n";
  }
  return out;
}

inline void write_dsd(const std::filesystem::path& path, const std::vector<DsdRecord>& records) {
  write_file_atomic(path, encode_dsd(records));
}

// ---------------------------------------------------------------------------
// Scattering tables: "# frequency_hz=<f> polarization=<p>" then rows
// "D_mm, sigma_b_mm2, sigma_e_mm2".

inline ScatteringTable decode_scattering_table(std::string_view text, const std::string& source = "table") {
  ScatteringTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool have_freq = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty()) continue;
    const auto where = source + ":" + std::to_string(lineno) + ": ";
    if (s.front() == '#') {
      std::istringstream hs(s.substr(1));
      std::string tok;
      while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "frequency_hz") {
          const auto f = parse_double(val);
          if (!f || !(*f > 0)) throw io_error(Errc::parse_error, where + "bad frequency");
          t.frequency = *f;
          have_freq = true;
        } else if (key == "polarization") {
          t.polarization = val;
        }
      }
      continue;
    }
    const auto cols = split(s, ',');
    if (cols.size() != 3) throw io_error(Errc::parse_error, where + "expected 3 columns");
    const auto d = parse_double(cols[0]), sb = parse_double(cols[1]), se = parse_double(cols[2]);
    if (!d || !sb || !se) throw io_error(Errc::parse_error, where + "non-numeric field");
    t.diameters.push_back(*d);
    t.backscatter.push_back(*sb);
    t.extinction.push_back(*se);
  }
  if (!have_freq) throw io_error(Errc::parse_error, source + ": missing frequency_hz header");
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw io_error(Errc::schema_error, source + ": " + e.what());
  }
  return t;
}

inline ScatteringTable read_scattering_table(const std::filesystem::path& path) {
  return decode_scattering_table(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Scene configuration

struct SiteConfig {
  Vec3 position;
  double first_azimuth = 0.0;  // rad
  double azimuth_step = 0.0;
  std::size_t n_beams = 1;
  double elevation = 0.0;
  std::uint32_t first_id = 0;
};

struct SceneConfig {
  std::uint64_t seed = 1;
  double timestamp = 0.0;
  double sweep_interval = 60.0;  // s between successive sweeps
  FrameTiming frame;
  RadarSystemSpec system = system_preset("bs");
  std::size_t n_gates = 64;
  std::vector<SiteConfig> sites;
  std::string rain_type = "uniform";  // none | uniform | field
  RainFieldConfig rain_field;
  double uniform_dbz = 35.0, uniform_width = 1.0, uniform_u = 0.0, uniform_v = 0.0, uniform_ke = 0.0;
  ClutterScene clutter;
  std::vector<std::size_t> clutter_gate_sites;  // site of each clutter.gates entry
  std::optional<CommonGrid> common_grid;

  std::vector<BeamGeometry> beams(std::size_t site) const {
    if (site >= sites.size()) throw std::invalid_argument("scene: site index out of range");
    const SiteConfig& s = sites[site];
    return sector_beams(s.position, s.first_azimuth, s.azimuth_step, s.n_beams, s.elevation, system.hpbw_az,
                        system.hpbw_el, system.max_gain, s.first_id);
  }

  RainField field() const {
    if (rain_type == "field") return generate_rain_field(rain_field);
    if (rain_type == "uniform") return uniform_rain_field(uniform_dbz, uniform_width, uniform_u, uniform_v, uniform_ke);
    return uniform_rain_field(-std::numeric_limits<double>::infinity(), 0.0);
  }

  ClutterScene clutter_for(std::size_t site) const {
    ClutterScene c;
    c.points = clutter.points;
    for (std::size_t i = 0; i < clutter.gates.size(); ++i)
      if (clutter_gate_sites[i] == site) c.gates.push_back(clutter.gates[i]);
    return c;
  }

  SiteGeometry geometry(std::size_t site) const { return {beams(site), n_gates, frame.range_step()}; }
};

inline SceneConfig scene_from_json(const json& j) {
  const Fields f(j, "");
  SceneConfig s;
  s.seed = f.count("seed", s.seed);
  s.timestamp = f.number("timestamp", 0.0);
  s.sweep_interval = f.positive("sweep_interval_s", s.sweep_interval);
  s.frame = frame_from_json(j.contains("frame") ? j.at("frame") : json(), "frame");
  if (f.has("system")) s.system = spec_from_json(j.at("system"), "system");
  s.n_gates = f.count("n_gates", s.n_gates);
  if (s.n_gates == 0 || s.n_gates > s.frame.max_gates())
    f.fail("n_gates", "must lie in [1, " + std::to_string(s.frame.max_gates()) + "]");
  const json& sites = f.array("sites");
  if (sites.empty()) f.fail("sites", "at least one site required");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const Fields sf(sites[i], "sites[" + std::to_string(i) + "]");
    SiteConfig sc;
    const auto p = sf.numbers("position_m", 3);
    sc.position = {p[0], p[1], p[2]};
    sc.first_azimuth = deg_to_rad(sf.number("first_azimuth_deg", 0.0));
    sc.azimuth_step = deg_to_rad(sf.number("azimuth_step_deg", 0.0));
    sc.n_beams = sf.count("n_beams", 1);
    if (sc.n_beams == 0) sf.fail("n_beams", "must be >= 1");
    sc.elevation = deg_to_rad(sf.number("elevation_deg", 0.0));
    sc.first_id = static_cast<std::uint32_t>(sf.count("first_id", 0));
    s.sites.push_back(sc);
  }
  if (f.has("rain")) {
    const Fields r = f.object("rain");
    s.rain_type = r.string("type", "uniform");
    if (s.rain_type == "uniform") {
      s.uniform_dbz = r.number("dbz", s.uniform_dbz);
      s.uniform_width = r.number("width_ms", s.uniform_width);
      if (r.has("wind_ms")) {
        const auto w = r.numbers("wind_ms", 2);
        s.uniform_u = w[0], s.uniform_v = w[1];
      }
      s.uniform_ke = r.number("ke_per_m", 0.0);
      if (s.uniform_width < 0 || s.uniform_ke < 0) r.fail("width_ms", "width and k_e must be non-negative");
    } else if (s.rain_type == "field") {
      RainFieldConfig& c = s.rain_field;
      c.seed = r.count("seed", s.seed);
      c.nx = r.count("nx", c.nx);
      c.ny = r.count("ny", c.ny);
      c.spacing = r.positive("spacing_m", c.spacing);
      if (r.has("origin_m")) {
        const auto o = r.numbers("origin_m", 2);
        c.x0 = o[0], c.y0 = o[1];
      }
      c.correlation_length = r.positive("correlation_length_m", c.correlation_length);
      c.mean_dbz = r.number("mean_dbz", c.mean_dbz);
      c.sd_dbz = r.number("sd_dbz", c.sd_dbz);
      if (r.has("advection_ms")) {
        const auto a = r.numbers("advection_ms", 2);
        c.advection_u = a[0], c.advection_v = a[1];
      }
      c.width = r.number("width_ms", c.width);
      c.ke_coeff = r.number("ke_coeff", c.ke_coeff);
      c.ke_exponent = r.number("ke_exponent", c.ke_exponent);
      if (c.sd_dbz < 0 || c.width < 0 || c.ke_coeff < 0) r.fail("sd_dbz", "spreads and coefficients must be non-negative");
      if (!(c.correlation_length > c.spacing)) r.fail("correlation_length_m", "must exceed the grid spacing");
    } else if (s.rain_type != "none") {
      r.fail("type", "expected 'none', 'uniform' or 'field'");
    }
  }
  if (f.has("clutter")) {
    const Fields c = f.object("clutter");
    if (c.has("points")) {
      const json& pts = c.array("points");
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const Fields pf(pts[i], "clutter.points[" + std::to_string(i) + "]");
        ClutterPoint p;
        const auto pos = pf.numbers("position_m", 3);
        p.position = {pos[0], pos[1], pos[2]};
        p.rcs = pf.number("rcs_m2");
        p.jitter = pf.number("jitter_rad", 0.01);
        if (p.rcs < 0 || p.jitter < 0) pf.fail("rcs_m2", "RCS and jitter must be non-negative");
        s.clutter.points.push_back(p);
      }
    }
    if (c.has("gates")) {
      const json& gs = c.array("gates");
      for (std::size_t i = 0; i < gs.size(); ++i) {
        const Fields gf(gs[i], "clutter.gates[" + std::to_string(i) + "]");
        GateClutter g;
        const std::size_t site = gf.count("site", 0);
        if (site >= s.sites.size()) gf.fail("site", "no such site");
        g.beam = gf.count("beam");
        g.gate = gf.count("gate");
        if (g.beam >= s.sites[site].n_beams) gf.fail("beam", "beam index out of range");
        if (g.gate >= s.n_gates) gf.fail("gate", "gate index out of range");
        g.power = gf.number("power_w");
        g.jitter = gf.number("jitter_rad", 0.01);
        if (g.power < 0 || g.jitter < 0) gf.fail("power_w", "power and jitter must be non-negative");
        s.clutter.gates.push_back(g);
        s.clutter_gate_sites.push_back(site);
      }
    }
  }
  if (f.has("common_grid")) {
    const Fields g = f.object("common_grid");
    CommonGrid cg;
    const auto o = g.numbers("origin_m", 2);
    cg.x0 = o[0], cg.y0 = o[1];
    cg.nx = g.count("nx");
    cg.ny = g.count("ny");
    cg.spacing = g.positive("spacing_m");
    s.common_grid = cg;
  }
  return s;
}

inline SceneConfig read_scene(const std::filesystem::path& path) { return scene_from_json(load_json(path)); }

}  // namespace bswrm::io
