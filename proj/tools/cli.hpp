#pragma once

// Command-line surface. run() is separate from main() so tests can drive it.
// Exit codes: 0 success, 2 bad input, 3 processing failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bswrm/bswrm.hpp"

namespace bswrm::cli {

inline constexpr int kOk = 0;
inline constexpr int kBadInput = 2;
inline constexpr int kProcessingFailure = 3;

namespace fs = std::filesystem;

/// Either a preset name ("s-band", "c-band", "x-band", "bs") or a JSON file.
inline RadarSystemSpec load_system(const std::string& arg) {
  if (fs::exists(arg)) return io::spec_from_json(io::load_json(arg), arg);
  return system_preset(arg);
}

inline ZrCoefficients zr_from_args(const std::string& preset, std::optional<double> a, std::optional<double> b,
                                   const ZrCoefficients& fallback) {
  ZrCoefficients c = fallback;
  if (preset == "tuned") c = ZrCoefficients::base_station_tuned();
  else if (preset == "marshall-palmer") c = ZrCoefficients::marshall_palmer();
  else if (!preset.empty()) throw std::invalid_argument("unknown Z-R preset: " + preset);
  if (a || b) {
    if (!(a && b)) throw std::invalid_argument("--zr-a and --zr-b must be given together");
    c = {*a, *b, ZrProvenance::custom, 0, 0.0};
    c.validate();
  }
  return c;
}

struct SimulateArgs {
  std::string scene, output, truth;
  std::optional<std::uint64_t> seed;
  std::size_t site = 0, sweep = 0;
  unsigned threads = 0;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  io::SceneConfig scene = io::read_scene(a.scene);
  const std::uint64_t seed = a.seed.value_or(scene.seed);
  if (a.site >= scene.sites.size()) throw std::invalid_argument("--site: scene has " + std::to_string(scene.sites.size()) + " site(s)");
  const RainField field = scene.field();
  SynthesisOptions opt;
  opt.seed = stream_seed(seed, a.site);
  opt.time = static_cast<double>(a.sweep) * scene.sweep_interval;
  opt.timestamp = scene.timestamp + opt.time;
  opt.threads = a.threads;
  opt.rain = scene.rain_type != "none";
  const auto syn = synthesize_iq(field, scene.clutter_for(a.site), scene.system, scene.frame, scene.beams(a.site),
                                 scene.n_gates, opt);
  const std::string truth = a.truth.empty() ? a.output + ".truth.csv" : a.truth;
  const std::string encoded = io::encode_cube(syn.cube);
  const std::string truth_text = io::encode_truth(syn.cube, syn.truth);
  io::write_file_atomic(a.output, encoded);
  io::write_file_atomic(truth, truth_text);
  out << "wrote " << a.output << " (" << syn.cube.n_beams() << " beams, " << syn.cube.n_pulses() << " pulses, "
      << syn.cube.n_gates() << " gates) and " << truth << "\n";
  return kOk;
}

struct ChainArgs {
  std::string config;
  std::string window;
  std::optional<std::size_t> offset;
  std::optional<double> cv_threshold;
  std::string zr_preset;
  std::optional<double> zr_a, zr_b;
  bool no_filter = false;
  unsigned threads = 0;
};

inline ChainConfig chain_from_args(const ChainArgs& a) {
  ChainConfig cfg = a.config.empty() ? ChainConfig{} : io::chain_from_json(io::load_json(a.config));
  if (!a.window.empty()) cfg.window = window_from_string(a.window);
  if (a.offset) cfg.subsample.offset = *a.offset;
  if (a.cv_threshold) cfg.cv_threshold = *a.cv_threshold;
  cfg.zr = zr_from_args(a.zr_preset, a.zr_a, a.zr_b, cfg.zr);
  if (a.no_filter) cfg.filter_clutter = false;
  if (a.threads) cfg.threads = a.threads;
  return cfg;
}

struct ProcessArgs {
  std::string cube, mask, output;
  ChainArgs chain;
};

inline int cmd_process(const ProcessArgs& a, std::ostream& out) {
  const ChainConfig cfg = chain_from_args(a.chain);
  const IqCube cube = io::read_cube(a.cube);
  std::optional<std::vector<ClutterMask>> masks;
  std::string source = cfg.filter_clutter ? "cv" : "none";
  std::optional<double> threshold;
  if (!a.mask.empty()) {
    masks = io::read_masks(a.mask);
    source = to_string(masks->front().kind);
    threshold = masks->front().threshold;
  } else if (cfg.filter_clutter) {
    threshold = cfg.cv_threshold;
  }
  const ProductGrid grid = process_sweep(cube, cfg, masks ? &*masks : nullptr);
  io::write_products(a.output, grid, io::product_metadata(grid, cfg, source, threshold));
  std::size_t valid = 0;
  for (const auto& g : grid.gates.data()) valid += g.valid;
  out << "wrote " << a.output << " (" << valid << " of " << grid.gates.size() << " gates valid)\n";
  return kOk;
}

struct ClutterMapArgs {
  std::vector<std::string> cubes, calibration;
  std::string output, persistency;
  double quantile = 0.95;
  std::optional<double> threshold;
  ChainArgs chain;
};

inline std::vector<PersistencyMap> persistency_of(const std::vector<std::string>& paths, const ChainConfig& cfg) {
  std::vector<std::vector<ClutterMask>> per_beam;
  double span_seconds = 0.0;
  std::optional<double> t0, t1;
  for (const auto& p : paths) {
    const IqCube cube = io::read_cube(p);
    const auto masks = cv_masks(cube, cfg);
    if (per_beam.empty()) per_beam.resize(masks.size());
    if (masks.size() != per_beam.size()) throw std::invalid_argument("clutter-map: cubes differ in beam count");
    for (std::size_t b = 0; b < masks.size(); ++b) per_beam[b].push_back(masks[b]);
    t0 = std::min(t0.value_or(cube.timestamp()), cube.timestamp());
    t1 = std::max(t1.value_or(cube.timestamp() + cube.sweep_period()), cube.timestamp() + cube.sweep_period());
  }
  if (t0 && t1) span_seconds = *t1 - *t0;
  std::vector<PersistencyMap> maps;
  for (const auto& m : per_beam) maps.push_back(accumulate_persistency(m, span_seconds));
  return maps;
}

inline int cmd_clutter_map(const ClutterMapArgs& a, std::ostream& out) {
  const ChainConfig cfg = chain_from_args(a.chain);
  const auto maps = persistency_of(a.cubes, cfg);
  double threshold = 0.0;
  if (a.threshold) {
    threshold = *a.threshold;
  } else {
    const auto calib = a.calibration.empty() ? maps : persistency_of(a.calibration, cfg);
    PersistencyMap all;
    for (const auto& m : calib) {
      PersistencyMap one = m;
      one.n_scenes = 1;  // stack beams as rows, the quantile only needs the counts
      if (all.counts.size() == 0) {
        all = one;
      } else {
        Grid2<std::uint32_t> stacked(all.counts.rows() + one.counts.rows(), one.counts.cols());
        std::copy(all.counts.data().begin(), all.counts.data().end(), stacked.data().begin());
        std::copy(one.counts.data().begin(), one.counts.data().end(),
                  stacked.data().begin() + static_cast<long>(all.counts.size()));
        all.counts = std::move(stacked);
      }
    }
    const double q = persistency_threshold(all, a.quantile);
    // Calibrated on a set of possibly different size: express as a fraction.
    const double scale = static_cast<double>(maps.front().n_scenes) / static_cast<double>(calib.front().n_scenes);
    threshold = q * scale;
  }
  std::vector<ClutterMask> masks;
  for (const auto& m : maps) masks.push_back(persistency_mask(m, threshold));
  const std::string mask_text = io::encode_masks(masks);
  if (!a.persistency.empty()) io::write_file_atomic(a.persistency, io::encode_persistency(maps));
  io::write_file_atomic(a.output, mask_text);
  std::size_t flagged = 0;
  for (const auto& m : masks) flagged += m.clutter_count();
  out << "wrote " << a.output << " (" << maps.front().n_scenes << " scenes, threshold " << io::fmt(threshold) << ", "
      << flagged << " clutter bins)\n";
  return kOk;
}

struct FitZrArgs {
  std::string dsd, output, table;
  double noise_db = 1.0, altitude = 0.0, d_min = 0.1, d_max = 8.0;
  std::uint64_t seed = 1;
};

inline int cmd_fit_zr(const FitZrArgs& a, std::ostream& out, std::ostream& err) {
  const auto ingest = io::read_dsd(a.dsd);
  for (const auto& w : ingest.warnings) err << "warning: " << w << "\n";
  for (const auto& d : ingest.diagnostics) err << a.dsd << ":" << d.line << ": " << d.message << "\n";
  if (ingest.records.empty()) throw std::invalid_argument("no valid disdrometer records");
  ZrTuningOptions opt;
  opt.noise_db = a.noise_db;
  opt.altitude = a.altitude;
  opt.d_min = a.d_min;
  opt.d_max = a.d_max;
  opt.seed = a.seed;
  if (!a.table.empty()) opt.table = io::read_scattering_table(a.table);
  const auto res = tune_zr(ingest.records, opt);
  if (res.bins_dropped > 0)
    err << "warning: " << res.bins_dropped << " non-empty bins outside [" << a.d_min << ", " << a.d_max
        << "] mm dropped\n";
  io::json doc = io::zr_to_json(res.coefficients);
  doc["records_used"] = res.records_used;
  doc["records_skipped"] = res.records_skipped;
  doc["records_rejected"] = ingest.diagnostics.size();
  doc["noise_db"] = a.noise_db;
  doc["altitude_m"] = a.altitude;
  doc["seed"] = a.seed;
  doc["version"] = kVersion;
  const std::string text = doc.dump(2) + "\n";
  if (a.output.empty()) out << text;
  else io::write_file_atomic(a.output, text);
  return kOk;
}

struct SensitivityArgs {
  std::vector<std::string> systems{"s-band", "c-band", "x-band", "bs"};
  std::vector<double> ranges;
  double r_start = 1000.0, r_stop = 100000.0, r_step = 1000.0;
  std::string zr_preset;
  std::optional<double> zr_a, zr_b;
  double snr_min = 1.0;
  bool antenna_correction = false;
  std::string output;
};

inline int cmd_sensitivity(const SensitivityArgs& a, std::ostream& out) {
  std::vector<double> ranges = a.ranges;
  if (ranges.empty()) {
    if (!(a.r_step > 0 && a.r_start > 0 && a.r_stop >= a.r_start)) throw std::invalid_argument("invalid range grid");
    const auto n = static_cast<std::size_t>(std::floor((a.r_stop - a.r_start) / a.r_step * (1 + 1e-12))) + 1;
    for (std::size_t i = 0; i < n; ++i) ranges.push_back(a.r_start + static_cast<double>(i) * a.r_step);
  }
  const ZrCoefficients zr = zr_from_args(a.zr_preset, a.zr_a, a.zr_b, ZrCoefficients::marshall_palmer());
  std::string text = "system,range_m,MDZ_dBZ,MDR_mmh\n";
  for (const auto& name : a.systems) {
    const RadarSystemSpec s = load_system(name);
    const double f = a.antenna_correction ? antenna_correction_factor(s.pattern, s.hpbw_az, s.hpbw_el) : 1.0;
    const double c = radar_constant(s, f);
    for (const auto& p : mdz(s, c, ranges, zr, a.snr_min))
      text += s.name + "," + io::fmt(p.range) + "," + io::fmt(p.mdz_dbz) + "," + io::fmt(p.mdr_mmh) + "\n";
  }
  if (a.output.empty()) out << text;
  else io::write_file_atomic(a.output, text);
  return kOk;
}

struct CompareArgs {
  std::vector<std::string> a, b;
  std::string scene;
  std::vector<double> grid;  // x0, y0, nx, ny, spacing
  std::optional<double> tolerance;
  std::string output, cells;
};

inline int cmd_compare(const CompareArgs& args, std::ostream& out) {
  std::vector<ProductGrid> ga, gb;
  for (const auto& p : args.a) ga.push_back(io::read_products(p));
  for (const auto& p : args.b) gb.push_back(io::read_products(p));
  CommonGrid grid;
  if (!args.grid.empty()) {
    if (args.grid.size() != 5) throw std::invalid_argument("--grid expects x0 y0 nx ny spacing");
    grid = {args.grid[0], args.grid[1], static_cast<std::size_t>(args.grid[2]), static_cast<std::size_t>(args.grid[3]),
            args.grid[4]};
  } else if (!args.scene.empty()) {
    const auto scene = io::read_scene(args.scene);
    if (!scene.common_grid) throw std::invalid_argument("scene has no common_grid");
    grid = *scene.common_grid;
  } else {
    throw std::invalid_argument("compare needs --grid or --scene");
  }
  const SiteGeometry sa{ga.front().beams, ga.front().n_gates, ga.front().range_step};
  const SiteGeometry sb{gb.front().beams, gb.front().n_gates, gb.front().range_step};
  const auto pairing = project_two_sites(sa, sb, grid);
  double tol = 0.0;
  if (args.tolerance) {
    tol = *args.tolerance;
  } else {
    if (ga.size() < 2) throw std::invalid_argument("--tolerance required with a single sweep per site");
    tol = std::abs(ga[1].timestamp - ga[0].timestamp) / 2.0;
  }
  const auto rep = compare_sites(ga, gb, pairing, tol);
  io::json j{{"version", kVersion},
             {"n_paired_cells", pairing.size()},
             {"n_aligned", rep.n_aligned},
             {"n_dropped", rep.n_dropped},
             {"tolerance_s", tol},
             {"median_a", rep.median_a},
             {"median_b", rep.median_b},
             {"times", rep.times}};
  j["correlation"] = rep.correlation ? io::json(*rep.correlation) : io::json(nullptr);
  j["median_dz_db"] = std::isfinite(rep.median_dz_db) ? io::json(rep.median_dz_db) : io::json(nullptr);
  j["same_sign_fraction"] = std::isfinite(rep.same_sign_fraction) ? io::json(rep.same_sign_fraction) : io::json(nullptr);
  std::string cells = "ix,iy,timestamp,dZ_dB,dV_ms,opposite_velocity\n";
  for (const auto& c : rep.cells)
    cells += std::to_string(c.ix) + "," + std::to_string(c.iy) + "," + io::fmt(c.timestamp) + "," + io::fmt(c.dz_db) +
             "," + io::fmt(c.dv) + "," + (c.opposite_velocity ? "1" : "0") + "\n";
  if (!args.cells.empty()) io::write_file_atomic(args.cells, cells);
  if (args.output.empty()) out << j.dump(2) << "\n";
  else io::write_file_atomic(args.output, j.dump(2) + "\n");
  return kOk;
}

inline void add_chain_options(CLI::App* app, ChainArgs& c) {
  app->add_option("--config", c.config, "Chain configuration (JSON)")->check(CLI::ExistingFile);
  app->add_option("--window", c.window, "Doppler window: rectangular, blackman, blackman-nuttall");
  app->add_option("--offset", c.offset, "Sub-sampling offset o (even)");
  app->add_option("--cv-threshold", c.cv_threshold, "Circular-variance threshold");
  app->add_option("--zr", c.zr_preset, "Z-R preset: tuned, marshall-palmer");
  app->add_option("--zr-a", c.zr_a, "Z-R coefficient a");
  app->add_option("--zr-b", c.zr_b, "Z-R exponent b");
  app->add_flag("--no-clutter-filter", c.no_filter, "Skip in-line clutter masks");
  app->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Base-station weather radar processing chain", "bswrm"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Synthesize an I/Q cube and its truth sidecar from a scene");
  s->add_option("--scene", sim.scene, "Scene configuration (JSON)")->required()->check(CLI::ExistingFile);
  s->add_option("--seed", sim.seed, "Override the scene seed");
  s->add_option("--site", sim.site, "Site index");
  s->add_option("--sweep", sim.sweep, "Sweep index (advects the field by sweep * interval)");
  s->add_option("-o,--output", sim.output, "Output cube")->required();
  s->add_option("--truth", sim.truth, "Truth CSV (default <output>.truth.csv)");
  s->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");

  ProcessArgs proc;
  auto* p = app.add_subcommand("process", "Run the processing chain on a cube");
  p->add_option("--cube", proc.cube, "Input cube")->required();
  p->add_option("--mask", proc.mask, "Precomputed clutter mask file");
  p->add_option("-o,--output", proc.output, "Product CSV (metadata goes to <output>.json)")->required();
  add_chain_options(p, proc.chain);

  ClutterMapArgs cm;
  auto* c = app.add_subcommand("clutter-map", "Accumulate persistency over cubes and emit a mask");
  c->add_option("--cubes", cm.cubes, "Input cubes")->required()->expected(1, -1);
  c->add_option("--calibration", cm.calibration, "Clutter-only cubes for the threshold quantile")->expected(1, -1);
  c->add_option("--quantile", cm.quantile, "Quantile of the calibration counts")->check(CLI::Range(0.0, 1.0));
  c->add_option("--threshold", cm.threshold, "Explicit persistency threshold (counts)");
  c->add_option("--persistency", cm.persistency, "Also write the persistency counts");
  c->add_option("-o,--output", cm.output, "Output mask file")->required();
  add_chain_options(c, cm.chain);

  FitZrArgs fz;
  auto* f = app.add_subcommand("fit-zr", "Tune Z-R coefficients on disdrometer records");
  f->add_option("--dsd", fz.dsd, "Disdrometer CSV")->required();
  f->add_option("--table", fz.table, "Scattering table (Rayleigh when omitted)");
  f->add_option("--noise-db", fz.noise_db, "St. dev. of the Gaussian dB noise on Z")->check(CLI::NonNegativeNumber);
  f->add_option("--altitude", fz.altitude, "Common altitude (m)");
  f->add_option("--d-min", fz.d_min, "Smallest diameter used (mm)");
  f->add_option("--d-max", fz.d_max, "Largest diameter used (mm)");
  f->add_option("--seed", fz.seed, "Noise seed");
  f->add_option("-o,--output", fz.output, "Coefficient document (stdout when omitted)");

  SensitivityArgs sa;
  auto* se = app.add_subcommand("sensitivity", "MDZ / MDR table per system");
  se->add_option("--system", sa.systems, "Preset name or JSON spec, repeatable")->expected(1, -1);
  se->add_option("--range", sa.ranges, "Explicit ranges (m)")->expected(1, -1);
  se->add_option("--start", sa.r_start, "First range (m)");
  se->add_option("--stop", sa.r_stop, "Last range (m)");
  se->add_option("--step", sa.r_step, "Range step (m)");
  se->add_option("--zr", sa.zr_preset, "Z-R preset: tuned, marshall-palmer (default)");
  se->add_option("--zr-a", sa.zr_a, "Z-R coefficient a");
  se->add_option("--zr-b", sa.zr_b, "Z-R exponent b");
  se->add_option("--snr-min", sa.snr_min, "Minimum SNR (linear)")->check(CLI::PositiveNumber);
  se->add_flag("--antenna-correction", sa.antenna_correction, "Integrate the antenna pattern for F");
  se->add_option("-o,--output", sa.output, "Output CSV (stdout when omitted)");

  CompareArgs ca;
  auto* cp = app.add_subcommand("compare", "Compare product series of two sites on a common grid");
  cp->add_option("--a", ca.a, "Products of site A")->required()->expected(1, -1);
  cp->add_option("--b", ca.b, "Products of site B")->required()->expected(1, -1);
  cp->add_option("--grid", ca.grid, "Common grid: x0 y0 nx ny spacing")->expected(5);
  cp->add_option("--scene", ca.scene, "Take the common grid from a scene file");
  cp->add_option("--tolerance", ca.tolerance, "Time alignment tolerance (s)");
  cp->add_option("-o,--output", ca.output, "Report JSON (stdout when omitted)");
  cp->add_option("--cells", ca.cells, "Per-cell differences CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kBadInput;
  }

  try {
    if (*s) return cmd_simulate(sim, out);
    if (*p) return cmd_process(proc, out);
    if (*c) return cmd_clutter_map(cm, out);
    if (*f) return cmd_fit_zr(fz, out, err);
    if (*se) return cmd_sensitivity(sa, out);
    if (*cp) return cmd_compare(ca, out);
  } catch (const io::io_error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == io::Errc::write_failed ? kProcessingFailure : kBadInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kProcessingFailure;
  }
  return kBadInput;
}

}  // namespace bswrm::cli
