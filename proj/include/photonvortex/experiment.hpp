#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "integrator.hpp"
#include "io.hpp"
#include "observables.hpp"
#include "peaks.hpp"

namespace photonvortex {

inline constexpr const char* kVersion = "1.0.0";

namespace fs = std::filesystem;

/// Scalar observables of one snapshot, the rows of timeseries.csv.
struct SnapshotSummary {
  std::int64_t index{0};
  double time{0.0};
  double photons{0.0};
  int order{0};
  double dominance{0.0};
  double contrast{0.0};
  Point2 centroid;
  int top_manifold{0};  // most populated manifold with q >= 2
  double ground_fraction{0.0};  // population share of q <= 1
};

/// Radius of the symmetry analysis circle: the pump orbit, pulled inside the grid if needed.
inline double analysis_radius(const Model& model) {
  const auto& g = model.basis.grid();
  const double limit = g.extent() - 1.5 * g.spacing();
  return std::min(model.pump.radius, limit);
}

inline SnapshotSummary summarize(const SimState& s, std::int64_t index, const Model& model,
                                 const ModeProductKernel& kernel) {
  SnapshotSummary out;
  out.index = index;
  out.time = s.time;
  out.photons = total_photon_number(s.n);
  const FieldSnapshot density = photon_density(s.n, kernel, model.basis.grid(), s.time);
  const double radius = analysis_radius(model);
  if (out.photons > 0.0 && radius > 0.0) {
    const SymmetryResult sym = analyze_symmetry(density, radius);
    out.order = sym.order;
    out.dominance = sym.dominance;
    out.contrast = ring_contrast(density, radius);
  }
  out.centroid = field_centroid(density);
  const Eigen::VectorXd pops = manifold_populations(s.n, model.basis);
  if (out.photons > 0.0) {
    out.ground_fraction = pops.head(std::min<Eigen::Index>(2, pops.size())).sum() / out.photons;
    if (pops.size() > 2) {
      Eigen::Index arg;
      pops.tail(pops.size() - 2).maxCoeff(&arg);
      out.top_manifold = static_cast<int>(arg) + 2;
    }
  }
  return out;
}

/// Aggregate of the symmetry analysis over a window of snapshots.
struct WindowSymmetry {
  int order{0};                 // most frequent per-snapshot order
  double order_fraction{0.0};   // share of snapshots returning it
  double mean_dominance{0.0};
  double mean_contrast{0.0};
  double min_contrast{0.0};
  int samples{0};
};

inline WindowSymmetry window_symmetry(const std::vector<SnapshotSummary>& rows) {
  WindowSymmetry w;
  if (rows.empty()) return w;
  std::map<int, int> votes;
  double dom = 0.0, con = 0.0, con_min = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    ++votes[r.order];
    dom += r.dominance;
    con += r.contrast;
    con_min = std::min(con_min, r.contrast);
  }
  for (const auto& [order, count] : votes)
    if (count > votes[w.order] || w.order == 0) w.order = order;
  w.samples = static_cast<int>(rows.size());
  w.order_fraction = static_cast<double>(votes[w.order]) / w.samples;
  w.mean_dominance = dom / w.samples;
  w.mean_contrast = con / w.samples;
  w.min_contrast = con_min;
  return w;
}

// ---------------------------------------------------------------------------
// In-memory runs (no files)

struct SimulationResult {
  SimState final_state;
  StepStats stats;
  std::vector<SnapshotSummary> series;
  /// States kept by the `keep` predicate, in snapshot order.
  std::vector<SimState> kept;
  std::vector<std::int64_t> kept_index;
};

/// Integrates a config from vacuum, summarising every snapshot and keeping the
/// states selected by `keep`.
inline SimulationResult simulate(const SimConfig& config,
                                 const std::function<bool(std::int64_t)>& keep = {}) {
  const Model model = make_model(config);
  const ModeProductKernel kernel(model.basis);
  Integrator integrator(model, step_policy(config));
  SimulationResult out;
  const Schedule schedule = config.schedule();
  out.final_state = run(integrator, schedule,
                        SimState::vacuum(model.basis.size(), static_cast<int>(model.basis.grid().size())), 0,
                        [&](const SimState& s, std::int64_t i) {
                          out.series.push_back(summarize(s, i, model, kernel));
                          if (keep && keep(i)) {
                            out.kept.push_back(s);
                            out.kept_index.push_back(i);
                          }
                        });
  out.stats = integrator.stats();
  return out;
}

/// Rows whose time lies within the last `periods` orbital periods of the series.
inline std::vector<SnapshotSummary> late_window(const std::vector<SnapshotSummary>& rows, double period,
                                                double periods) {
  std::vector<SnapshotSummary> out;
  if (rows.empty()) return out;
  const double t0 = rows.back().time - periods * period - 1e-9;
  for (const auto& r : rows)
    if (r.time > t0) out.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------
// Run directories
//
//   config.txt        canonical configuration
//   checkpoints/      ckpt_<index>.bin
//   fields/           <kind>_<index>.bin
//   timeseries.csv    one SnapshotSummary per snapshot
//   manifest.txt      config hash, versions, summary, file list

inline std::string index_name(const std::string& prefix, std::int64_t index, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08lld", static_cast<long long>(index));
  return prefix + "_" + buf + ext;
}

inline std::string summary_header() {
  return "index,time,photons,order,dominance,contrast,centroid_x,centroid_y,top_manifold,ground_fraction";
}

inline std::string summary_row(const SnapshotSummary& s) {
  using detail::format_double;
  std::ostringstream o;
  o << s.index << ',' << format_double(s.time) << ',' << format_double(s.photons) << ',' << s.order << ','
    << format_double(s.dominance) << ',' << format_double(s.contrast) << ','
    << format_double(s.centroid.x) << ',' << format_double(s.centroid.y) << ',' << s.top_manifold << ','
    << format_double(s.ground_fraction);
  return o.str();
}

inline SnapshotSummary parse_summary_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) f.push_back(cell);
  if (f.size() != 10) throw FormatError("malformed timeseries row: " + line);
  SnapshotSummary s;
  s.index = std::stoll(f[0]);
  s.time = std::stod(f[1]);
  s.photons = std::stod(f[2]);
  s.order = std::stoi(f[3]);
  s.dominance = std::stod(f[4]);
  s.contrast = std::stod(f[5]);
  s.centroid = {std::stod(f[6]), std::stod(f[7])};
  s.top_manifold = std::stoi(f[8]);
  s.ground_fraction = std::stod(f[9]);
  return s;
}

inline std::vector<SnapshotSummary> read_timeseries(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<SnapshotSummary> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(parse_summary_row(line));
  return rows;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline SimConfig load_run_config(const fs::path& dir) {
  return parse_config(read_text(dir / "config.txt")).config;
}

struct CheckpointEntry {
  std::int64_t index;
  fs::path path;
};

/// Checkpoints in a run directory, sorted by index (by file name; contents unchecked).
inline std::vector<CheckpointEntry> list_checkpoints(const fs::path& dir) {
  std::vector<CheckpointEntry> out;
  const fs::path cdir = dir / "checkpoints";
  if (!fs::exists(cdir)) return out;
  for (const auto& e : fs::directory_iterator(cdir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("ckpt_", 0) != 0 || e.path().extension() != ".bin") continue;
    try {
      out.push_back({std::stoll(name.substr(5, name.size() - 9)), e.path()});
    } catch (const std::exception&) {
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  return out;
}

/// Reads and checks a checkpoint against the run's configuration.
inline Checkpoint load_checked_checkpoint(const fs::path& path, const SimConfig& config) {
  Checkpoint c = read_checkpoint(path);
  if (c.config_hash != config_hash(config))
    throw FormatError(path.string() + ": config hash " + hex64(c.config_hash) +
                      " does not match the run configuration " + hex64(config_hash(config)));
  const int K = basis_size(config.basis.q_max);
  const int M = config.basis.resolution * config.basis.resolution;
  if (c.state.n.rows() != K || c.state.m.size() != M)
    throw FormatError(path.string() + ": state dimensions do not match the configuration");
  return c;
}

struct RunReport {
  fs::path dir;
  std::int64_t first_index{0};
  std::int64_t last_index{0};
  SimState final_state;
  StepStats stats;
  std::vector<SnapshotSummary> series;
  std::vector<std::string> warnings;
};

struct RunOptions {
  /// Called after every snapshot; for progress display.
  std::function<void(const SnapshotSummary&, std::int64_t last_index)> progress;
};

namespace detail {

inline bool wants_checkpoint(const SimConfig& c, std::int64_t index, std::int64_t last) {
  return index % c.output.checkpoint_every == 0 || index >= last - c.output.dense_tail || index == last;
}

inline void write_manifest(const fs::path& dir, const SimConfig& config, const RunReport& r) {
  const Model model = make_model(config);
  std::ostringstream o;
  o << "photonvortex_version: " << kVersion << "\n";
  o << "eigen_version: " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION
    << "\n";
  o << "config_hash: " << hex64(config_hash(config)) << "\n";
  o << "modes: " << model.basis.size() << "\n";
  o << "q_max: " << config.basis.q_max << "\n";
  o << "grid: " << config.basis.resolution << "x" << config.basis.resolution << " extent "
    << format_double(config.basis.extent) << "\n";
  o << "orbital_frequency: " << format_double(config.pump.orbital_frequency) << "\n";
  o << "snapshot_interval: " << format_double(config.snapshot_interval()) << "\n";
  o << "substep: " << format_double(config.snapshot_interval() / config.schedule().substeps()) << "\n";
  o << "first_index: " << r.first_index << "\n";
  o << "last_index: " << r.last_index << "\n";
  o << "final_time: " << format_double(r.final_state.time) << "\n";
  o << "steps_accepted: " << r.stats.accepted << "\n";
  o << "steps_rejected: " << r.stats.rejected << "\n";
  o << "clamp_warnings: " << r.stats.clamp_warnings << "\n";
  for (const auto& w : r.warnings) o << "warning: " << w << "\n";

  const auto rows = read_timeseries(dir / "timeseries.csv");
  if (!rows.empty()) {
    const auto& last = rows.back();
    const WindowSymmetry w = window_symmetry(late_window(rows, config.snapshot_period(), 10.0));
    o << "final_photons: " << format_double(last.photons) << "\n";
    o << "final_symmetry_order: " << last.order << "\n";
    o << "final_top_manifold: " << last.top_manifold << "\n";
    o << "final_ground_fraction: " << format_double(last.ground_fraction) << "\n";
    o << "final_centroid: " << format_double(last.centroid.x) << " " << format_double(last.centroid.y) << "\n";
    o << "late_symmetry_order: " << w.order << "\n";
    o << "late_order_fraction: " << format_double(w.order_fraction) << "\n";
    o << "late_mean_dominance: " << format_double(w.mean_dominance) << "\n";
    o << "late_mean_contrast: " << format_double(w.mean_contrast) << "\n";
    o << "late_window_samples: " << w.samples << "\n";
  }
  o << "files:\n";
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.txt")
      files.push_back(fs::relative(e.path(), dir).generic_string());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) o << "  " << f << "\n";
  write_text(dir / "manifest.txt", o.str());
}

/// Integrates from `start` (at snapshot `start_index`) and persists everything.
inline RunReport run_into(const fs::path& dir, const SimConfig& config, SimState start,
                          std::int64_t start_index, std::ofstream& series_out, const RunOptions& opt) {
  const Model model = make_model(config);
  const ModeProductKernel kernel(model.basis);
  Integrator integrator(model, step_policy(config));
  const Schedule schedule = config.schedule();
  const std::int64_t last = schedule.last_index();
  const std::uint64_t hash = config_hash(config);
  fs::create_directories(dir / "checkpoints");
  if (!config.output.fields.empty()) fs::create_directories(dir / "fields");

  RunReport report;
  report.dir = dir;
  report.first_index = start_index;
  report.final_state = run(integrator, schedule, std::move(start), start_index,
                           [&](const SimState& s, std::int64_t i) {
                             const SnapshotSummary row = summarize(s, i, model, kernel);
                             report.series.push_back(row);
                             if (i > start_index || start_index == 0) {
                               series_out << summary_row(row) << '\n';
                               series_out.flush();
                             }
                             if ((i != start_index || start_index == 0) && wants_checkpoint(config, i, last))
                               write_checkpoint(dir / "checkpoints" / index_name("ckpt", i, ".bin"),
                                                {hash, i, s});
                             if (i % config.output.field_every == 0 || i == last)
                               for (const auto& kind : config.output.fields) {
                                 const FieldSnapshot f =
                                     kind == "molecular"
                                         ? make_real_field(s.time, model.basis.grid(), FieldKind::Molecular, s.m)
                                         : photon_density(s.n, kernel, model.basis.grid(), s.time);
                                 write_field_binary(dir / "fields" / index_name(kind, i, ".bin"), f, hash);
                               }
                             if (opt.progress) opt.progress(row, last);
                           });
  report.last_index = std::max(last, start_index);
  report.stats = integrator.stats();
  return report;
}

}  // namespace detail

/// Runs a configuration from vacuum into `dir` (created if needed).
inline RunReport run_experiment(const SimConfig& config, const fs::path& dir, const RunOptions& opt = {}) {
  const auto warnings = validate_config(config);
  fs::create_directories(dir);
  for (const char* sub : {"checkpoints", "fields"})
    if (fs::exists(dir / sub)) fs::remove_all(dir / sub);
  write_text(dir / "config.txt", serialize_config(config));
  std::ofstream series(dir / "timeseries.csv", std::ios::trunc);
  if (!series) throw std::runtime_error("cannot write " + (dir / "timeseries.csv").string());
  series << summary_header() << '\n';
  const int K = basis_size(config.basis.q_max);
  const int M = config.basis.resolution * config.basis.resolution;
  RunReport report = detail::run_into(dir, config, SimState::vacuum(K, M), 0, series, opt);
  series.close();
  report.warnings = warnings;
  detail::write_manifest(dir, config, report);
  return report;
}

/// Continues a run from its latest valid checkpoint. `t_end` extends (or shortens)
/// the target time; the trajectory is unaffected since t_end is not hashed.
inline RunReport resume_experiment(const fs::path& dir, std::optional<double> t_end = std::nullopt,
                                   const RunOptions& opt = {}) {
  SimConfig config = load_run_config(dir);
  if (t_end) config.integrator.t_end = *t_end;
  const auto warnings = validate_config(config);
  auto entries = list_checkpoints(dir);
  std::optional<Checkpoint> start;
  std::vector<std::string> skipped;
  for (auto it = entries.rbegin(); it != entries.rend() && !start; ++it) {
    try {
      start = load_checked_checkpoint(it->path, config);
      if (start->index != it->index) throw FormatError(it->path.string() + ": index does not match file name");
    } catch (const FormatError& e) {
      start.reset();
      skipped.push_back(e.what());
    }
  }
  if (!start) throw FormatError("no valid checkpoint in " + (dir / "checkpoints").string());
  write_text(dir / "config.txt", serialize_config(config));

  // Drop timeseries rows and files beyond the restart point so the directory matches
  // an uninterrupted run.
  std::vector<SnapshotSummary> rows;
  if (fs::exists(dir / "timeseries.csv")) rows = read_timeseries(dir / "timeseries.csv");
  std::ofstream series(dir / "timeseries.csv", std::ios::trunc);
  series << summary_header() << '\n';
  for (const auto& r : rows)
    if (r.index <= start->index) series << summary_row(r) << '\n';
  for (const auto& e : entries)
    if (e.index > start->index) fs::remove(e.path);

  RunReport report = detail::run_into(dir, config, start->state, start->index, series, opt);
  series.close();
  report.warnings = warnings;
  for (const auto& s : skipped) report.warnings.push_back("skipped checkpoint: " + s);
  detail::write_manifest(dir, config, report);
  return report;
}

// ---------------------------------------------------------------------------
// Offline analysis

enum class AnalysisKind { Density, Molecular, G1, Symmetry, Populations, PhaseTrace };

inline AnalysisKind analysis_kind_from_string(const std::string& s) {
  if (s == "density") return AnalysisKind::Density;
  if (s == "molecular") return AnalysisKind::Molecular;
  if (s == "g1") return AnalysisKind::G1;
  if (s == "symmetry") return AnalysisKind::Symmetry;
  if (s == "populations") return AnalysisKind::Populations;
  if (s == "phase-trace") return AnalysisKind::PhaseTrace;
  throw std::invalid_argument("unknown analysis kind '" + s +
                              "' (expected density, molecular, g1, symmetry, populations, phase-trace)");
}

struct AnalysisSpec {
  AnalysisKind kind{AnalysisKind::Density};
  bool png{true};
  bool csv{false};
  bool binary{false};
  /// Only checkpoints with time >= from_time.
  double from_time{0.0};
  /// G1 reference point; brightest density peak when unset.
  std::optional<Point2> reference;
  fs::path out_dir;  // defaults to <run>/analysis
};

struct AnalysisReport {
  std::vector<fs::path> files;
  std::vector<std::string> warnings;
};

/// Longest run of consecutive snapshot indices at the end of the list.
inline std::vector<CheckpointEntry> trailing_contiguous(const std::vector<CheckpointEntry>& entries) {
  if (entries.empty()) return {};
  std::size_t first = entries.size() - 1;
  while (first > 0 && entries[first - 1].index + 1 == entries[first].index) --first;
  return {entries.begin() + static_cast<std::ptrdiff_t>(first), entries.end()};
}

/// Recomputes observables from a run's checkpoints.
inline AnalysisReport analyze(const fs::path& dir, const AnalysisSpec& spec) {
  const SimConfig config = load_run_config(dir);
  const Model model = make_model(config);
  const ModeProductKernel kernel(model.basis);
  const fs::path out = spec.out_dir.empty() ? dir / "analysis" : spec.out_dir;
  fs::create_directories(out);
  AnalysisReport report;

  auto entries = list_checkpoints(dir);
  if (entries.empty()) throw FormatError("no checkpoints in " + dir.string());
  if (spec.kind == AnalysisKind::PhaseTrace) entries = trailing_contiguous(entries);

  std::vector<Checkpoint> cps;
  for (const auto& e : entries) {
    Checkpoint c = load_checked_checkpoint(e.path, config);
    if (c.state.time + 1e-9 >= spec.from_time) cps.push_back(std::move(c));
  }
  if (cps.empty()) throw FormatError("no checkpoints at or after t = " + detail::format_double(spec.from_time));

  auto emit = [&](const FieldSnapshot& f, const std::string& stem) {
    if (spec.png) { report.files.push_back(out / (stem + ".png")); write_field_png(report.files.back(), f); }
    if (spec.csv) { report.files.push_back(out / (stem + ".csv")); write_field_csv(report.files.back(), f); }
    if (spec.binary) {
      report.files.push_back(out / (stem + ".bin"));
      write_field_binary(report.files.back(), f, config_hash(config));
    }
  };

  switch (spec.kind) {
    case AnalysisKind::Density:
    case AnalysisKind::Molecular:
      for (const auto& c : cps) {
        const bool mol = spec.kind == AnalysisKind::Molecular;
        const FieldSnapshot f = mol ? make_real_field(c.state.time, model.basis.grid(), FieldKind::Molecular, c.state.m)
                                    : photon_density(c.state.n, kernel, model.basis.grid(), c.state.time);
        emit(f, index_name(mol ? "molecular" : "density", c.index, ""));
      }
      break;
    case AnalysisKind::G1:
      for (const auto& c : cps) {
        const FieldSnapshot density = photon_density(c.state.n, kernel, model.basis.grid(), c.state.time);
        Point2 ref;
        if (spec.reference) {
          ref = *spec.reference;
        } else {
          Eigen::Index j;
          density.values.real().maxCoeff(&j);
          ref = model.basis.grid().position(static_cast<std::size_t>(j));
        }
        const FieldSnapshot g = g1(c.state.n, model.basis, ref, c.state.time);
        emit(g, index_name("g1", c.index, ""));
        FieldSnapshot modulus = make_real_field(c.state.time, model.basis.grid(), FieldKind::Density,
                                                g.values.cwiseAbs());
        FieldSnapshot phase = make_real_field(c.state.time, model.basis.grid(), FieldKind::Phase,
                                              g.values.unaryExpr([](cplx v) { return std::arg(v); }));
        emit(modulus, index_name("g1_modulus", c.index, ""));
        emit(phase, index_name("g1_phase", c.index, ""));
      }
      break;
    case AnalysisKind::Symmetry: {
      const fs::path p = out / "symmetry.csv";
      std::ofstream o(p);
      o << "index,time,order,dominance";
      for (int m = 0; m <= kDefaultMaxOrder; ++m) o << ",c" << m;
      o << '\n';
      for (const auto& c : cps) {
        const auto d = photon_density(c.state.n, kernel, model.basis.grid(), c.state.time);
        const SymmetryResult s = analyze_symmetry(d, analysis_radius(model));
        o << c.index << ',' << detail::format_double(c.state.time) << ',' << s.order << ','
          << detail::format_double(s.dominance);
        for (double v : s.magnitudes) o << ',' << detail::format_double(v);
        o << '\n';
      }
      report.files.push_back(p);
      break;
    }
    case AnalysisKind::Populations: {
      const fs::path p = out / "populations.csv";
      std::ofstream o(p);
      o << "index,time";
      for (int q = 0; q <= config.basis.q_max; ++q) o << ",q" << q;
      o << '\n';
      for (const auto& c : cps) {
        const Eigen::VectorXd pops = manifold_populations(c.state.n, model.basis);
        o << c.index << ',' << detail::format_double(c.state.time);
        for (Eigen::Index q = 0; q < pops.size(); ++q) o << ',' << detail::format_double(pops(q));
        o << '\n';
      }
      report.files.push_back(p);
      break;
    }
    case AnalysisKind::PhaseTrace: {
      std::vector<SimState> states;
      for (const auto& c : cps) states.push_back(c.state);
      if (states.size() < 2)
        report.warnings.push_back("phase trace needs consecutive checkpoints; set output.dense_tail");
      PhaseTraceOptions popt;
      popt.peaks.min_radius = 0.5 * model.pump.radius;
      const PhaseTrace trace = peak_phase_trace(states, model.basis, model.pump, popt);
      const fs::path p = out / "phase_trace.csv";
      std::ofstream o(p);
      o << "# peaks (co-rotating frame):";
      for (const auto& pk : trace.peaks.peaks)
        o << " " << pk.label << "@(" << detail::format_double(pk.position.x) << ","
          << detail::format_double(pk.position.y) << ")";
      o << "\n# display offsets: -2pi on peak 1, +2pi on the last peak\ntime";
      for (std::size_t k = 0; k < trace.phases.size(); ++k) o << ",peak" << k;
      o << '\n';
      for (std::size_t i = 0; i < trace.times.size(); ++i) {
        o << detail::format_double(trace.times[i]);
        for (std::size_t k = 0; k < trace.phases.size(); ++k) o << ',' << detail::format_double(trace.displayed(k, i));
        o << '\n';
      }
      report.files.push_back(p);
      break;
    }
  }
  return report;
}

}  // namespace photonvortex
