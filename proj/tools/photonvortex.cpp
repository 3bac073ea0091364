// Command-line front end: run, resume, analyze, presets, validate-config, print-defaults.
//
// Exit codes:
//   0  success
//   1  runtime failure (step rejected too often, I/O error)
//   2  usage error
//   3  invalid configuration
//   4  missing or corrupt run data (checkpoint hash/checksum mismatch)
//   5  peak tracking lost during phase-trace analysis

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "photonvortex/photonvortex.hpp"

namespace pv = photonvortex;

namespace {

enum Exit { kOk = 0, kRuntime = 1, kUsage = 2, kConfig = 3, kData = 4, kTracking = 5 };

pv::SimConfig apply_overrides(pv::SimConfig base, const std::string& file,
                              const std::vector<std::string>& sets, bool quiet) {
  std::vector<std::string> warnings;
  if (!file.empty()) {
    auto parsed = pv::parse_config(pv::read_text(file), base);
    base = parsed.config;
    warnings = parsed.warnings;
  }
  if (!sets.empty()) {
    std::string text;
    for (const auto& s : sets) text += s + "\n";
    auto parsed = pv::parse_config(text, base);
    base = parsed.config;
    warnings = parsed.warnings;
  }
  if (file.empty() && sets.empty()) warnings = pv::validate_config(base);
  if (!quiet)
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return base;
}

pv::RunOptions progress_options(bool quiet) {
  pv::RunOptions opt;
  if (quiet) return opt;
  auto start = std::chrono::steady_clock::now();
  opt.progress = [start](const pv::SnapshotSummary& s, std::int64_t last) {
    if (s.index % 16 != 0 && s.index != last) return;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "\r[%lld/%lld] t=%.2f N=%.3e order=%d dom=%.2f (%.0fs)   ",
                 static_cast<long long>(s.index), static_cast<long long>(last), s.time, s.photons,
                 s.order, s.dominance, secs);
    if (s.index == last) std::fprintf(stderr, "\n");
  };
  return opt;
}

void print_report(const pv::RunReport& r) {
  std::cout << "run directory: " << r.dir.string() << "\n"
            << "snapshots: " << r.first_index << ".." << r.last_index << "\n"
            << "final time: " << r.final_state.time << "\n"
            << "steps: " << r.stats.accepted << " accepted, " << r.stats.rejected << " rejected\n";
  if (!r.series.empty()) {
    const auto& last = r.series.back();
    std::cout << "final photons: " << last.photons << "\n"
              << "final symmetry order: " << last.order << " (dominance " << last.dominance << ")\n";
  }
  std::cout << "manifest: " << (r.dir / "manifest.txt").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orbiting-pump photon condensate simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(pv::kVersion));
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress and warnings");

  // run
  auto* run = app.add_subcommand("run", "Integrate a preset or configuration into a run directory");
  std::string preset, tier = "fast", config_file, out_dir;
  std::vector<std::string> sets;
  std::optional<double> t_end, periods;
  run->add_option("-p,--preset", preset, "Preset name (see `presets`)");
  run->add_option("--tier", tier, "Preset tier")->check(CLI::IsMember({"fast", "paper"}));
  run->add_option("-c,--config", config_file, "Key-value configuration file")->check(CLI::ExistingFile);
  run->add_option("-s,--set", sets, "Override, e.g. --set pump.width=0.7");
  run->add_option("-o,--out", out_dir, "Output directory (default: output.dir)");
  run->add_option("--t-end", t_end, "End time in units of 1/omega_T");
  run->add_option("--periods", periods, "End time in orbital periods")->excludes("--t-end");

  // resume
  auto* resume = app.add_subcommand("resume", "Continue a run from its latest valid checkpoint");
  std::string resume_dir;
  std::optional<double> resume_t_end, resume_periods;
  resume->add_option("dir", resume_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  resume->add_option("--t-end", resume_t_end, "New end time");
  resume->add_option("--periods", resume_periods, "New end time in orbital periods")->excludes("--t-end");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Recompute observables from stored checkpoints");
  std::string analyze_dir, kind = "density", formats = "png", analyze_out;
  double from_period = 0.0;
  std::vector<double> reference;
  analyze->add_option("dir", analyze_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  analyze->add_option("-k,--kind", kind, "density | molecular | g1 | symmetry | populations | phase-trace");
  analyze->add_option("-f,--format", formats, "Comma list of png, csv, bin (field kinds)");
  analyze->add_option("--from-period", from_period, "Skip checkpoints before this orbital period");
  analyze->add_option("--ref", reference, "G1 reference point x y (default: brightest bin)")->expected(2);
  analyze->add_option("-o,--out", analyze_out, "Output directory (default: <dir>/analysis)");

  // presets
  auto* presets = app.add_subcommand("presets", "List presets or print one as a configuration");
  std::string show, presets_tier = "fast";
  presets->add_option("--show", show, "Print the configuration of this preset");
  presets->add_option("--tier", presets_tier, "Preset tier")->check(CLI::IsMember({"fast", "paper"}));

  // validate-config
  auto* validate = app.add_subcommand("validate-config", "Parse and check a configuration file");
  std::string validate_file;
  validate->add_option("file", validate_file, "Configuration file")->required()->check(CLI::ExistingFile);

  // print-defaults
  auto* defaults = app.add_subcommand("print-defaults", "Print every configuration key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      pv::SimConfig base = preset.empty() ? pv::SimConfig{} : pv::preset(preset, pv::tier_from_string(tier));
      pv::SimConfig config = apply_overrides(base, config_file, sets, quiet);
      if (t_end) config.integrator.t_end = *t_end;
      if (periods) config.integrator.t_end = *periods * config.snapshot_period();
      if (!out_dir.empty()) config.output.dir = out_dir;
      print_report(pv::run_experiment(config, config.output.dir, progress_options(quiet)));
    } else if (*resume) {
      std::optional<double> target = resume_t_end;
      if (resume_periods) target = *resume_periods * pv::load_run_config(resume_dir).snapshot_period();
      print_report(pv::resume_experiment(resume_dir, target, progress_options(quiet)));
    } else if (*analyze) {
      pv::AnalysisSpec spec;
      spec.kind = pv::analysis_kind_from_string(kind);
      spec.png = spec.csv = spec.binary = false;
      for (const auto& f : pv::detail::split_list(formats)) {
        if (f == "png") spec.png = true;
        else if (f == "csv") spec.csv = true;
        else if (f == "bin") spec.binary = true;
        else { std::cerr << "error: unknown format '" << f << "'\n"; return kUsage; }
      }
      spec.from_time = from_period * pv::load_run_config(analyze_dir).snapshot_period();
      if (reference.size() == 2) spec.reference = pv::Point2{reference[0], reference[1]};
      spec.out_dir = analyze_out;
      const auto report = pv::analyze(analyze_dir, spec);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& f : report.files) std::cout << f.string() << "\n";
    } else if (*presets) {
      if (show.empty()) {
        for (const auto& p : pv::preset_list()) std::printf("%-22s %s\n", p.name.c_str(), p.description.c_str());
      } else {
        std::cout << pv::serialize_config(pv::preset(show, pv::tier_from_string(presets_tier)));
      }
    } else if (*validate) {
      const auto parsed = pv::parse_config(pv::read_text(validate_file));
      for (const auto& w : parsed.warnings) std::cout << "warning: " << w << "\n";
      std::cout << "ok: config hash " << pv::hex64(pv::config_hash(parsed.config)) << ", "
                << pv::basis_size(parsed.config.basis.q_max) << " modes\n";
    } else if (*defaults) {
      std::cout << pv::describe_defaults();
    }
  } catch (const pv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const pv::FormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const pv::TrackingLoss& e) {
    std::cerr << "tracking lost: " << e.what() << "\n";
    return kTracking;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
