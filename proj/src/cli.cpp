#include "voxprint/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "voxprint/calib.hpp"
#include "voxprint/errors.hpp"
#include "voxprint/gamut.hpp"
#include "voxprint/hash.hpp"
#include "voxprint/pipeline.hpp"
#include "voxprint/volume.hpp"

namespace voxprint {

namespace fs = std::filesystem;

namespace {

constexpr const char* kColorLutFile = "color.vlut";
constexpr const char* kRhoKLutFile = "rhok.vlut";

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// Where the pigment set comes from: a solved calibration file or a recipe.
struct PigmentSource {
  std::string calibration;
  std::string recipe = "default";

  void add_to(CLI::App* app) {
    app->add_option("--calibration", calibration, "Calibration file with solved profiles (overrides --pigments)");
    app->add_option("--pigments", recipe, "Synthetic pigment recipe: default, absorber-heavy, scatter-heavy");
  }

  PigmentSet load() const {
    if (calibration.empty()) return synth_pigment_set(recipe);
    auto file = load_calibration(calibration);
    if (!file.solved) throw ConfigError(calibration + ": no solved profiles; run 'calibrate' first");
    return *file.solved;
  }
};

struct SigmaFlags {
  double t_max_mm = 5.0;
  int samples = 100;
  double delta_t_mm = 1.0;
  std::string averaging = "transmittance";

  void add_to(CLI::App* app) {
    app->add_option("--t-max", t_max_mm, "Thickness range of the density fit, mm")->check(CLI::PositiveNumber);
    app->add_option("--samples", samples, "Thickness samples in the density fit")->check(CLI::Range(2, 100000));
    app->add_option("--delta-t", delta_t_mm, "Thickness of the band average, mm")->check(CLI::PositiveNumber);
    app->add_option("--sigma-average", averaging, "Band averaging: transmittance or rate")
        ->check(CLI::IsMember({"transmittance", "rate"}));
  }

  SigmaOptions options() const {
    SigmaOptions o;
    o.t_max_mm = t_max_mm;
    o.samples = samples;
    o.delta_t_mm = delta_t_mm;
    o.averaging = averaging == "rate" ? SigmaAveraging::kRateMean : SigmaAveraging::kTransmittanceMean;
    return o;
  }
};

Dims parse_dims(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      values.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw ConfigError("bad dims '" + text + "' (expected N or NX,NY,NZ)");
    }
  }
  if (values.size() == 1) values = {values[0], values[0], values[0]};
  if (values.size() != 3 || *std::min_element(values.begin(), values.end()) < 1) {
    throw ConfigError("bad dims '" + text + "' (expected N or NX,NY,NZ, each >= 1)");
  }
  return {values[0], values[1], values[2]};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

// ---------------------------------------------------------------------------

struct CalibrateConfig {
  std::string synth;
  std::string measurements;
  std::string output;
  double thickness_mm = 1.0;
};

int cmd_calibrate(const CalibrateConfig& cfg, std::ostream& out) {
  CalibrationFile file;
  if (!cfg.synth.empty()) {
    const auto set = synth_pigment_set(cfg.synth);
    for (Pigment p : kAllPigments) file.measurements.push_back(forward_record(set[p], cfg.thickness_mm));
  } else {
    file = load_calibration(cfg.measurements);
  }
  std::vector<PigmentProfile> profiles;
  std::size_t flags = 0;
  for (const auto& record : file.measurements) {
    auto result = invert_km(record);
    out << pigment_name(record.pigment) << ": ";
    if (result.flagged_bands.empty()) {
      out << "ok\n";
    } else {
      out << result.flagged_bands.size() << " flagged band(s):";
      for (auto band : result.flagged_bands) out << ' ' << kDefaultGrid.wavelength(band) << "nm";
      out << '\n';
    }
    flags += result.flagged_bands.size();
    profiles.push_back(std::move(result.profile));
  }
  file.solved = PigmentSet(std::move(profiles));
  save_calibration(file, cfg.output);
  out << "wrote " << cfg.output << " (pigment set " << hex64(file.solved->hash()) << ", " << flags
      << " flagged band(s))\n";
  return flags ? kExitFlagged : kExitOk;
}

// ---------------------------------------------------------------------------

struct BuildLutConfig {
  PigmentSource pigments;
  std::string out_dir = "luts";
  int resolution = kDefaultColorLutResolution;
  int rhok_entries = kDefaultRhoKEntries;
  double t_ref_mm = 1.0;
  int workers = 1;
  bool force = false;
};

int cmd_build_lut(const BuildLutConfig& cfg, std::ostream& out) {
  if (cfg.resolution < 2) throw ConfigError("LUT resolution must be at least 2");
  if (cfg.rhok_entries < 2) throw ConfigError("rho-K LUT needs at least 2 entries");
  const auto set = cfg.pigments.load();
  const auto hash = set.hash();
  fs::create_directories(cfg.out_dir);
  const fs::path color_path = fs::path(cfg.out_dir) / kColorLutFile;
  const fs::path rhok_path = fs::path(cfg.out_dir) / kRhoKLutFile;

  if (fs::exists(color_path)) {
    try {
      const auto old = load_color_lut(color_path);
      if (old.set_hash() != hash) {
        out << "notice: overwriting stale cache " << color_path.string() << " (pigment set " << hex64(old.set_hash())
            << ")\n";
      } else if (!cfg.force && old.resolution() == cfg.resolution && old.t_ref_mm() == cfg.t_ref_mm &&
                 fs::exists(rhok_path)) {
        const auto old_rhok = load_rhok_lut(rhok_path);
        if (old_rhok.set_hash() == hash && old_rhok.size() == static_cast<std::size_t>(cfg.rhok_entries) &&
            old_rhok.t_ref_mm() == cfg.t_ref_mm) {
          out << "caches up to date for pigment set " << hex64(hash) << "; coverage "
              << fmt("%.4f", gamut_coverage(old)) << " (use --force to rebuild)\n";
          return kExitOk;
        }
      }
    } catch (const FormatError&) {
      out << "notice: overwriting unreadable cache " << color_path.string() << '\n';
    }
  }

  const auto start = std::chrono::steady_clock::now();
  LutBuildOptions options;
  options.workers = cfg.workers;
  const auto lut = build_color_lut(set, cfg.resolution, cfg.t_ref_mm, options);
  const auto rhok = build_rhok_lut(set, cfg.t_ref_mm, cfg.rhok_entries);
  save_color_lut(lut, color_path);
  save_rhok_lut(rhok, rhok_path);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << "pigment set " << hex64(hash) << ": " << cfg.resolution << "^3 color LUT, " << cfg.rhok_entries
      << "-entry rho-K LUT in " << fmt("%.1f", seconds) << " s\n";
  out << "gamut coverage (residual < 0.02): " << fmt("%.4f", gamut_coverage(lut)) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct VolumeSource {
  std::string input;
  std::string synth;
  std::string dims = "64";
  std::uint64_t synth_seed = 7;

  void add_to(CLI::App* app) {
    app->add_option("--input", input, "Radiance volume (.rvol)");
    app->add_option("--synth", synth, "Generate a volume instead: solid-sphere, cloud, fur-shell, gradient-cube");
    app->add_option("--dims", dims, "Dims of a generated volume: N or NX,NY,NZ");
    app->add_option("--synth-seed", synth_seed, "Seed of a generated volume");
  }

  RadianceVolume load() const {
    if (!input.empty()) return load_rvol(input);
    if (!synth.empty()) return synth_volume(synth, parse_dims(dims), synth_seed);
    throw ConfigError("need --input or --synth");
  }
};

struct ConvertConfig {
  VolumeSource volume;
  PigmentSource pigments;
  SigmaFlags sigma;
  std::string lut_dir = "luts";
  std::string out_dir = "slices";
  std::uint64_t seed = 0;
  int workers = 1;
  double density_scale = 1.0;
  double rho_cap = 0.1;
  double t_ref_mm = 1.0;
  double empty_threshold = 1e-3;
  std::string exterior = "air";
  std::string baseline = "none";
  int neighborhood = 3;
  bool srgb_input = false;
};

void print_report(const ConversionReport& r, std::ostream& out) {
  out << "voxels " << r.voxels << ", printed " << (r.voxels - r.empty) << ", empty " << r.empty << '\n';
  out << "alignment: unchanged " << r.unchanged << ", diluted " << r.diluted << ", augmented " << r.augmented
      << ", max rel error " << fmt("%.2e", r.alignment_max_rel_error) << '\n';
  out << "flags: density unreachable " << r.density_flagged << ", out of gamut " << r.out_of_gamut << '\n';
  out << "color residual p50 " << fmt("%.4f", r.residual_p50) << ", p95 " << fmt("%.4f", r.residual_p95) << ", p99 "
      << fmt("%.4f", r.residual_p99) << ", max " << fmt("%.4f", r.residual_max) << '\n';
  out << "target sigma mean " << fmt("%.4f", r.sigma_mean) << "/mm, max " << fmt("%.4f", r.sigma_max) << "/mm\n";
  out << "labels:";
  for (int code = 0; code < kLabelCount; ++code) out << ' ' << label_name(static_cast<Label>(code)) << '=' << r.labels[code];
  out << '\n';
}

int cmd_convert(const ConvertConfig& cfg, std::ostream& out) {
  if (cfg.workers < 1) throw ConfigError("--workers must be >= 1");
  auto volume = cfg.volume.load();
  if (cfg.srgb_input) {
    for (std::size_t i = 0; i < volume.size(); ++i) {
      auto& s = volume[i];
      s.r = static_cast<float>(srgb_to_linear(s.r));
      s.g = static_cast<float>(srgb_to_linear(s.g));
      s.b = static_cast<float>(srgb_to_linear(s.b));
    }
  }
  const auto set = cfg.pigments.load();
  AlignmentParams alignment;
  alignment.rho_plus_cap = cfg.rho_cap;
  alignment.sigma_empty_threshold = cfg.empty_threshold;
  alignment.sigma = cfg.sigma.options();
  alignment.t_ref_mm = cfg.t_ref_mm;
  alignment.validate();

  const auto start = std::chrono::steady_clock::now();
  if (cfg.baseline == "brute-force") {
    if (cfg.density_scale != 1.0) {
      for (std::size_t i = 0; i < volume.size(); ++i) {
        volume[i].sigma = static_cast<float>(volume[i].sigma * cfg.density_scale);
      }
    }
    const auto labels = brute_force_convert(volume, set, cfg.neighborhood, alignment, cfg.workers);
    const auto manifest = export_slices(labels, cfg.out_dir, cfg.seed, cfg.workers);
    nlohmann::json report;
    report["baseline"] = "brute-force";
    report["neighborhood"] = cfg.neighborhood;
    const auto hist = labels.histogram();
    for (int code = 0; code < kLabelCount; ++code) report["labels"][std::string(label_name(static_cast<Label>(code)))] = hist[code];
    write_text(fs::path(cfg.out_dir) / "report.json", report.dump(2) + "\n");
    out << "brute-force baseline, neighborhood " << cfg.neighborhood << "\nlabels:";
    for (int code = 0; code < kLabelCount; ++code) out << ' ' << label_name(static_cast<Label>(code)) << '=' << hist[code];
    out << "\nwrote " << manifest.layer_hashes.size() << " layers to " << cfg.out_dir << '\n';
    return kExitOk;
  }

  const fs::path lut_dir(cfg.lut_dir);
  const auto color_lut = load_color_lut(lut_dir / kColorLutFile);
  const auto rhok_lut = load_rhok_lut(lut_dir / kRhoKLutFile);
  ConvertParams params;
  params.alignment = alignment;
  params.density_scale = cfg.density_scale;
  params.exterior = cfg.exterior == "clear" ? Exterior::kClear : Exterior::kAir;
  params.seed = cfg.seed;
  params.workers = cfg.workers;
  const auto result = convert(volume, set, color_lut, rhok_lut, params);
  const auto manifest = export_slices(result.labels, cfg.out_dir, cfg.seed, cfg.workers);
  write_text(fs::path(cfg.out_dir) / "report.json", result.report.to_json().dump(2) + "\n");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  print_report(result.report, out);
  out << "target sigma histogram (" << ConversionReport::kSigmaBinWidth << "/mm bins):";
  for (auto count : result.report.sigma_histogram) out << ' ' << count;
  out << "\nwrote " << manifest.layer_hashes.size() << " layers to " << cfg.out_dir << " in " << fmt("%.2f", seconds)
      << " s\n";
  return result.report.flags() ? kExitFlagged : kExitOk;
}

// ---------------------------------------------------------------------------

struct PreviewConfig {
  std::string slices;
  std::string source;
  PigmentSource pigments;
  SigmaFlags sigma;
  std::vector<std::string> axes{"z"};
  std::string out_dir = "preview";
  std::string mode = "composite";
  double color_thickness_mm = 1.0;
  double density_scale = 1.0;
};

int cmd_preview(const PreviewConfig& cfg, std::ostream& out) {
  if (cfg.slices.empty() && cfg.source.empty()) throw ConfigError("need --slices and/or --source");
  std::vector<Axis> axes;
  for (const auto& a : cfg.axes) axes.push_back(parse_axis(a));
  fs::create_directories(cfg.out_dir);

  std::optional<LabelVolume> labels;
  std::optional<PigmentSet> set;
  if (!cfg.slices.empty()) {
    labels = import_slices(cfg.slices);
    set = cfg.pigments.load();
  }
  std::optional<RadianceVolume> source;
  if (!cfg.source.empty()) source = load_rvol(cfg.source);

  PreviewParams params;
  params.mode = cfg.mode == "mix" ? PreviewMode::kPigmentMix : PreviewMode::kLabelComposite;
  params.color_thickness_mm = cfg.color_thickness_mm;
  params.sigma = cfg.sigma.options();
  for (Axis axis : axes) {
    const std::string name(axis_name(axis));
    std::optional<RgbColor> print_color;
    if (labels) {
      const auto img = preview_render(*labels, *set, axis, params);
      const auto path = fs::path(cfg.out_dir) / ("print_" + name + ".png");
      write_png(img.to_image8(), path);
      const auto c = img.mean_color();
      print_color = c;
      out << path.string() << ": mean opacity " << fmt("%.4f", img.mean_opacity()) << ", mean color ("
          << fmt("%.4f", c.r) << ", " << fmt("%.4f", c.g) << ", " << fmt("%.4f", c.b) << ")\n";
    }
    if (source) {
      const auto img = preview_source(*source, axis, cfg.density_scale);
      const auto path = fs::path(cfg.out_dir) / ("source_" + name + ".png");
      write_png(img.to_image8(), path);
      const auto c = img.mean_color();
      out << path.string() << ": mean opacity " << fmt("%.4f", img.mean_opacity()) << ", mean color ("
          << fmt("%.4f", c.r) << ", " << fmt("%.4f", c.g) << ", " << fmt("%.4f", c.b) << ")\n";
      if (print_color) out << "axis " << name << " mean-color L2 (print vs source): " << fmt("%.4f", distance(*print_color, c)) << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct StatsConfig {
  PigmentSource pigments;
  SigmaFlags sigma;
  double t_ref_mm = 1.0;
  bool tables = false;
  std::string volume;
  std::string lut;
};

int cmd_stats(const StatsConfig& cfg, std::ostream& out) {
  if (!cfg.volume.empty()) {
    const auto v = load_rvol(cfg.volume);
    std::size_t occupied = 0;
    double sigma_sum = 0.0, sigma_max = 0.0;
    for (const auto& s : v.samples()) {
      if (s.sigma >= 1e-3f) ++occupied;
      sigma_sum += s.sigma;
      sigma_max = std::max(sigma_max, static_cast<double>(s.sigma));
    }
    out << cfg.volume << ": dims " << v.dims().nx << 'x' << v.dims().ny << 'x' << v.dims().nz << ", pitch "
        << v.pitch()[0] << '/' << v.pitch()[1] << '/' << v.pitch()[2] << " mm, occupied " << occupied << ", sigma mean "
        << fmt("%.4f", sigma_sum / static_cast<double>(v.size())) << " max " << fmt("%.4f", sigma_max) << "/mm\n";
    return kExitOk;
  }
  if (!cfg.lut.empty()) {
    const auto lut = load_color_lut(cfg.lut);
    out << cfg.lut << ": resolution " << lut.resolution() << ", pigment set " << hex64(lut.set_hash()) << ", t_ref "
        << lut.t_ref_mm() << " mm, coverage " << fmt("%.4f", gamut_coverage(lut)) << '\n';
    return kExitOk;
  }
  const auto set = cfg.pigments.load();
  const auto options = cfg.sigma.options();
  if (cfg.tables) {
    const auto& cie = cie_tables();
    out << "lambda_nm  xbar        ybar        zbar        d65\n";
    for (std::size_t i = 0; i < kBandCount; ++i) {
      char line[128];
      std::snprintf(line, sizeof line, "%9.0f  %.8f  %.8f  %.8f  %.4f\n", kDefaultGrid.wavelength(i), cie.xbar[i],
                    cie.ybar[i], cie.zbar[i], cie.d65[i]);
      out << line;
    }
    const auto& m = xyz_to_rgb_matrix();
    out << "xyz->rgb";
    for (double v : m) out << ' ' << fmt("%.8f", v);
    out << "\n\n";
  }
  out << "pigment set " << hex64(set.hash()) << '\n';
  out << "pigment  rgb@" << cfg.t_ref_mm << "mm                sigma/mm";
  if (cfg.tables) out << "   fit-err-mean  fit-err-worst";
  out << '\n';
  for (Pigment p : kAllPigments) {
    const auto conc = Concentration::pure(p);
    const auto rgb = concentration_to_rgb(set, conc, cfg.t_ref_mm);
    char line[160];
    std::snprintf(line, sizeof line, "%-7s  (%.3f, %.3f, %.3f)  %9.4f", std::string(pigment_name(p)).c_str(), rgb.r,
                  rgb.g, rgb.b, sigma_scalar(set, conc, options));
    out << line;
    if (cfg.tables) {
      double mean = 0.0, worst = 0.0;
      for (std::size_t i = 0; i < kBandCount; ++i) {
        const double k = set[p].absorption[i], s = set[p].scattering[i];
        const double sigma = fit_sigma_band(k, s, options.t_max_mm, options.samples);
        const double e = sigma_fit_error(k, s, sigma, options.t_max_mm, options.samples);
        mean += e;
        worst = std::max(worst, e);
      }
      mean /= kBandCount;
      std::snprintf(line, sizeof line, "   %10.4f%%  %12.4f%%", 100.0 * mean, 100.0 * worst);
      out << line;
    }
    out << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct MakeVolumeConfig {
  std::string recipe;
  std::string dims = "64";
  std::uint64_t seed = 7;
  std::string output;
};

int cmd_make_volume(const MakeVolumeConfig& cfg, std::ostream& out) {
  const auto v = synth_volume(cfg.recipe, parse_dims(cfg.dims), cfg.seed);
  save_rvol(v, cfg.output);
  out << "wrote " << cfg.output << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"voxprint: radiance voxel volumes to pigment labels for multi-material printing", "voxprint"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  CalibrateConfig calibrate;
  auto* cal = app.add_subcommand("calibrate", "Recover K and S spectra from measurements or a synthetic recipe");
  auto* cal_synth = cal->add_option("--synth", calibrate.synth, "Synthetic recipe to measure");
  auto* cal_meas = cal->add_option("--measurements", calibrate.measurements, "Calibration file with measurements");
  cal_synth->excludes(cal_meas);
  cal->add_option("--thickness", calibrate.thickness_mm, "Slab thickness of synthetic measurements, mm")
      ->check(CLI::PositiveNumber);
  cal->add_option("-o,--output", calibrate.output, "Calibration file to write")->required();

  BuildLutConfig build;
  auto* lut = app.add_subcommand("build-lut", "Build the color and rho-K lookup tables");
  build.pigments.add_to(lut);
  lut->add_option("--out-dir", build.out_dir, "Cache directory");
  lut->add_option("--resolution", build.resolution, "Color LUT nodes per axis (>= 2)");
  lut->add_option("--rhok-entries", build.rhok_entries, "Rho-K LUT entries");
  lut->add_option("--t-ref", build.t_ref_mm, "Reference thickness, mm")->check(CLI::PositiveNumber);
  lut->add_option("--workers", build.workers, "Worker threads")->check(CLI::PositiveNumber);
  lut->add_flag("--force", build.force, "Rebuild even when the caches are current");

  ConvertConfig conv;
  auto* cv = app.add_subcommand("convert", "Convert a radiance volume to label slices");
  conv.volume.add_to(cv);
  conv.pigments.add_to(cv);
  conv.sigma.add_to(cv);
  cv->add_option("--lut-dir", conv.lut_dir, "Directory holding the LUT caches");
  cv->add_option("-o,--out", conv.out_dir, "Slice output directory");
  cv->add_option("--seed", conv.seed, "Halftone seed");
  cv->add_option("--workers", conv.workers, "Worker threads")->check(CLI::PositiveNumber);
  cv->add_option("--density-scale", conv.density_scale, "Multiplier applied to input densities")
      ->check(CLI::NonNegativeNumber);
  cv->add_option("--rho-cap", conv.rho_cap, "Largest gray fraction blended in to raise density")
      ->check(CLI::Range(0.0, 1.0));
  cv->add_option("--t-ref", conv.t_ref_mm, "Reference thickness, mm")->check(CLI::PositiveNumber);
  cv->add_option("--empty-threshold", conv.empty_threshold, "Densities below this (per mm) are left empty")
      ->check(CLI::NonNegativeNumber);
  cv->add_option("--exterior", conv.exterior, "Sub-threshold voxels: air or clear")
      ->check(CLI::IsMember({"air", "clear"}));
  cv->add_option("--baseline", conv.baseline, "none, or brute-force for the nearest-pigment baseline")
      ->check(CLI::IsMember({"none", "brute-force"}));
  cv->add_option("--neighborhood", conv.neighborhood, "Baseline neighborhood size (odd)");
  cv->add_flag("--srgb-input", conv.srgb_input, "Input colors are sRGB-encoded; linearize on ingest");

  PreviewConfig prev;
  auto* pv = app.add_subcommand("preview", "Render label slices and/or a source volume");
  pv->add_option("--slices", prev.slices, "Slice directory from convert");
  pv->add_option("--source", prev.source, "Radiance volume (.rvol) to render alongside");
  prev.pigments.add_to(pv);
  prev.sigma.add_to(pv);
  pv->add_option("--axes", prev.axes, "View axes (x, y, z)")->delimiter(',');
  pv->add_option("-o,--out", prev.out_dir, "Image output directory");
  pv->add_option("--mode", prev.mode, "composite (per-voxel colors) or mix (K-M color of local label mix)")
      ->check(CLI::IsMember({"composite", "mix"}));
  pv->add_option("--color-thickness", prev.color_thickness_mm, "Thickness for label colors, mm")
      ->check(CLI::PositiveNumber);
  pv->add_option("--density-scale", prev.density_scale, "Multiplier on source densities")->check(CLI::NonNegativeNumber);

  StatsConfig stats;
  auto* st = app.add_subcommand("stats", "Pigment, volume and LUT diagnostics");
  stats.pigments.add_to(st);
  stats.sigma.add_to(st);
  st->add_option("--t-ref", stats.t_ref_mm, "Reference thickness, mm")->check(CLI::PositiveNumber);
  st->add_flag("--tables", stats.tables, "Dump the colorimetric tables and per-pigment density fit errors");
  st->add_option("--volume", stats.volume, "Summarize a radiance volume instead");
  st->add_option("--lut", stats.lut, "Summarize a color LUT instead");

  MakeVolumeConfig make;
  auto* mk = app.add_subcommand("make-volume", "Write a synthetic radiance volume");
  mk->add_option("--recipe", make.recipe, "solid-sphere, cloud, fur-shell, gradient-cube")->required();
  mk->add_option("--dims", make.dims, "N or NX,NY,NZ");
  mk->add_option("--seed", make.seed, "Generator seed");
  mk->add_option("-o,--output", make.output, "Output .rvol")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*cal) {
      if (calibrate.synth.empty() && calibrate.measurements.empty()) {
        throw ConfigError("calibrate needs --synth or --measurements");
      }
      return cmd_calibrate(calibrate, out);
    }
    if (*lut) return cmd_build_lut(build, out);
    if (*cv) return cmd_convert(conv, out);
    if (*pv) return cmd_preview(prev, out);
    if (*st) return cmd_stats(stats, out);
    if (*mk) return cmd_make_volume(make, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace voxprint
