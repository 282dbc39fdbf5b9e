#include "voxprint/calib.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "voxprint/errors.hpp"

namespace voxprint {

using json = nlohmann::json;

void validate_record(const MeasurementRecord& record) {
  const std::string name(pigment_name(record.pigment));
  if (!(record.sample_thickness_mm > 0.0)) {
    throw FormatError("measurement for " + name + " has non-positive thickness");
  }
  if (record.reflectance.size() != kBandCount || record.transmittance.size() != kBandCount) {
    throw FormatError("measurement for " + name + " does not have " + std::to_string(kBandCount) + " bands");
  }
  for (std::size_t i = 0; i < kBandCount; ++i) {
    const double r = record.reflectance[i];
    const double t = record.transmittance[i];
    if (!(r >= 0.0 && r <= 1.0) || !(t >= 0.0 && t <= 1.0)) {
      throw FormatError("measurement for " + name + " band " + std::to_string(i) + ": R or T outside [0, 1]");
    }
    if (r + t > 1.0 + kMeasurementTolerance) {
      throw FormatError("measurement for " + name + " band " + std::to_string(i) +
                        ": R + T = " + std::to_string(r + t) + " exceeds 1");
    }
  }
}

namespace {

struct Residual {
  double r;
  double t;
  double cost() const { return r * r + t * t; }
};

Residual band_residual(double k, double s, double thickness, double meas_r, double meas_t) {
  const auto m = km_band(k, s, thickness);
  return {m.reflectance - meas_r, m.transmittance - meas_t};
}

BandFit lm_from(double k, double s, double thickness, double meas_r, double meas_t,
                const InversionOptions& opt) {
  double damping = opt.initial_damping;
  Residual res = band_residual(k, s, thickness, meas_r, meas_t);
  double cost = res.cost();
  for (int iter = 0; iter < opt.max_iterations && cost > 0.0; ++iter) {
    // Central-difference Jacobian; one-sided where the step would cross zero.
    std::array<double, 2> p{k, s};
    double jac[2][2];
    for (int i = 0; i < 2; ++i) {
      const double h = opt.relative_step * std::max(std::abs(p[i]), 1e-3);
      auto plus = p;
      auto minus = p;
      plus[i] += h;
      minus[i] = std::max(0.0, p[i] - h);
      const auto rp = band_residual(plus[0], plus[1], thickness, meas_r, meas_t);
      const auto rm = band_residual(minus[0], minus[1], thickness, meas_r, meas_t);
      const double span = plus[i] - minus[i];
      jac[0][i] = (rp.r - rm.r) / span;
      jac[1][i] = (rp.t - rm.t) / span;
    }
    const double a00 = jac[0][0] * jac[0][0] + jac[1][0] * jac[1][0];
    const double a01 = jac[0][0] * jac[0][1] + jac[1][0] * jac[1][1];
    const double a11 = jac[0][1] * jac[0][1] + jac[1][1] * jac[1][1];
    const double g0 = jac[0][0] * res.r + jac[1][0] * res.t;
    const double g1 = jac[0][1] * res.r + jac[1][1] * res.t;

    bool accepted = false;
    double step_norm = 0.0;
    while (damping < 1e16) {
      // Marquardt scaling keeps the damping invariant to parameter units.
      const double m00 = a00 + damping * std::max(a00, 1e-300);
      const double m11 = a11 + damping * std::max(a11, 1e-300);
      const double det = m00 * m11 - a01 * a01;
      if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
        damping *= 10.0;
        continue;
      }
      const double d0 = -(m11 * g0 - a01 * g1) / det;
      const double d1 = -(m00 * g1 - a01 * g0) / det;
      const double nk = std::max(0.0, k + d0);
      const double ns = std::max(0.0, s + d1);
      const auto trial = band_residual(nk, ns, thickness, meas_r, meas_t);
      const double trial_cost = trial.cost();
      if (trial_cost < cost) {
        step_norm = std::hypot(nk - k, ns - s);
        k = nk;
        s = ns;
        res = trial;
        cost = trial_cost;
        damping = std::max(damping * 0.1, 1e-15);
        accepted = true;
        break;
      }
      damping *= 10.0;
    }
    if (!accepted || step_norm < opt.step_tolerance) break;
  }
  return {k, s, cost};
}

}  // namespace

BandFit invert_band(double reflectance, double transmittance, double thickness_mm, const InversionOptions& options) {
  if (!(thickness_mm > 0.0)) throw DomainError("sample thickness must be positive");
  // Clear and other near-vacuum samples: the inverse is degenerate, take
  // the trivial solution.
  const double vacuum_cost = band_residual(0.0, 0.0, thickness_mm, reflectance, transmittance).cost();
  if (vacuum_cost < options.clear_residual) return {0.0, 0.0, vacuum_cost};

  static constexpr std::array<std::array<double, 2>, 4> kStarts = {{{0.1, 0.1}, {1.0, 0.1}, {0.1, 1.0}, {5.0, 5.0}}};
  BandFit best{0.0, 0.0, std::numeric_limits<double>::infinity()};
  for (const auto& start : kStarts) {
    const auto fit = lm_from(start[0], start[1], thickness_mm, reflectance, transmittance, options);
    if (fit.residual < best.residual) best = fit;
  }
  return best;
}

InversionResult invert_km(const MeasurementRecord& record, const InversionOptions& options) {
  validate_record(record);
  InversionResult out;
  out.profile.id = record.pigment;
  out.profile.absorption = Spectrum(kDefaultGrid);
  out.profile.scattering = Spectrum(kDefaultGrid);
  out.band_residuals.resize(kBandCount);
  for (std::size_t i = 0; i < kBandCount; ++i) {
    const auto fit = invert_band(record.reflectance[i], record.transmittance[i], record.sample_thickness_mm, options);
    out.profile.absorption[i] = fit.absorption;
    out.profile.scattering[i] = fit.scattering;
    out.band_residuals[i] = fit.residual;
    if (fit.residual > options.flag_residual) out.flagged_bands.push_back(i);
  }
  return out;
}

MeasurementRecord forward_record(const PigmentProfile& profile, double thickness_mm) {
  const auto layer = km_layer(profile.absorption, profile.scattering, thickness_mm);
  return {profile.id, thickness_mm, layer.reflectance, layer.transmittance};
}

// ---------------------------------------------------------------------------
// Synthetic pigments

namespace {

struct Bump {
  double center_nm;
  double width_nm;
  double height;
};

// floor + sum of Gaussian bumps, per mm.
struct CoefficientRecipe {
  double floor;
  std::vector<Bump> bumps;
};

Spectrum make_spectrum(const CoefficientRecipe& recipe) {
  Spectrum out(kDefaultGrid, recipe.floor);
  for (std::size_t i = 0; i < kBandCount; ++i) {
    const double lambda = kDefaultGrid.wavelength(i);
    for (const auto& b : recipe.bumps) {
      const double z = (lambda - b.center_nm) / b.width_nm;
      out[i] += b.height * std::exp(-0.5 * z * z);
    }
  }
  return out;
}

struct PigmentRecipe {
  Pigment id;
  CoefficientRecipe absorption;
  CoefficientRecipe scattering;
  // When positive, S is this fraction of K in every band instead.
  double scatter_ratio = 0.0;
};

PigmentSet build_set(const std::vector<PigmentRecipe>& recipes) {
  std::vector<PigmentProfile> profiles;
  for (const auto& r : recipes) {
    PigmentProfile p;
    p.id = r.id;
    p.absorption = make_spectrum(r.absorption);
    p.scattering = r.scatter_ratio > 0.0 ? p.absorption * r.scatter_ratio : make_spectrum(r.scattering);
    profiles.push_back(std::move(p));
  }
  return PigmentSet(std::move(profiles));
}

const CoefficientRecipe kZero{0.0, {}};

std::vector<PigmentRecipe> default_recipes() {
  return {
      {Pigment::C, {0.05, {{640.0, 55.0, 6.0}}}, {0.5, {}}},
      {Pigment::M, {0.05, {{540.0, 40.0, 6.0}}}, {0.5, {}}},
      {Pigment::Y, {0.05, {{440.0, 35.0, 6.0}}}, {0.5, {}}},
      {Pigment::K, {8.0, {}}, {0.5, {}}},
      {Pigment::W, {0.005, {}}, {12.0, {}}},
      {Pigment::Cl, kZero, kZero},
  };
}

}  // namespace

std::vector<std::string> synth_recipe_names() { return {"default", "absorber-heavy", "scatter-heavy"}; }

PigmentSet synth_pigment_set(std::string_view recipe_name) {
  if (recipe_name == "default") return build_set(default_recipes());
  if (recipe_name == "absorber-heavy") {
    return build_set({
        {Pigment::C, {0.3, {{640.0, 55.0, 6.0}}}, kZero, 0.08},
        {Pigment::M, {0.3, {{540.0, 40.0, 6.0}}}, kZero, 0.08},
        {Pigment::Y, {0.3, {{440.0, 35.0, 6.0}}}, kZero, 0.08},
        {Pigment::K, {8.0, {}}, kZero, 0.02},
        {Pigment::W, {0.4, {}}, kZero, 0.1},
        {Pigment::Cl, kZero, kZero},
    });
  }
  if (recipe_name == "scatter-heavy") {
    return build_set({
        {Pigment::C, {0.05, {{640.0, 55.0, 6.0}}}, {2.0, {}}},
        {Pigment::M, {0.05, {{540.0, 40.0, 6.0}}}, {2.0, {}}},
        {Pigment::Y, {0.05, {{440.0, 35.0, 6.0}}}, {2.0, {}}},
        {Pigment::K, {8.0, {}}, {2.0, {}}},
        {Pigment::W, {0.005, {}}, {25.0, {}}},
        {Pigment::Cl, kZero, kZero},
    });
  }
  throw ConfigError("unknown pigment recipe '" + std::string(recipe_name) +
                    "' (expected default, absorber-heavy, scatter-heavy)");
}

PigmentSet pure_absorber_pigment_set() {
  auto recipes = default_recipes();
  for (auto& r : recipes) {
    r.scattering = kZero;
    r.scatter_ratio = 0.0;
  }
  return build_set(recipes);
}

// ---------------------------------------------------------------------------
// Calibration file

namespace {

std::vector<double> read_array(const json& node, const std::string& what) {
  if (!node.is_array()) throw FormatError(what + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(node.size());
  for (const auto& v : node) {
    if (!v.is_number()) throw FormatError(what + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  if (out.size() != kBandCount) {
    throw FormatError(what + " has " + std::to_string(out.size()) + " values, expected " + std::to_string(kBandCount));
  }
  return out;
}

Pigment read_pigment(const json& node) {
  if (!node.contains("pigment") || !node["pigment"].is_string()) throw FormatError("entry without pigment name");
  const auto name = node["pigment"].get<std::string>();
  const auto p = parse_pigment(name);
  if (!p) throw FormatError("unknown pigment '" + name + "'");
  return *p;
}

template <typename Entries>
void require_all_pigments(const Entries& entries, const std::string& section) {
  std::array<bool, kPigmentCount> seen{};
  for (Pigment p : entries) {
    if (seen[index_of(p)]) throw FormatError(section + ": duplicate pigment " + std::string(pigment_name(p)));
    seen[index_of(p)] = true;
  }
  for (Pigment p : kAllPigments) {
    if (!seen[index_of(p)]) throw FormatError(section + ": missing pigment " + std::string(pigment_name(p)));
  }
}

}  // namespace

CalibrationFile parse_calibration(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("calibration parse error: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("calibration document must be an object");
  if (!doc.contains("version") || !doc["version"].is_number_integer()) throw FormatError("calibration: missing version");
  CalibrationFile file;
  file.version = doc["version"].get<int>();
  if (file.version != CalibrationFile::kVersion) {
    throw FormatError("calibration version " + std::to_string(file.version) + " unsupported (expected " +
                      std::to_string(CalibrationFile::kVersion) + ")");
  }
  if (!doc.contains("grid") || !doc["grid"].is_object()) throw FormatError("calibration: missing grid");
  const auto& g = doc["grid"];
  try {
    file.grid = {g.at("start_nm").get<double>(), g.at("end_nm").get<double>(), g.at("step_nm").get<double>()};
  } catch (const json::exception&) {
    throw FormatError("calibration: grid needs numeric start_nm, end_nm, step_nm");
  }
  if (!(file.grid == kDefaultGrid)) {
    throw ConfigError("calibration grid mismatch: expected 380-750 nm at 10 nm");
  }

  if (!doc.contains("measurements") || !doc["measurements"].is_array()) {
    throw FormatError("calibration: missing measurements");
  }
  std::vector<Pigment> ids;
  for (const auto& m : doc["measurements"]) {
    MeasurementRecord rec;
    rec.pigment = read_pigment(m);
    const std::string name(pigment_name(rec.pigment));
    if (!m.contains("thickness_mm") || !m["thickness_mm"].is_number()) {
      throw FormatError("measurement " + name + ": missing thickness_mm");
    }
    rec.sample_thickness_mm = m["thickness_mm"].get<double>();
    if (!m.contains("R") || !m.contains("T")) throw FormatError("measurement " + name + ": missing R or T");
    rec.reflectance = Spectrum(kDefaultGrid, read_array(m["R"], "measurement " + name + " R"));
    rec.transmittance = Spectrum(kDefaultGrid, read_array(m["T"], "measurement " + name + " T"));
    validate_record(rec);
    ids.push_back(rec.pigment);
    file.measurements.push_back(std::move(rec));
  }
  require_all_pigments(ids, "measurements");

  if (doc.contains("solved")) {
    if (!doc["solved"].is_array()) throw FormatError("calibration: solved must be an array");
    std::vector<PigmentProfile> profiles;
    ids.clear();
    for (const auto& s : doc["solved"]) {
      PigmentProfile p;
      p.id = read_pigment(s);
      const std::string name(pigment_name(p.id));
      if (!s.contains("K") || !s.contains("S")) throw FormatError("solved " + name + ": missing K or S");
      p.absorption = Spectrum(kDefaultGrid, read_array(s["K"], "solved " + name + " K"));
      p.scattering = Spectrum(kDefaultGrid, read_array(s["S"], "solved " + name + " S"));
      ids.push_back(p.id);
      profiles.push_back(std::move(p));
    }
    require_all_pigments(ids, "solved");
    try {
      file.solved.emplace(std::move(profiles));
    } catch (const ConfigError& e) {
      throw FormatError(std::string("solved: ") + e.what());
    }
  }
  return file;
}

std::string format_calibration(const CalibrationFile& file) {
  json doc;
  doc["version"] = file.version;
  doc["grid"] = {{"start_nm", file.grid.start_nm}, {"end_nm", file.grid.end_nm}, {"step_nm", file.grid.step_nm}};
  doc["measurements"] = json::array();
  for (const auto& m : file.measurements) {
    doc["measurements"].push_back({{"pigment", std::string(pigment_name(m.pigment))},
                                   {"thickness_mm", m.sample_thickness_mm},
                                   {"R", std::vector<double>(m.reflectance.values().begin(), m.reflectance.values().end())},
                                   {"T", std::vector<double>(m.transmittance.values().begin(),
                                                             m.transmittance.values().end())}});
  }
  if (file.solved) {
    doc["solved"] = json::array();
    for (const auto& p : file.solved->profiles()) {
      doc["solved"].push_back({{"pigment", std::string(pigment_name(p.id))},
                               {"K", std::vector<double>(p.absorption.values().begin(), p.absorption.values().end())},
                               {"S", std::vector<double>(p.scattering.values().begin(), p.scattering.values().end())}});
    }
  }
  return doc.dump(2) + "\n";
}

CalibrationFile load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open calibration file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_calibration(ss.str());
}

void save_calibration(const CalibrationFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write calibration file " + path.string());
  out << format_calibration(file);
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace voxprint
