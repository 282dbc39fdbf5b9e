#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxprint/kmcore.hpp"

namespace voxprint {

/// One spectrophotometer reading of a pigment slab.
struct MeasurementRecord {
  Pigment pigment = Pigment::Cl;
  double sample_thickness_mm = 1.0;
  Spectrum reflectance;
  Spectrum transmittance;
};

/// Allowed excess of R + T over one in a measurement.
inline constexpr double kMeasurementTolerance = 0.02;

/// Throws FormatError naming the pigment and band on R, T outside [0, 1] or
/// R + T > 1 + kMeasurementTolerance.
void validate_record(const MeasurementRecord& record);

struct CalibrationFile {
  static constexpr int kVersion = 1;

  int version = kVersion;
  WavelengthGrid grid = kDefaultGrid;
  std::vector<MeasurementRecord> measurements;  // one per pigment
  std::optional<PigmentSet> solved;
};

struct InversionOptions {
  double relative_step = 1e-6;      // central-difference step, relative
  double initial_damping = 1e-3;
  int max_iterations = 200;
  double step_tolerance = 1e-10;
  double flag_residual = 1e-4;      // sum of squared R/T residuals
  double clear_residual = 1e-6;     // accept (0, 0) below this residual
};

struct InversionResult {
  PigmentProfile profile;
  std::vector<std::size_t> flagged_bands;  // residual above flag_residual
  std::vector<double> band_residuals;
};

/// Per-band (K, S) >= 0 best reproducing one (R, T) pair at thickness t.
struct BandFit {
  double absorption;
  double scattering;
  double residual;  // (R_model - R)^2 + (T_model - T)^2
};

/// Damped Gauss-Newton (Levenberg-Marquardt) on one band from fixed starts.
BandFit invert_band(double reflectance, double transmittance, double thickness_mm,
                    const InversionOptions& options = {});

/// Recovers K(lambda), S(lambda) from a measurement, band by band.
InversionResult invert_km(const MeasurementRecord& record, const InversionOptions& options = {});

/// Noise-free record of a profile measured at the given slab thickness.
MeasurementRecord forward_record(const PigmentProfile& profile, double thickness_mm);

/// Recipes: "default", "absorber-heavy", "scatter-heavy"; see
/// docs/pigments.md. Throws ConfigError on an unknown recipe.
PigmentSet synth_pigment_set(std::string_view recipe_name);
std::vector<std::string> synth_recipe_names();

/// Pigment set whose colored pigments have S = 0: sigma_scalar is then the
/// exact band transmittance average of Bouguer decays.
PigmentSet pure_absorber_pigment_set();

CalibrationFile load_calibration(const std::filesystem::path& path);
void save_calibration(const CalibrationFile& file, const std::filesystem::path& path);

CalibrationFile parse_calibration(std::string_view text);
std::string format_calibration(const CalibrationFile& file);

}  // namespace voxprint
