#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace voxprint {

/// Uniform wavelength sampling [start_nm, end_nm] with step step_nm.
struct WavelengthGrid {
  double start_nm = 380.0;
  double end_nm = 750.0;
  double step_nm = 10.0;

  std::size_t band_count() const;
  double wavelength(std::size_t band) const { return start_nm + step_nm * static_cast<double>(band); }

  bool operator==(const WavelengthGrid&) const = default;
};

/// 380–750 nm at 10 nm: 38 bands. Matches the embedded CIE tables.
inline constexpr WavelengthGrid kDefaultGrid{};
inline constexpr std::size_t kBandCount = 38;

/// Throws ConfigError unless the grid is a valid uniform grid.
void validate_grid(const WavelengthGrid& grid);

/// Per-band values on a wavelength grid. Reflectance and transmittance are
/// dimensionless; absorption and scattering are per millimeter.
class Spectrum {
 public:
  Spectrum() : Spectrum(kDefaultGrid) {}
  explicit Spectrum(const WavelengthGrid& grid, double fill = 0.0);
  Spectrum(const WavelengthGrid& grid, std::vector<double> values);

  static Spectrum constant(double v) { return Spectrum(kDefaultGrid, v); }

  const WavelengthGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double max() const;

  Spectrum& operator+=(const Spectrum& other);
  Spectrum& operator*=(double s);
  friend Spectrum operator+(Spectrum a, const Spectrum& b) { return a += b; }
  friend Spectrum operator*(Spectrum a, double s) { return a *= s; }
  friend Spectrum operator*(double s, Spectrum a) { return a *= s; }

 private:
  WavelengthGrid grid_;
  std::vector<double> values_;
};

/// Linear-light RGB with Rec.709 primaries and D65 white.
struct RgbColor {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  double operator[](std::size_t i) const { return i == 0 ? r : (i == 1 ? g : b); }
  bool operator==(const RgbColor&) const = default;
};

double distance(const RgbColor& a, const RgbColor& b);

/// (r + g + b) / 3.
double mean_brightness(const RgbColor& color);

struct Xyz {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Colorimetric tables sampled on kDefaultGrid.
struct CieTables {
  std::array<double, kBandCount> xbar;
  std::array<double, kBandCount> ybar;
  std::array<double, kBandCount> zbar;
  std::array<double, kBandCount> d65;
};

/// CIE 1931 2° observer and D65 relative SPD, 380–750 nm at 10 nm.
const CieTables& cie_tables();

/// D65 white point tristimulus (Y = 1) from its xy chromaticity.
Xyz d65_white();

/// Row-major linear XYZ → RGB matrix derived from Rec.709 primaries and d65_white().
const std::array<double, 9>& xyz_to_rgb_matrix();

/// Tristimulus values of a spectral ratio (reflectance, transmittance, or
/// their sum) lit by D65, normalized so the unit spectrum yields d65_white().
/// Throws ConfigError when the spectrum is not on kDefaultGrid.
Xyz spectrum_to_xyz(const Spectrum& spectrum);
Xyz values_to_xyz(std::span<const double> values);

RgbColor xyz_to_linear_rgb(const Xyz& xyz);

/// Projects a spectrum straight to linear RGB without clamping. The map is
/// linear; weights() exposes its 3 × 38 matrix so optimizers can chain
/// derivatives through it.
class RgbProjector {
 public:
  static const RgbProjector& instance();

  RgbColor project(std::span<const double> values) const;
  const std::array<std::array<double, kBandCount>, 3>& weights() const { return weights_; }

 private:
  RgbProjector();
  std::array<std::array<double, kBandCount>, 3> weights_{};
};

RgbColor clamp_unit(const RgbColor& c);

/// CMF projection under D65 followed by the XYZ → linear RGB matrix, clamped
/// to [0, 1] per channel.
RgbColor spectrum_to_rgb(const Spectrum& spectrum);

/// sRGB transfer curve, applied only when exporting images.
double linear_to_srgb(double v);
double srgb_to_linear(double v);

}  // namespace voxprint
