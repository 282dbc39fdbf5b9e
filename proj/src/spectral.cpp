#include "voxprint/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "voxprint/errors.hpp"

namespace voxprint {

std::size_t WavelengthGrid::band_count() const {
  return static_cast<std::size_t>(std::floor((end_nm - start_nm) / step_nm + 1e-9)) + 1;
}

void validate_grid(const WavelengthGrid& grid) {
  if (!(grid.step_nm > 0.0) || !(grid.end_nm >= grid.start_nm) || !std::isfinite(grid.start_nm) ||
      !std::isfinite(grid.end_nm)) {
    throw ConfigError("invalid wavelength grid: start " + std::to_string(grid.start_nm) + " end " +
                      std::to_string(grid.end_nm) + " step " + std::to_string(grid.step_nm));
  }
}

Spectrum::Spectrum(const WavelengthGrid& grid, double fill) : grid_(grid) {
  validate_grid(grid);
  values_.assign(grid.band_count(), fill);
}

Spectrum::Spectrum(const WavelengthGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  validate_grid(grid);
  if (values_.size() != grid.band_count()) {
    throw ConfigError("spectrum has " + std::to_string(values_.size()) + " values, grid needs " +
                      std::to_string(grid.band_count()));
  }
}

double Spectrum::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

Spectrum& Spectrum::operator+=(const Spectrum& other) {
  if (!(grid_ == other.grid_)) throw ConfigError("spectrum grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Spectrum& Spectrum::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

double distance(const RgbColor& a, const RgbColor& b) {
  const double dr = a.r - b.r;
  const double dg = a.g - b.g;
  const double db = a.b - b.b;
  return std::sqrt(dr * dr + dg * dg + db * db);
}

double mean_brightness(const RgbColor& color) { return (color.r + color.g + color.b) / 3.0; }

const CieTables& cie_tables() {
  // CIE 1931 2° standard observer (CIE 018:2019 tabulation at 10 nm) and
  // CIE standard illuminant D65 relative SPD (ISO 11664-2), 380..750 nm.
  static const CieTables tables{
      {0.001368, 0.004243, 0.01431, 0.04351, 0.13438, 0.2839,  0.34828, 0.3362,  0.2908,  0.19536,
       0.09564,  0.03201,  0.0049,  0.0093,  0.06327, 0.1655,  0.2904,  0.4334499, 0.5945, 0.7621,
       0.9163,   1.0263,   1.0622,  1.0026,  0.8544499, 0.6424, 0.4479,  0.2835,  0.1649,  0.0874,
       0.04677,  0.0227,   0.01135916, 0.005790346, 0.002899327, 0.001439971, 0.0006900786,
       0.0003323011},
      {0.000039, 0.00012, 0.000396, 0.00121, 0.004,   0.0116,   0.023,  0.038,   0.06,    0.09098,
       0.13902,  0.20802, 0.323,    0.503,   0.71,    0.862,    0.954,  0.9949501, 0.995, 0.952,
       0.87,     0.757,   0.631,    0.503,   0.381,   0.265,    0.175,  0.107,   0.061,   0.032,
       0.017,    0.00821, 0.004102, 0.002091, 0.001047, 0.00052, 0.0002492, 0.00012},
      {0.006450001, 0.02005001, 0.06785001, 0.2074, 0.6456, 1.3856, 1.74706, 1.77211, 1.6692,
       1.28764,     0.8129501,  0.46518,    0.272,  0.1582, 0.07824999, 0.04216, 0.0203,
       0.008749999, 0.0039,     0.0021,     0.001650001, 0.0011, 0.0008, 0.00034, 0.00019,
       0.00004999999, 0.00002, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
      {49.9755, 54.6482, 82.7549, 91.486,  93.4318, 86.6823, 104.865, 117.008, 117.812, 114.861,
       115.923, 108.811, 109.354, 107.802, 104.79,  107.689, 104.405, 104.046, 100.0,   96.3342,
       95.788,  88.6856, 90.0062, 89.5991, 87.6987, 83.2886, 83.6992, 80.0268, 80.2146, 82.2778,
       78.2842, 69.7213, 71.6091, 74.349,  61.604,  69.8856, 75.087,  63.5927}};
  return tables;
}

Xyz d65_white() {
  constexpr double x = 0.3127;
  constexpr double y = 0.3290;
  return {x / y, 1.0, (1.0 - x - y) / y};
}

namespace {

std::array<double, 9> invert3(const std::array<double, 9>& m) {
  const double a = m[0], b = m[1], c = m[2];
  const double d = m[3], e = m[4], f = m[5];
  const double g = m[6], h = m[7], i = m[8];
  const double det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  return {(e * i - f * h) / det, (c * h - b * i) / det, (b * f - c * e) / det,
          (f * g - d * i) / det, (a * i - c * g) / det, (c * d - a * f) / det,
          (d * h - e * g) / det, (b * g - a * h) / det, (a * e - b * d) / det};
}

std::array<double, 9> build_xyz_to_rgb() {
  // Rec.709 primaries, columns are primary XYZ scaled so R+G+B = white.
  constexpr double px[3] = {0.64, 0.30, 0.15};
  constexpr double py[3] = {0.33, 0.60, 0.06};
  std::array<double, 9> p{};
  for (int k = 0; k < 3; ++k) {
    p[0 * 3 + k] = px[k] / py[k];
    p[1 * 3 + k] = 1.0;
    p[2 * 3 + k] = (1.0 - px[k] - py[k]) / py[k];
  }
  const auto pinv = invert3(p);
  const Xyz w = d65_white();
  double scale[3];
  for (int k = 0; k < 3; ++k) scale[k] = pinv[k * 3 + 0] * w.x + pinv[k * 3 + 1] * w.y + pinv[k * 3 + 2] * w.z;
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) p[r * 3 + k] *= scale[k];
  return invert3(p);
}

struct XyzWeights {
  std::array<double, kBandCount> x, y, z;
  double y_norm;
};

const XyzWeights& xyz_weights() {
  static const XyzWeights w = [] {
    const auto& t = cie_tables();
    const Xyz white = d65_white();
    double sx = 0.0, sy = 0.0, sz = 0.0;
    for (std::size_t i = 0; i < kBandCount; ++i) {
      sx += t.d65[i] * t.xbar[i];
      sy += t.d65[i] * t.ybar[i];
      sz += t.d65[i] * t.zbar[i];
    }
    XyzWeights out{};
    for (std::size_t i = 0; i < kBandCount; ++i) {
      out.x[i] = white.x * t.d65[i] * t.xbar[i] / sx;
      out.y[i] = white.y * t.d65[i] * t.ybar[i] / sy;
      out.z[i] = white.z * t.d65[i] * t.zbar[i] / sz;
    }
    out.y_norm = sy;
    // Self-check: the ybar weights integrate to exactly one.
    double ysum = 0.0;
    for (double v : out.y) ysum += v;
    if (std::abs(ysum - 1.0) > 1e-12) throw ConfigError("CIE table normalization inconsistent");
    return out;
  }();
  return w;
}

}  // namespace

const std::array<double, 9>& xyz_to_rgb_matrix() {
  static const std::array<double, 9> m = build_xyz_to_rgb();
  return m;
}

Xyz values_to_xyz(std::span<const double> values) {
  if (values.size() != kBandCount) {
    throw ConfigError("spectrum has " + std::to_string(values.size()) +
                      " bands; colorimetry tables need " + std::to_string(kBandCount));
  }
  const auto& w = xyz_weights();
  Xyz out;
  for (std::size_t i = 0; i < kBandCount; ++i) {
    out.x += values[i] * w.x[i];
    out.y += values[i] * w.y[i];
    out.z += values[i] * w.z[i];
  }
  return out;
}

Xyz spectrum_to_xyz(const Spectrum& spectrum) {
  if (!(spectrum.grid() == kDefaultGrid)) {
    throw ConfigError("spectrum grid does not match the 380-750 nm / 10 nm colorimetry tables");
  }
  return values_to_xyz(spectrum.values());
}

RgbColor xyz_to_linear_rgb(const Xyz& xyz) {
  const auto& m = xyz_to_rgb_matrix();
  return {m[0] * xyz.x + m[1] * xyz.y + m[2] * xyz.z, m[3] * xyz.x + m[4] * xyz.y + m[5] * xyz.z,
          m[6] * xyz.x + m[7] * xyz.y + m[8] * xyz.z};
}

RgbProjector::RgbProjector() {
  const auto& w = xyz_weights();
  const auto& m = xyz_to_rgb_matrix();
  for (int r = 0; r < 3; ++r) {
    for (std::size_t i = 0; i < kBandCount; ++i) {
      weights_[r][i] = m[r * 3 + 0] * w.x[i] + m[r * 3 + 1] * w.y[i] + m[r * 3 + 2] * w.z[i];
    }
  }
}

const RgbProjector& RgbProjector::instance() {
  static const RgbProjector p;
  return p;
}

RgbColor RgbProjector::project(std::span<const double> values) const {
  double acc[3] = {0.0, 0.0, 0.0};
  for (int r = 0; r < 3; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < kBandCount; ++i) s += weights_[r][i] * values[i];
    acc[r] = s;
  }
  return {acc[0], acc[1], acc[2]};
}

RgbColor clamp_unit(const RgbColor& c) {
  return {std::clamp(c.r, 0.0, 1.0), std::clamp(c.g, 0.0, 1.0), std::clamp(c.b, 0.0, 1.0)};
}

RgbColor spectrum_to_rgb(const Spectrum& spectrum) {
  return clamp_unit(xyz_to_linear_rgb(spectrum_to_xyz(spectrum)));
}

double linear_to_srgb(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double srgb_to_linear(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

}  // namespace voxprint
