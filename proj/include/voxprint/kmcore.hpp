#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "voxprint/spectral.hpp"

namespace voxprint {

enum class Pigment : std::uint8_t { C = 0, M = 1, Y = 2, K = 3, W = 4, Cl = 5 };

inline constexpr std::size_t kPigmentCount = 6;
inline constexpr std::array<Pigment, kPigmentCount> kAllPigments = {
    Pigment::C, Pigment::M, Pigment::Y, Pigment::K, Pigment::W, Pigment::Cl};

constexpr std::size_t index_of(Pigment p) { return static_cast<std::size_t>(p); }
std::string_view pigment_name(Pigment p);
std::optional<Pigment> parse_pigment(std::string_view name);

struct PigmentProfile {
  Pigment id = Pigment::Cl;
  Spectrum absorption;  // K, per mm
  Spectrum scattering;  // S, per mm
};

/// Exactly one profile per pigment, stored in Pigment order.
class PigmentSet {
 public:
  /// Throws ConfigError on missing/duplicate pigments, grid mismatch, or
  /// negative coefficients.
  explicit PigmentSet(std::vector<PigmentProfile> profiles);

  const PigmentProfile& operator[](Pigment p) const { return profiles_[index_of(p)]; }
  const std::array<PigmentProfile, kPigmentCount>& profiles() const { return profiles_; }

  /// FNV-1a over the K and S bit patterns; identifies LUT caches.
  std::uint64_t hash() const;

 private:
  std::array<PigmentProfile, kPigmentCount> profiles_;
};

/// Barycentric mixture weights over {C, M, Y, K, W, Cl}.
struct Concentration {
  std::array<double, kPigmentCount> c{};

  double operator[](Pigment p) const { return c[index_of(p)]; }
  double& operator[](Pigment p) { return c[index_of(p)]; }

  static Concentration pure(Pigment p) {
    Concentration out;
    out[p] = 1.0;
    return out;
  }
  /// Componentwise a·x + (1 − a)·y.
  static Concentration blend(double a, const Concentration& x, const Concentration& y);

  double sum() const;
  /// Each component in [0, 1] and the sum equal to one within tol.
  bool is_valid(double tol = 1e-9) const;
  bool operator==(const Concentration&) const = default;
};

struct LayerOptics {
  Spectrum reflectance;
  Spectrum transmittance;
  double thickness_mm = 0.0;
};

/// Per-band reflectance / transmittance pair.
struct BandOptics {
  double reflectance;
  double transmittance;
};

/// Below this scattering (per mm) a band is treated as a pure absorber.
inline constexpr double kScatterEpsilon = 1e-9;
/// Both coefficients below this: vacuum layer.
inline constexpr double kVacuumEpsilon = 1e-12;

/// Kubelka-Munk slab of absorption K and scattering S (per mm) at thickness
/// t (mm). Uses the hyperbolic form rewritten in terms of
/// beta = sqrt(K^2 + 2KS) and tanh, which stays finite for large K*t and
/// reduces continuously to Bouguer's law as S -> 0.
BandOptics km_band(double absorption, double scattering, double thickness_mm);

/// (K_C, S_C) = sum_i c_i (K_i, S_i).
std::pair<Spectrum, Spectrum> mix_ks(const PigmentSet& set, const Concentration& conc);

/// Throws DomainError for non-positive thickness.
LayerOptics km_layer(const Spectrum& absorption, const Spectrum& scattering, double thickness_mm);

/// Color of the mixture seen as R + T at t_ref_mm under D65.
RgbColor concentration_to_rgb(const PigmentSet& set, const Concentration& conc, double t_ref_mm);

/// Thickness samples for the exponential fit: midpoints of `samples` equal
/// bins of (0, t_max].
std::vector<double> fit_thicknesses(double t_max_mm, int samples);

inline constexpr double kDefaultFitThicknessMm = 5.0;
inline constexpr int kDefaultFitSamples = 100;

/// Decay rate sigma minimizing sum_t (exp(-sigma t) - T(t))^2 over the fit
/// thicknesses, T from km_band. Root of the derivative by safeguarded
/// Newton/bisection to 1e-9.
double fit_sigma_band(double absorption, double scattering, double t_max_mm = kDefaultFitThicknessMm,
                      int samples = kDefaultFitSamples);

/// Mean of |exp(-sigma t) - T(t)| over the fit thicknesses.
double sigma_fit_error(double absorption, double scattering, double sigma, double t_max_mm = kDefaultFitThicknessMm,
                       int samples = kDefaultFitSamples);

/// How per-band decay rates collapse to the scalar density.
enum class SigmaAveraging {
  /// -(1/dt) ln(mean_band exp(-sigma_band dt)): the decay rate of the
  /// band-averaged transmittance over a step dt.
  kTransmittanceMean,
  /// Plain mean of sigma_band over bands (the dt -> 0 limit).
  kRateMean,
};

struct SigmaOptions {
  double delta_t_mm = 1.0;
  double t_max_mm = kDefaultFitThicknessMm;
  int samples = kDefaultFitSamples;
  SigmaAveraging averaging = SigmaAveraging::kTransmittanceMean;
};

/// Collapses per-band decay rates to one scalar per `options.averaging`.
double average_sigma(std::span<const double> band_sigma, const SigmaOptions& options);

/// Scalar density of a mixture: per-band fit followed by average_sigma.
double sigma_scalar(const PigmentSet& set, const Concentration& conc, const SigmaOptions& options = {});

/// Per-band fitted decay rates of a mixture.
std::vector<double> sigma_bands(const PigmentSet& set, const Concentration& conc, const SigmaOptions& options = {});

}  // namespace voxprint
