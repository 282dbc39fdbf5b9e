#include "voxprint/kmcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "voxprint/errors.hpp"
#include "voxprint/hash.hpp"

namespace voxprint {

std::string_view pigment_name(Pigment p) {
  switch (p) {
    case Pigment::C: return "C";
    case Pigment::M: return "M";
    case Pigment::Y: return "Y";
    case Pigment::K: return "K";
    case Pigment::W: return "W";
    case Pigment::Cl: return "Cl";
  }
  return "?";
}

std::optional<Pigment> parse_pigment(std::string_view name) {
  for (Pigment p : kAllPigments) {
    if (pigment_name(p) == name) return p;
  }
  return std::nullopt;
}

PigmentSet::PigmentSet(std::vector<PigmentProfile> profiles) {
  std::array<bool, kPigmentCount> seen{};
  for (auto& profile : profiles) {
    const auto idx = index_of(profile.id);
    const std::string name(pigment_name(profile.id));
    if (seen[idx]) throw ConfigError("duplicate pigment " + name);
    seen[idx] = true;
    if (!(profile.absorption.grid() == kDefaultGrid) || !(profile.scattering.grid() == kDefaultGrid)) {
      throw ConfigError("pigment " + name + " is not on the 380-750 nm / 10 nm grid");
    }
    for (std::size_t i = 0; i < kBandCount; ++i) {
      const double k = profile.absorption[i];
      const double s = profile.scattering[i];
      if (!(k >= 0.0) || !(s >= 0.0) || !std::isfinite(k) || !std::isfinite(s)) {
        throw ConfigError("pigment " + name + " has a negative or non-finite coefficient at band " +
                          std::to_string(i));
      }
    }
    profiles_[idx] = std::move(profile);
  }
  for (Pigment p : kAllPigments) {
    if (!seen[index_of(p)]) throw ConfigError("missing pigment " + std::string(pigment_name(p)));
  }
}

std::uint64_t PigmentSet::hash() const {
  Fnv1a64 h;
  for (const auto& p : profiles_) {
    h.update_u64(index_of(p.id));
    for (double v : p.absorption.values()) h.update_f64(v);
    for (double v : p.scattering.values()) h.update_f64(v);
  }
  return h.digest();
}

Concentration Concentration::blend(double a, const Concentration& x, const Concentration& y) {
  Concentration out;
  for (std::size_t i = 0; i < kPigmentCount; ++i) out.c[i] = a * x.c[i] + (1.0 - a) * y.c[i];
  return out;
}

double Concentration::sum() const {
  double s = 0.0;
  for (double v : c) s += v;
  return s;
}

bool Concentration::is_valid(double tol) const {
  for (double v : c) {
    if (!(v >= -tol && v <= 1.0 + tol)) return false;
  }
  return std::abs(sum() - 1.0) <= tol;
}

BandOptics km_band(double absorption, double scattering, double thickness_mm) {
  const double k = absorption;
  const double s = scattering;
  const double t = thickness_mm;
  if (k < kVacuumEpsilon && s < kVacuumEpsilon) return {0.0, 1.0};
  if (s < kScatterEpsilon) return {0.0, std::exp(-k * t)};
  // b*S = beta; dividing numerator and denominator of the hyperbolic form
  // by beta*cosh(beta*t) leaves tanh(x)/beta and sech(x), x = beta*t.
  const double beta = std::sqrt(k * k + 2.0 * k * s);
  const double x = beta * t;
  // e = exp(-2x) - 1; tanh x = -e / (2 + e), sech x = 2 exp(-x) / (2 + e).
  const double e = std::expm1(-2.0 * x);
  const double tanh_over_beta = x < 1e-4 ? t * (1.0 - x * x / 3.0) : -e / ((2.0 + e) * beta);
  const double sech = 2.0 * std::exp(-x) / (2.0 + e);
  const double den = (s + k) * tanh_over_beta + 1.0;
  return {s * tanh_over_beta / den, sech / den};
}

std::pair<Spectrum, Spectrum> mix_ks(const PigmentSet& set, const Concentration& conc) {
  Spectrum k(kDefaultGrid, 0.0);
  Spectrum s(kDefaultGrid, 0.0);
  for (Pigment p : kAllPigments) {
    const double c = conc[p];
    if (c == 0.0) continue;
    const auto& prof = set[p];
    for (std::size_t i = 0; i < kBandCount; ++i) {
      k[i] += c * prof.absorption[i];
      s[i] += c * prof.scattering[i];
    }
  }
  return {std::move(k), std::move(s)};
}

LayerOptics km_layer(const Spectrum& absorption, const Spectrum& scattering, double thickness_mm) {
  if (!(thickness_mm > 0.0)) {
    throw DomainError("layer thickness must be positive, got " + std::to_string(thickness_mm));
  }
  if (!(absorption.grid() == scattering.grid())) throw ConfigError("K and S spectra on different grids");
  LayerOptics out{Spectrum(absorption.grid()), Spectrum(absorption.grid()), thickness_mm};
  for (std::size_t i = 0; i < absorption.size(); ++i) {
    const auto band = km_band(absorption[i], scattering[i], thickness_mm);
    out.reflectance[i] = band.reflectance;
    out.transmittance[i] = band.transmittance;
  }
  return out;
}

RgbColor concentration_to_rgb(const PigmentSet& set, const Concentration& conc, double t_ref_mm) {
  const auto [k, s] = mix_ks(set, conc);
  const auto layer = km_layer(k, s, t_ref_mm);
  std::array<double, kBandCount> sum{};
  for (std::size_t i = 0; i < kBandCount; ++i) sum[i] = layer.reflectance[i] + layer.transmittance[i];
  return clamp_unit(RgbProjector::instance().project(sum));
}

std::vector<double> fit_thicknesses(double t_max_mm, int samples) {
  if (!(t_max_mm > 0.0)) throw DomainError("t_max must be positive");
  if (samples < 2) throw DomainError("need at least two thickness samples");
  std::vector<double> t(static_cast<std::size_t>(samples));
  const double h = t_max_mm / samples;
  for (int j = 0; j < samples; ++j) t[static_cast<std::size_t>(j)] = (j + 0.5) * h;
  return t;
}

namespace {

constexpr double kSigmaCeiling = 1e6;

// Transmittance at the bin midpoints t_j = (j + 1/2) h. For beta*t_max
// comfortably away from zero, exp(-beta t_j) is advanced by a constant
// ratio instead of one exp per sample.
void sample_transmittance(double k, double s, double t_max, int samples, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(samples));
  const double h = t_max / samples;
  const double beta = (s < kScatterEpsilon) ? k : std::sqrt(k * k + 2.0 * k * s);
  if ((k < kVacuumEpsilon && s < kVacuumEpsilon) || beta * t_max < 0.05) {
    for (int j = 0; j < samples; ++j) out[static_cast<std::size_t>(j)] = km_band(k, s, (j + 0.5) * h).transmittance;
    return;
  }
  if (s < kScatterEpsilon) {
    double u = std::exp(-0.5 * k * h);
    const double ratio = std::exp(-k * h);
    for (int j = 0; j < samples; ++j) {
      out[static_cast<std::size_t>(j)] = u;
      u *= ratio;
    }
    return;
  }
  double u = std::exp(-0.5 * beta * h);
  const double ratio = std::exp(-beta * h);
  const double sk = s + k;
  for (int j = 0; j < samples; ++j) {
    const double u2 = u * u;
    out[static_cast<std::size_t>(j)] = 2.0 * u * beta / (sk * (1.0 - u2) + beta * (1.0 + u2));
    u *= ratio;
  }
}

// g(sigma) = sum_j t_j v_j (v_j - T_j), v_j = exp(-sigma t_j); the fit
// objective's derivative is -2 g. Also returns g'.
struct FitDerivative {
  double g;
  double dg;
};

FitDerivative fit_derivative(double sigma, double h, std::span<const double> target) {
  double v = std::exp(-0.5 * sigma * h);
  const double ratio = std::exp(-sigma * h);
  double g = 0.0;
  double dg = 0.0;
  for (std::size_t j = 0; j < target.size(); ++j) {
    const double t = (static_cast<double>(j) + 0.5) * h;
    const double diff = v - target[j];
    g += t * v * diff;
    dg -= t * t * v * (2.0 * v - target[j]);
    v *= ratio;
  }
  return {g, dg};
}

double fit_sigma_samples(std::span<const double> target, double t_max) {
  const double h = t_max / static_cast<double>(target.size());
  double lo = 0.0;
  const auto at_zero = fit_derivative(0.0, h, target);
  if (at_zero.g <= 0.0) return 0.0;

  // Initial guess from the middle sample; then expand until g changes sign.
  const std::size_t mid = target.size() / 2;
  const double t_mid = (static_cast<double>(mid) + 0.5) * h;
  double guess = target[mid] > 0.0 ? -std::log(target[mid]) / t_mid : 1.0;
  if (!(guess > 0.0) || !std::isfinite(guess)) guess = 1.0;
  double hi = std::max(guess * 2.0, 1e-6);
  auto at_hi = fit_derivative(hi, h, target);
  while (at_hi.g > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > kSigmaCeiling) return kSigmaCeiling;
    at_hi = fit_derivative(hi, h, target);
  }

  double sigma = std::clamp(guess, lo, hi);
  for (int iter = 0; iter < 200; ++iter) {
    const auto d = fit_derivative(sigma, h, target);
    if (d.g == 0.0) return sigma;
    if (d.g > 0.0) {
      lo = sigma;
    } else {
      hi = sigma;
    }
    double next = (d.dg < 0.0) ? sigma - d.g / d.dg : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - sigma);
    sigma = next;
    if (step < 1e-12 * std::max(1.0, sigma) || hi - lo < 1e-10) break;
  }
  return sigma;
}

}  // namespace

double fit_sigma_band(double absorption, double scattering, double t_max_mm, int samples) {
  if (!(t_max_mm > 0.0)) throw DomainError("t_max must be positive");
  if (samples < 2) throw DomainError("need at least two thickness samples");
  thread_local std::vector<double> target;
  sample_transmittance(absorption, scattering, t_max_mm, samples, target);
  return fit_sigma_samples(target, t_max_mm);
}

double sigma_fit_error(double absorption, double scattering, double sigma, double t_max_mm, int samples) {
  const auto t = fit_thicknesses(t_max_mm, samples);
  double err = 0.0;
  for (double ti : t) err += std::abs(std::exp(-sigma * ti) - km_band(absorption, scattering, ti).transmittance);
  return err / static_cast<double>(t.size());
}

double average_sigma(std::span<const double> band_sigma, const SigmaOptions& options) {
  if (band_sigma.empty()) return 0.0;
  const double n = static_cast<double>(band_sigma.size());
  if (options.averaging == SigmaAveraging::kRateMean) {
    double s = 0.0;
    for (double v : band_sigma) s += v;
    return s / n;
  }
  if (!(options.delta_t_mm > 0.0)) throw DomainError("delta_t must be positive");
  const double dt = options.delta_t_mm;
  const double lowest = *std::min_element(band_sigma.begin(), band_sigma.end());
  double acc = 0.0;
  for (double v : band_sigma) acc += std::exp(-(v - lowest) * dt);
  const double sigma = lowest - std::log(acc / n) / dt;
  return std::max(0.0, sigma);
}

std::vector<double> sigma_bands(const PigmentSet& set, const Concentration& conc, const SigmaOptions& options) {
  const auto [k, s] = mix_ks(set, conc);
  std::vector<double> out(kBandCount);
  for (std::size_t i = 0; i < kBandCount; ++i) {
    out[i] = fit_sigma_band(k[i], s[i], options.t_max_mm, options.samples);
  }
  return out;
}

double sigma_scalar(const PigmentSet& set, const Concentration& conc, const SigmaOptions& options) {
  const auto bands = sigma_bands(set, conc, options);
  return average_sigma(bands, options);
}

}  // namespace voxprint
