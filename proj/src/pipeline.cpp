#include "voxprint/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "voxprint/errors.hpp"
#include "voxprint/hash.hpp"
#include "voxprint/parallel.hpp"

namespace voxprint {

void AlignmentParams::validate() const {
  if (!(rho_plus_cap >= 0.0 && rho_plus_cap <= 1.0)) throw ConfigError("rho_plus_cap must lie in [0, 1]");
  if (!(sigma_empty_threshold >= 0.0)) throw ConfigError("sigma_empty_threshold must be non-negative");
  if (!(t_ref_mm > 0.0)) throw ConfigError("t_ref_mm must be positive");
  if (!(sigma.delta_t_mm > 0.0)) throw ConfigError("delta_t_mm must be positive");
}

// ---------------------------------------------------------------------------
// Density alignment

namespace {

constexpr double kNoOpTolerance = 1e-6;
constexpr double kDilutionTolerance = 1e-8;
constexpr int kBisectionIterations = 40;
constexpr double kBisectionTolerance = 1e-6;

AlignmentResult dilute(const PigmentSet& set, const Concentration& cstar, double sigma_star, double target,
                       const SigmaOptions& opts) {
  const Concentration clear = Concentration::pure(Pigment::Cl);
  AlignmentResult out{cstar, AlignBranch::kDiluted, 1.0, sigma_star, false};
  auto at = [&](double rho) { return Concentration::blend(rho, cstar, clear); };

  double rho = target / sigma_star;
  double s = sigma_scalar(set, at(rho), opts);
  const double tol = kDilutionTolerance * target;
  if (std::abs(s - target) <= tol) return {at(rho), AlignBranch::kDiluted, rho, s, false};

  // sigma is not linear in rho once bands differ; bracket the root on
  // [0, 1] and refine with Illinois-modified regula falsi.
  const double clear_sigma = sigma_scalar(set, clear, opts);
  if (clear_sigma >= target) return {clear, AlignBranch::kDiluted, 0.0, clear_sigma, clear_sigma > target + tol};
  double lo = 0.0, f_lo = clear_sigma - target;
  double hi = 1.0, f_hi = sigma_star - target;
  if (s > target) {
    hi = rho;
    f_hi = s - target;
  } else {
    lo = rho;
    f_lo = s - target;
  }
  double best_rho = rho, best_err = std::abs(s - target), best_sigma = s;
  int side = 0;
  for (int iter = 0; iter < 60 && hi - lo > 1e-15; ++iter) {
    double x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const double sx = sigma_scalar(set, at(x), opts);
    const double fx = sx - target;
    if (std::abs(fx) < best_err) {
      best_err = std::abs(fx);
      best_rho = x;
      best_sigma = sx;
    }
    if (best_err <= tol) break;
    if (fx > 0.0) {
      hi = x;
      f_hi = fx;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    } else {
      lo = x;
      f_lo = fx;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    }
  }
  out.concentration = at(best_rho);
  out.rho = best_rho;
  out.sigma = best_sigma;
  return out;
}

AlignmentResult augment(const PigmentSet& set, const RhoKLut& rhok, const Concentration& cstar, double target,
                        const RgbColor& color, const AlignmentParams& params) {
  const Concentration gray = gray_mix(lookup_rhok(rhok, mean_brightness(color)));
  auto at = [&](double x) { return Concentration::blend(x, gray, cstar); };
  const double cap = params.rho_plus_cap;

  const double s_cap = sigma_scalar(set, at(cap), params.sigma);
  if (s_cap < target) return {at(cap), AlignBranch::kAugmented, cap, s_cap, true};

  double lo = 0.0, hi = cap, s_hi = s_cap;
  for (int iter = 0; iter < kBisectionIterations && hi - lo > kBisectionTolerance; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double s = sigma_scalar(set, at(mid), params.sigma);
    if (s >= target) {
      hi = mid;
      s_hi = s;
    } else {
      lo = mid;
    }
  }
  return {at(hi), AlignBranch::kAugmented, hi, s_hi, false};
}

}  // namespace

AlignmentResult align_density(const PigmentSet& set, const RhoKLut& rhok, const Concentration& conc_star,
                              double sigma_star, double sigma_target, const RgbColor& target_color,
                              const AlignmentParams& params) {
  params.validate();
  if (!(sigma_target >= 0.0) || !std::isfinite(sigma_target)) throw DomainError("target density must be >= 0");
  if (!(sigma_star >= 0.0) || !std::isfinite(sigma_star)) throw DomainError("source density must be >= 0");
  const double scale = std::max(sigma_star, sigma_target);
  if (std::abs(sigma_star - sigma_target) <= kNoOpTolerance * scale) {
    return {conc_star, AlignBranch::kUnchanged, 1.0, sigma_star, false};
  }
  if (sigma_star > sigma_target) return dilute(set, conc_star, sigma_star, sigma_target, params.sigma);
  return augment(set, rhok, conc_star, sigma_target, target_color, params);
}

// ---------------------------------------------------------------------------
// Halftoning

ConcentrationVolume::ConcentrationVolume(Dims d, Pitch p)
    : dims(d), pitch(p), concentration(d.voxel_count()), occupied(d.voxel_count(), 0) {}

ConcentrationVolume ConcentrationVolume::uniform(Dims d, Pitch p, const Concentration& c) {
  ConcentrationVolume v(d, p);
  std::fill(v.concentration.begin(), v.concentration.end(), c);
  std::fill(v.occupied.begin(), v.occupied.end(), 1);
  return v;
}

std::uint64_t halftone_key(const HalftoneSeed& seed) { return splitmix64(seed.seed ^ splitmix64(seed.volume_hash)); }

double halftone_uniform(std::uint64_t key, std::size_t voxel_index) {
  return unit_interval(splitmix64(key + static_cast<std::uint64_t>(voxel_index) * 0x9e3779b97f4a7c15ULL));
}

namespace {

Label sample_label(const Concentration& c, double u) {
  double cumulative = 0.0;
  int last = -1;
  for (std::size_t p = 0; p < kPigmentCount; ++p) {
    if (c.c[p] <= 0.0) continue;
    last = static_cast<int>(p);
    cumulative += c.c[p];
    if (u < cumulative) return static_cast<Label>(p + 1);
  }
  // Only reachable when rounding leaves the total just under u.
  return last < 0 ? Label::Cl : static_cast<Label>(last + 1);
}

}  // namespace

LabelVolume halftone(const ConcentrationVolume& volume, const HalftoneSeed& seed, int workers) {
  if (volume.concentration.size() != volume.dims.voxel_count() || volume.occupied.size() != volume.dims.voxel_count()) {
    throw ConfigError("concentration volume size does not match its dims");
  }
  LabelVolume labels(volume.dims, volume.pitch);
  const std::uint64_t key = halftone_key(seed);
  parallel_chunks(volume.dims.voxel_count(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (!volume.occupied[i]) continue;
      labels.set(i, sample_label(volume.concentration[i], halftone_uniform(key, i)));
    }
  });
  return labels;
}

// ---------------------------------------------------------------------------
// Conversion

nlohmann::json ConversionReport::to_json() const {
  nlohmann::json j;
  j["voxels"] = voxels;
  j["empty"] = empty;
  j["branches"] = {{"unchanged", unchanged}, {"diluted", diluted}, {"augmented", augmented}};
  j["flags"] = {{"density_unreachable", density_flagged}, {"out_of_gamut", out_of_gamut}};
  j["residual"] = {{"p50", residual_p50}, {"p95", residual_p95}, {"p99", residual_p99}, {"max", residual_max}};
  j["alignment_max_rel_error"] = alignment_max_rel_error;
  j["sigma_target"] = {{"mean", sigma_mean},
                       {"max", sigma_max},
                       {"bin_width", kSigmaBinWidth},
                       {"histogram", sigma_histogram}};
  nlohmann::json hist = nlohmann::json::object();
  for (int code = 0; code < kLabelCount; ++code) hist[std::string(label_name(static_cast<Label>(code)))] = labels[code];
  j["labels"] = hist;
  j["seed"] = seed;
  return j;
}

namespace {

double percentile(const std::vector<float>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

constexpr std::uint8_t kEmptyCode = 0xff;

}  // namespace

ConversionResult convert(const RadianceVolume& volume, const PigmentSet& set, const ColorLut& color_lut,
                         const RhoKLut& rhok_lut, const ConvertParams& params) {
  params.alignment.validate();
  if (!(params.density_scale >= 0.0) || !std::isfinite(params.density_scale)) {
    throw ConfigError("density scale must be non-negative");
  }
  const std::uint64_t hash = set.hash();
  if (color_lut.set_hash() != hash) {
    throw ConfigError("color LUT was built for pigment set " + hex64(color_lut.set_hash()) + ", not " + hex64(hash));
  }
  if (rhok_lut.set_hash() != hash) {
    throw ConfigError("rho-K LUT was built for pigment set " + hex64(rhok_lut.set_hash()) + ", not " + hex64(hash));
  }
  if (color_lut.t_ref_mm() != params.alignment.t_ref_mm || rhok_lut.t_ref_mm() != params.alignment.t_ref_mm) {
    throw ConfigError("LUT reference thickness does not match t_ref_mm");
  }

  const Dims dims = volume.dims();
  const std::size_t n = dims.voxel_count();
  ConcentrationVolume conc(dims, volume.pitch());
  std::vector<float> residual(n, 0.0f), rel_error(n, 0.0f), sigma_target(n, 0.0f);
  std::vector<std::uint8_t> branch(n, kEmptyCode), flagged(n, 0);

  for_each_slab(dims, params.workers, [&](int z0, int z1) {
    const std::size_t begin = dims.index(0, 0, z0), end = dims.index(0, 0, z1 - 1) + dims.layer_size();
    for (std::size_t i = begin; i < end; ++i) {
      const auto& sample = volume[i];
      const double target = static_cast<double>(sample.sigma) * params.density_scale;
      sigma_target[i] = static_cast<float>(target);
      if (target < params.alignment.sigma_empty_threshold) {
        if (params.exterior == Exterior::kClear) {
          conc.concentration[i] = Concentration::pure(Pigment::Cl);
          conc.occupied[i] = 1;
        }
        continue;
      }
      const RgbColor color = sample.color();
      const Concentration cstar = lookup_concentration(color_lut, color);
      residual[i] = static_cast<float>(lookup_residual(color_lut, color));
      const double sigma_star = sigma_scalar(set, cstar, params.alignment.sigma);
      const auto aligned = align_density(set, rhok_lut, cstar, sigma_star, target, color, params.alignment);
      conc.concentration[i] = aligned.concentration;
      conc.occupied[i] = 1;
      branch[i] = static_cast<std::uint8_t>(aligned.branch);
      flagged[i] = aligned.flagged ? 1 : 0;
      rel_error[i] = static_cast<float>(std::abs(aligned.sigma - target) / target);
    }
  });

  ConversionResult result;
  result.labels = halftone(conc, {params.seed, volume_identity(dims, volume.pitch())}, params.workers);

  auto& report = result.report;
  report.voxels = n;
  report.seed = params.seed;
  std::vector<float> printed_residuals;
  double sigma_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (branch[i] == kEmptyCode) {
      ++report.empty;
      continue;
    }
    switch (static_cast<AlignBranch>(branch[i])) {
      case AlignBranch::kUnchanged: ++report.unchanged; break;
      case AlignBranch::kDiluted: ++report.diluted; break;
      case AlignBranch::kAugmented: ++report.augmented; break;
    }
    if (flagged[i]) {
      ++report.density_flagged;
    } else {
      report.alignment_max_rel_error = std::max(report.alignment_max_rel_error, static_cast<double>(rel_error[i]));
    }
    if (residual[i] > params.gamut_threshold) ++report.out_of_gamut;
    printed_residuals.push_back(residual[i]);
    const double s = sigma_target[i];
    sigma_sum += s;
    report.sigma_max = std::max(report.sigma_max, s);
    const auto bin = std::min<std::size_t>(static_cast<std::size_t>(s / ConversionReport::kSigmaBinWidth),
                                           ConversionReport::kSigmaBins - 1);
    ++report.sigma_histogram[bin];
  }
  if (!printed_residuals.empty()) {
    std::sort(printed_residuals.begin(), printed_residuals.end());
    report.residual_p50 = percentile(printed_residuals, 0.50);
    report.residual_p95 = percentile(printed_residuals, 0.95);
    report.residual_p99 = percentile(printed_residuals, 0.99);
    report.residual_max = printed_residuals.back();
    report.sigma_mean = sigma_sum / static_cast<double>(printed_residuals.size());
  }
  report.labels = result.labels.histogram();
  result.concentrations = std::move(conc);
  return result;
}

// ---------------------------------------------------------------------------
// Brute-force baseline

std::array<RgbColor, kLabelCount> label_colors(const PigmentSet& set, double thickness_mm) {
  std::array<RgbColor, kLabelCount> colors{};
  colors[0] = {1.0, 1.0, 1.0};
  for (Pigment p : kAllPigments) {
    colors[index_of(p) + 1] = concentration_to_rgb(set, Concentration::pure(p), thickness_mm);
  }
  return colors;
}

LabelVolume brute_force_convert(const RadianceVolume& volume, const PigmentSet& set, int neighborhood,
                                const AlignmentParams& params, int workers) {
  params.validate();
  if (neighborhood < 1 || neighborhood % 2 == 0) throw ConfigError("neighborhood must be a positive odd number");
  const Dims dims = volume.dims();
  const auto palette = label_colors(set, params.t_ref_mm);

  LabelVolume labels(dims, volume.pitch());
  const int half = neighborhood / 2;
  for_each_slab(dims, workers, [&](int z0, int z1) {
    for (int z = z0; z < z1; ++z)
      for (int y = 0; y < dims.ny; ++y)
        for (int x = 0; x < dims.nx; ++x) {
          const std::size_t i = dims.index(x, y, z);
          if (volume[i].sigma < params.sigma_empty_threshold) continue;
          RgbColor sum{0.0, 0.0, 0.0};
          double weight = 0.0;
          for (int dz = -half; dz <= half; ++dz)
            for (int dy = -half; dy <= half; ++dy)
              for (int dx = -half; dx <= half; ++dx) {
                const int xx = x + dx, yy = y + dy, zz = z + dz;
                if (xx < 0 || yy < 0 || zz < 0 || xx >= dims.nx || yy >= dims.ny || zz >= dims.nz) continue;
                const auto& s = volume[dims.index(xx, yy, zz)];
                sum.r += s.sigma * s.r;
                sum.g += s.sigma * s.g;
                sum.b += s.sigma * s.b;
                weight += s.sigma;
              }
          const RgbColor mean{sum.r / weight, sum.g / weight, sum.b / weight};
          int best = 1;
          double best_d = distance(mean, palette[1]);
          for (int code = 2; code < kLabelCount; ++code) {
            const double d = distance(mean, palette[static_cast<std::size_t>(code)]);
            if (d < best_d) {
              best_d = d;
              best = code;
            }
          }
          labels.set(i, static_cast<Label>(best));
        }
  });
  return labels;
}

// ---------------------------------------------------------------------------
// Preview

Axis parse_axis(std::string_view name) {
  if (name == "x") return Axis::kX;
  if (name == "y") return Axis::kY;
  if (name == "z") return Axis::kZ;
  throw ConfigError("axis must be x, y or z, got '" + std::string(name) + "'");
}

std::string_view axis_name(Axis axis) {
  switch (axis) {
    case Axis::kX: return "x";
    case Axis::kY: return "y";
    case Axis::kZ: return "z";
  }
  return "?";
}

double PreviewImage::mean_opacity() const {
  if (rgba.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 3; i < rgba.size(); i += 4) sum += rgba[i];
  return sum / static_cast<double>(rgba.size() / 4);
}

RgbColor PreviewImage::mean_color() const {
  double r = 0.0, g = 0.0, b = 0.0, a = 0.0;
  for (std::size_t i = 0; i + 3 < rgba.size(); i += 4) {
    r += rgba[i] * rgba[i + 3];
    g += rgba[i + 1] * rgba[i + 3];
    b += rgba[i + 2] * rgba[i + 3];
    a += rgba[i + 3];
  }
  if (a <= 0.0) return {1.0, 1.0, 1.0};
  return {r / a, g / a, b / a};
}

Image8 PreviewImage::to_image8() const {
  Image8 out{width, height, 4, std::vector<std::uint8_t>(rgba.size())};
  auto quantize = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  for (std::size_t i = 0; i + 3 < rgba.size(); i += 4) {
    for (int c = 0; c < 3; ++c) out.pixels[i + c] = quantize(linear_to_srgb(rgba[i + c]));
    out.pixels[i + 3] = quantize(rgba[i + 3]);
  }
  return out;
}

namespace {

// voxel(i) -> {color, sigma}; the march stops once transmittance is
// negligible.
template <typename VoxelFn>
PreviewImage composite(const Dims& dims, const Pitch& pitch, Axis axis, VoxelFn&& voxel) {
  PreviewImage img;
  int depth = 0;
  double step = 0.0;
  switch (axis) {
    case Axis::kZ: img.width = dims.nx, img.height = dims.ny, depth = dims.nz, step = pitch[2]; break;
    case Axis::kY: img.width = dims.nx, img.height = dims.nz, depth = dims.ny, step = pitch[1]; break;
    case Axis::kX: img.width = dims.ny, img.height = dims.nz, depth = dims.nx, step = pitch[0]; break;
  }
  img.rgba.assign(static_cast<std::size_t>(img.width) * img.height * 4, 0.0f);
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u) {
      double r = 0.0, g = 0.0, b = 0.0, transmittance = 1.0;
      for (int d = 0; d < depth && transmittance > 1e-6; ++d) {
        std::size_t i = 0;
        switch (axis) {
          case Axis::kZ: i = dims.index(u, v, d); break;
          case Axis::kY: i = dims.index(u, d, v); break;
          case Axis::kX: i = dims.index(d, u, v); break;
        }
        const auto [color, sigma] = voxel(i);
        if (sigma <= 0.0) continue;
        const double alpha = -std::expm1(-sigma * step);
        r += transmittance * alpha * color.r;
        g += transmittance * alpha * color.g;
        b += transmittance * alpha * color.b;
        transmittance *= 1.0 - alpha;
      }
      const double alpha = 1.0 - transmittance;
      const std::size_t p = (static_cast<std::size_t>(v) * img.width + u) * 4;
      if (alpha > 0.0) {
        img.rgba[p] = static_cast<float>(r / alpha);
        img.rgba[p + 1] = static_cast<float>(g / alpha);
        img.rgba[p + 2] = static_cast<float>(b / alpha);
      } else {
        img.rgba[p] = img.rgba[p + 1] = img.rgba[p + 2] = 1.0f;
      }
      img.rgba[p + 3] = static_cast<float>(alpha);
    }
  return img;
}

struct VoxelLook {
  RgbColor color;
  double sigma;
};

// Replaces pixel colors by the K-M color of the label histogram over the
// pixel's column and a lateral box, via one summed-area table per pigment.
void mix_colors(PreviewImage& img, const LabelVolume& labels, const PigmentSet& set, Axis axis,
                const PreviewParams& params) {
  const Dims dims = labels.dims();
  const Pitch& pitch = labels.pitch();
  double pitch_u = pitch[0], pitch_v = pitch[1];
  int depth = dims.nz;
  if (axis == Axis::kY) pitch_v = pitch[2], depth = dims.ny;
  if (axis == Axis::kX) pitch_u = pitch[1], pitch_v = pitch[2], depth = dims.nx;
  const int w = img.width, h = img.height;
  const int half_u = static_cast<int>(params.mix_footprint_mm / (2.0 * pitch_u));
  const int half_v = static_cast<int>(params.mix_footprint_mm / (2.0 * pitch_v));

  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<std::array<double, kPigmentCount>> table(stride * (static_cast<std::size_t>(h) + 1));
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      std::array<double, kPigmentCount> column{};
      for (int d = 0; d < depth; ++d) {
        std::size_t i = 0;
        switch (axis) {
          case Axis::kZ: i = dims.index(u, v, d); break;
          case Axis::kY: i = dims.index(u, d, v); break;
          case Axis::kX: i = dims.index(d, u, v); break;
        }
        // Clear only transmits; it takes no part in the color mix.
        const auto code = static_cast<std::size_t>(labels[i]);
        if (code > 0 && code != index_of(Pigment::Cl) + 1) column[code - 1] += 1.0;
      }
      auto& cell = table[(v + 1) * stride + u + 1];
      const auto& up = table[v * stride + u + 1];
      const auto& left = table[(v + 1) * stride + u];
      const auto& diag = table[v * stride + u];
      for (std::size_t p = 0; p < kPigmentCount; ++p) cell[p] = column[p] + up[p] + left[p] - diag[p];
    }

  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const std::size_t px = (static_cast<std::size_t>(v) * w + u) * 4;
      if (img.rgba[px + 3] <= 0.0f) continue;
      const int u0 = std::max(0, u - half_u), u1 = std::min(w, u + half_u + 1);
      const int v0 = std::max(0, v - half_v), v1 = std::min(h, v + half_v + 1);
      Concentration mix;
      double total = 0.0;
      for (std::size_t p = 0; p < kPigmentCount; ++p) {
        mix.c[p] = table[v1 * stride + u1][p] - table[v0 * stride + u1][p] - table[v1 * stride + u0][p] +
                   table[v0 * stride + u0][p];
        total += mix.c[p];
      }
      if (total <= 0.0) continue;
      for (double& c : mix.c) c /= total;
      const auto color = concentration_to_rgb(set, mix, params.color_thickness_mm);
      img.rgba[px] = static_cast<float>(color.r);
      img.rgba[px + 1] = static_cast<float>(color.g);
      img.rgba[px + 2] = static_cast<float>(color.b);
    }
}

}  // namespace

PreviewImage preview_render(const LabelVolume& labels, const PigmentSet& set, Axis axis, const PreviewParams& params) {
  const auto colors = label_colors(set, params.color_thickness_mm);
  std::array<double, kLabelCount> sigma{};
  for (Pigment p : kAllPigments) sigma[index_of(p) + 1] = sigma_scalar(set, Concentration::pure(p), params.sigma);
  auto img = composite(labels.dims(), labels.pitch(), axis, [&](std::size_t i) {
    const auto code = static_cast<std::size_t>(labels[i]);
    return VoxelLook{colors[code], sigma[code]};
  });
  if (params.mode == PreviewMode::kPigmentMix) mix_colors(img, labels, set, axis, params);
  return img;
}

PreviewImage preview_source(const RadianceVolume& volume, Axis axis, double density_scale) {
  return composite(volume.dims(), volume.pitch(), axis, [&](std::size_t i) {
    const auto& s = volume[i];
    return VoxelLook{s.color(), static_cast<double>(s.sigma) * density_scale};
  });
}

// ---------------------------------------------------------------------------
// Slices

nlohmann::json SliceManifest::to_json() const {
  nlohmann::json j;
  j["format"] = "voxprint-slices";
  j["version"] = 1;
  j["dims"] = {dims.nx, dims.ny, dims.nz};
  j["pitch_mm"] = {pitch[0], pitch[1], pitch[2]};
  nlohmann::json palette = nlohmann::json::object();
  for (int code = 0; code < kLabelCount; ++code) {
    palette[std::to_string(code)] = std::string(label_name(static_cast<Label>(code)));
  }
  j["palette"] = palette;
  j["seed"] = seed;
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t z = 0; z < layer_hashes.size(); ++z) {
    layers.push_back({{"index", z}, {"file", layer_file_name(static_cast<int>(z))}, {"hash", layer_hashes[z]}});
  }
  j["layers"] = layers;
  return j;
}

SliceManifest SliceManifest::from_json(const nlohmann::json& j) {
  try {
    SliceManifest m;
    const auto& d = j.at("dims");
    m.dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
    const auto& p = j.at("pitch_mm");
    m.pitch = {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& layer : j.at("layers")) {
      const auto index = layer.at("index").get<std::size_t>();
      if (index != m.layer_hashes.size()) throw FormatError("manifest layers out of order at index " + std::to_string(index));
      m.layer_hashes.push_back(layer.at("hash").get<std::string>());
    }
    if (m.layer_hashes.size() != static_cast<std::size_t>(m.dims.nz)) {
      throw FormatError("manifest lists " + std::to_string(m.layer_hashes.size()) + " layers for nz = " +
                        std::to_string(m.dims.nz));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

std::string layer_file_name(int z) {
  char name[32];
  std::snprintf(name, sizeof name, "layer_%05d.png", z);
  return name;
}

std::uint64_t layer_hash(const LabelVolume& labels, int z) {
  const auto size = labels.dims().layer_size();
  const auto* begin = labels.codes().data() + static_cast<std::size_t>(z) * size;
  Fnv1a64 h;
  h.update({begin, size});
  return h.digest();
}

SliceManifest export_slices(const LabelVolume& labels, const std::filesystem::path& out_dir, std::uint64_t seed,
                            int workers) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw FormatError("cannot create output directory " + out_dir.string());
  }
  const Dims dims = labels.dims();
  SliceManifest manifest{dims, labels.pitch(), seed, std::vector<std::string>(static_cast<std::size_t>(dims.nz))};
  parallel_for(static_cast<std::size_t>(dims.nz), workers, [&](std::size_t z) {
    const auto size = dims.layer_size();
    const auto first = labels.codes().begin() + static_cast<std::ptrdiff_t>(z * size);
    Image8 layer{dims.nx, dims.ny, 1, std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(size))};
    write_png(layer, out_dir / layer_file_name(static_cast<int>(z)));
    manifest.layer_hashes[z] = hex64(layer_hash(labels, static_cast<int>(z)));
  });
  std::ofstream out(out_dir / "manifest.json");
  out << manifest.to_json().dump(2) << '\n';
  if (!out) throw FormatError("cannot write " + (out_dir / "manifest.json").string());
  return manifest;
}

LabelVolume import_slices(const std::filesystem::path& dir, SliceManifest* manifest_out) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw FormatError("no manifest.json in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  const auto manifest = SliceManifest::from_json(j);
  LabelVolume labels(manifest.dims, manifest.pitch);
  const auto size = manifest.dims.layer_size();
  for (int z = 0; z < manifest.dims.nz; ++z) {
    const auto path = dir / layer_file_name(z);
    const auto image = read_png(path, 1);
    if (image.width != manifest.dims.nx || image.height != manifest.dims.ny) {
      throw FormatError(path.string() + ": size does not match manifest dims");
    }
    for (std::size_t k = 0; k < size; ++k) {
      if (image.pixels[k] >= kLabelCount) throw FormatError(path.string() + ": label code out of range");
      labels.codes()[static_cast<std::size_t>(z) * size + k] = image.pixels[k];
    }
    if (hex64(layer_hash(labels, z)) != manifest.layer_hashes[static_cast<std::size_t>(z)]) {
      throw FormatError(path.string() + ": content hash does not match manifest");
    }
  }
  if (manifest_out) *manifest_out = manifest;
  return labels;
}

}  // namespace voxprint
