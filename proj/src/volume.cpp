#include "voxprint/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "voxprint/errors.hpp"
#include "voxprint/hash.hpp"

namespace voxprint {

std::array<int, 3> Dims::coords(std::size_t index) const {
  const auto layer = layer_size();
  const auto z = index / layer;
  const auto rem = index % layer;
  return {static_cast<int>(rem % static_cast<std::size_t>(nx)), static_cast<int>(rem / static_cast<std::size_t>(nx)),
          static_cast<int>(z)};
}

namespace {

void check_dims(const Dims& dims) {
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) {
    throw ConfigError("volume dims must be at least 1 in every axis");
  }
}

void check_pitch(const Pitch& pitch) {
  for (double p : pitch) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("voxel pitch must be positive");
  }
}

std::string voxel_name(const Dims& dims, std::size_t i) {
  const auto c = dims.coords(i);
  return "voxel (" + std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]) + ")";
}

}  // namespace

RadianceVolume::RadianceVolume(Dims dims, Pitch pitch) : dims_(dims), pitch_(pitch) {
  check_dims(dims);
  check_pitch(pitch);
  samples_.resize(dims.voxel_count());
}

RadianceVolume::RadianceVolume(Dims dims, Pitch pitch, std::vector<RadianceSample> samples)
    : dims_(dims), pitch_(pitch), samples_(std::move(samples)) {
  check_dims(dims);
  check_pitch(pitch);
  if (samples_.size() != dims.voxel_count()) throw FormatError("sample count does not match dims");
}

void RadianceVolume::validate() const {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.sigma) || s.sigma < 0.0f) {
      throw FormatError(voxel_name(dims_, i) + ": density must be finite and non-negative");
    }
    for (float v : {s.r, s.g, s.b}) {
      if (!(v >= 0.0f && v <= 1.0f)) throw FormatError(voxel_name(dims_, i) + ": color channel outside [0, 1]");
    }
  }
}

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Empty: return "Empty";
    case Label::C: return "C";
    case Label::M: return "M";
    case Label::Y: return "Y";
    case Label::K: return "K";
    case Label::W: return "W";
    case Label::Cl: return "Cl";
  }
  return "?";
}

LabelVolume::LabelVolume(Dims dims, Pitch pitch) : dims_(dims), pitch_(pitch) {
  check_dims(dims);
  check_pitch(pitch);
  labels_.assign(dims.voxel_count(), 0);
}

std::array<std::size_t, kLabelCount> LabelVolume::histogram() const {
  std::array<std::size_t, kLabelCount> h{};
  for (auto code : labels_) ++h[code < kLabelCount ? code : 0];
  return h;
}

std::uint64_t volume_identity(const Dims& dims, const Pitch& pitch) {
  Fnv1a64 h;
  h.update_u64(static_cast<std::uint64_t>(dims.nx));
  h.update_u64(static_cast<std::uint64_t>(dims.ny));
  h.update_u64(static_cast<std::uint64_t>(dims.nz));
  for (double p : pitch) h.update_f64(p);
  return h.digest();
}

// ---------------------------------------------------------------------------
// RVOL

std::string format_rvol(const RadianceVolume& volume) {
  std::ostringstream out(std::ios::binary);
  char line[256];
  out << "RVOL 1\n";
  out << "dims " << volume.dims().nx << ' ' << volume.dims().ny << ' ' << volume.dims().nz << '\n';
  std::snprintf(line, sizeof line, "pitch_mm %.17g %.17g %.17g\n", volume.pitch()[0], volume.pitch()[1],
                volume.pitch()[2]);
  out << line;
  out << "data float32 rgba\n\n";
  for (const auto& s : volume.samples()) {
    detail::put_f32(out, s.r);
    detail::put_f32(out, s.g);
    detail::put_f32(out, s.b);
    detail::put_f32(out, s.sigma);
  }
  return out.str();
}

RadianceVolume parse_rvol(std::string_view bytes) {
  std::istringstream in(std::string(bytes), std::ios::binary);
  auto next_line = [&](const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError(std::string("RVOL: missing ") + what + " line");
    return line;
  };
  if (next_line("magic") != "RVOL 1") throw FormatError("RVOL: bad magic or version (expected 'RVOL 1')");
  Dims dims;
  {
    std::istringstream ls(next_line("dims"));
    std::string key;
    if (!(ls >> key >> dims.nx >> dims.ny >> dims.nz) || key != "dims") throw FormatError("RVOL: malformed dims line");
    if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) throw FormatError("RVOL: dims must be >= 1");
  }
  Pitch pitch{};
  {
    std::istringstream ls(next_line("pitch"));
    std::string key;
    if (!(ls >> key >> pitch[0] >> pitch[1] >> pitch[2]) || key != "pitch_mm") {
      throw FormatError("RVOL: malformed pitch_mm line");
    }
    for (double p : pitch) {
      if (!(p > 0.0)) throw FormatError("RVOL: pitch must be positive");
    }
  }
  if (next_line("data") != "data float32 rgba") throw FormatError("RVOL: unsupported data line");
  if (!next_line("separator").empty()) throw FormatError("RVOL: expected blank line before payload");

  const std::size_t count = dims.voxel_count();
  std::vector<RadianceSample> samples(count);
  const std::string what = "RVOL payload";
  for (auto& s : samples) {
    s.r = detail::get_f32(in, what);
    s.g = detail::get_f32(in, what);
    s.b = detail::get_f32(in, what);
    s.sigma = detail::get_f32(in, what);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("RVOL: trailing bytes after payload");
  RadianceVolume volume(dims, pitch, std::move(samples));
  volume.validate();
  return volume;
}

RadianceVolume load_rvol(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open volume " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rvol(ss.str());
}

void save_rvol(const RadianceVolume& volume, const std::filesystem::path& path) {
  volume.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write volume " + path.string());
  const auto bytes = format_rvol(volume);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Generators

namespace {

double lattice_value(std::uint64_t seed, int octave, int x, int y, int z) {
  std::uint64_t h = splitmix64(seed ^ (static_cast<std::uint64_t>(octave) << 56));
  h = splitmix64(h ^ static_cast<std::uint32_t>(x));
  h = splitmix64(h ^ static_cast<std::uint32_t>(y));
  h = splitmix64(h ^ static_cast<std::uint32_t>(z));
  return unit_interval(h);
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Value noise in [0, 1] with smoothstep-weighted trilinear interpolation.
double value_noise(std::uint64_t seed, int octave, double x, double y, double z) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y)),
            z0 = static_cast<int>(std::floor(z));
  const double fx = smoothstep(x - x0), fy = smoothstep(y - y0), fz = smoothstep(z - z0);
  double out = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) * (dz ? fz : 1 - fz);
    out += w * lattice_value(seed, octave, x0 + dx, y0 + dy, z0 + dz);
  }
  return out;
}

RgbColor lerp(const RgbColor& a, const RgbColor& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

RadianceSample sample_of(const RgbColor& c, double sigma) {
  return {static_cast<float>(c.r), static_cast<float>(c.g), static_cast<float>(c.b), static_cast<float>(sigma)};
}

struct Center {
  double x, y, z, min_dim;
};

Center center_of(const Dims& d) {
  return {(d.nx - 1) / 2.0, (d.ny - 1) / 2.0, (d.nz - 1) / 2.0, static_cast<double>(std::min({d.nx, d.ny, d.nz}))};
}

RadianceVolume solid_sphere(const Dims& dims) {
  RadianceVolume v(dims, kDefaultPitch);
  const auto c = center_of(dims);
  const double radius = synth::kSphereRadiusFraction * c.min_dim;
  for (int z = 0; z < dims.nz; ++z)
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x) {
        const double d = std::sqrt((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y) + (z - c.z) * (z - c.z));
        v.at(x, y, z) = d <= radius ? sample_of(synth::kSphereColor, synth::kSphereSigma) : RadianceSample{};
      }
  return v;
}

RadianceVolume cloud(const Dims& dims, std::uint64_t seed) {
  RadianceVolume v(dims, kDefaultPitch);
  const auto c = center_of(dims);
  const double radius = 0.5 * c.min_dim;
  for (int z = 0; z < dims.nz; ++z)
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x) {
        double noise = 0.0, amplitude = 0.5, norm = 0.0;
        double cell = synth::kCloudLattice;
        for (int o = 0; o < synth::kCloudOctaves; ++o) {
          noise += amplitude * value_noise(seed, o, x / cell, y / cell, z / cell);
          norm += amplitude;
          amplitude *= 0.5;
          cell *= 0.5;
        }
        noise /= norm;
        const double r2 = ((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y) + (z - c.z) * (z - c.z)) / (radius * radius);
        const double falloff = std::max(0.0, 1.0 - r2);
        const double density = std::max(0.0, noise * falloff - synth::kCloudThreshold) / (1.0 - synth::kCloudThreshold);
        if (density <= 0.0) {
          v.at(x, y, z) = {};
          continue;
        }
        const double height = dims.ny > 1 ? static_cast<double>(y) / (dims.ny - 1) : 1.0;
        v.at(x, y, z) = sample_of(lerp(synth::kCloudBottomColor, synth::kCloudTopColor, height),
                                  synth::kCloudSigma * std::min(1.0, density));
      }
  return v;
}

RadianceVolume fur_shell(const Dims& dims, std::uint64_t seed) {
  RadianceVolume v(dims, kDefaultPitch);
  const auto c = center_of(dims);
  const double core = synth::kFurCoreFraction * c.min_dim;
  const double outer = synth::kFurOuterFraction * c.min_dim;
  for (int z = 0; z < dims.nz; ++z)
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x) {
        const double d = std::sqrt((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y) + (z - c.z) * (z - c.z));
        if (d <= core) v.at(x, y, z) = sample_of(synth::kFurCoreColor, synth::kFurCoreSigma);
      }
  // Radial strands from uniformly distributed surface points, marched in
  // quarter-voxel steps from the core surface to the outer radius.
  const std::size_t strands =
      std::max<std::size_t>(8, dims.voxel_count() * synth::kFurStrandsPer1000Voxels / 1000);
  std::uint64_t state = splitmix64(seed ^ 0x6675725f7368656cULL);
  for (std::size_t s = 0; s < strands; ++s) {
    state = splitmix64(state);
    const double u = 2.0 * unit_interval(state) - 1.0;
    state = splitmix64(state);
    const double phi = 2.0 * 3.14159265358979323846 * unit_interval(state);
    const double r = std::sqrt(std::max(0.0, 1.0 - u * u));
    const double dir[3] = {r * std::cos(phi), r * std::sin(phi), u};
    for (double t = core; t <= outer; t += 0.25) {
      const int x = static_cast<int>(std::lround(c.x + dir[0] * t));
      const int y = static_cast<int>(std::lround(c.y + dir[1] * t));
      const int z = static_cast<int>(std::lround(c.z + dir[2] * t));
      if (x < 0 || y < 0 || z < 0 || x >= dims.nx || y >= dims.ny || z >= dims.nz) break;
      auto& sample = v.at(x, y, z);
      if (sample.sigma >= synth::kFurStrandSigma) continue;
      const double along = (t - core) / std::max(outer - core, 1e-9);
      sample = sample_of(lerp(synth::kFurCoreColor, synth::kFurTipColor, along), synth::kFurStrandSigma);
    }
  }
  return v;
}

RadianceVolume gradient_cube(const Dims& dims) {
  RadianceVolume v(dims, kDefaultPitch);
  for (int z = 0; z < dims.nz; ++z)
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x) {
        const double t = dims.nx > 1 ? static_cast<double>(x) / (dims.nx - 1) : 0.0;
        v.at(x, y, z) = sample_of(lerp(synth::kGradientStart, synth::kGradientEnd, t), synth::kGradientSigma * t);
      }
  return v;
}

}  // namespace

std::vector<std::string> synth_volume_names() { return {"solid-sphere", "cloud", "fur-shell", "gradient-cube"}; }

RadianceVolume synth_volume(std::string_view recipe, Dims dims, std::uint64_t seed) {
  check_dims(dims);
  if (recipe == "solid-sphere") return solid_sphere(dims);
  if (recipe == "cloud") return cloud(dims, seed);
  if (recipe == "fur-shell") return fur_shell(dims, seed);
  if (recipe == "gradient-cube") return gradient_cube(dims);
  throw ConfigError("unknown volume recipe '" + std::string(recipe) +
                    "' (expected solid-sphere, cloud, fur-shell, gradient-cube)");
}

}  // namespace voxprint
