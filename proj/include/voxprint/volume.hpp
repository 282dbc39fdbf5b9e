#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "voxprint/parallel.hpp"
#include "voxprint/spectral.hpp"

namespace voxprint {

struct Dims {
  int nx = 1;
  int ny = 1;
  int nz = 1;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  std::size_t layer_size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  /// Linear index, x fastest, then y, then z.
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * static_cast<std::size_t>(z));
  }
  std::array<int, 3> coords(std::size_t index) const;
  bool operator==(const Dims&) const = default;
};

/// Printer voxel pitch in mm along x, y, z.
using Pitch = std::array<double, 3>;
inline constexpr Pitch kDefaultPitch = {0.084, 0.028, 0.014};

struct RadianceSample {
  float r = 0.0f;
  float g = 0.0f;
  float b = 0.0f;
  float sigma = 0.0f;  // per mm

  RgbColor color() const { return {r, g, b}; }
};

/// Grid of (r, g, b, sigma) samples; immutable once built.
class RadianceVolume {
 public:
  RadianceVolume() = default;
  RadianceVolume(Dims dims, Pitch pitch);
  RadianceVolume(Dims dims, Pitch pitch, std::vector<RadianceSample> samples);

  const Dims& dims() const { return dims_; }
  const Pitch& pitch() const { return pitch_; }
  std::size_t size() const { return samples_.size(); }

  const RadianceSample& operator[](std::size_t i) const { return samples_[i]; }
  RadianceSample& operator[](std::size_t i) { return samples_[i]; }
  const RadianceSample& at(int x, int y, int z) const { return samples_[dims_.index(x, y, z)]; }
  RadianceSample& at(int x, int y, int z) { return samples_[dims_.index(x, y, z)]; }
  const std::vector<RadianceSample>& samples() const { return samples_; }

  /// Throws FormatError naming the first voxel with a channel outside
  /// [0, 1] or a negative or non-finite sigma.
  void validate() const;

 private:
  Dims dims_;
  Pitch pitch_ = kDefaultPitch;
  std::vector<RadianceSample> samples_;
};

/// Voxel label codes as written to slice images.
enum class Label : std::uint8_t { Empty = 0, C = 1, M = 2, Y = 3, K = 4, W = 5, Cl = 6 };
inline constexpr int kLabelCount = 7;
std::string_view label_name(Label label);

class LabelVolume {
 public:
  LabelVolume() = default;
  LabelVolume(Dims dims, Pitch pitch);

  const Dims& dims() const { return dims_; }
  const Pitch& pitch() const { return pitch_; }
  std::size_t size() const { return labels_.size(); }

  Label operator[](std::size_t i) const { return static_cast<Label>(labels_[i]); }
  void set(std::size_t i, Label l) { labels_[i] = static_cast<std::uint8_t>(l); }
  Label at(int x, int y, int z) const { return (*this)[dims_.index(x, y, z)]; }

  const std::vector<std::uint8_t>& codes() const { return labels_; }
  std::vector<std::uint8_t>& codes() { return labels_; }

  std::array<std::size_t, kLabelCount> histogram() const;

  bool operator==(const LabelVolume&) const = default;

 private:
  Dims dims_;
  Pitch pitch_ = kDefaultPitch;
  std::vector<std::uint8_t> labels_;
};

/// Hash of dims and pitch; keys the halftone stream to a volume's shape.
std::uint64_t volume_identity(const Dims& dims, const Pitch& pitch);

/// Splits z layers into contiguous slabs, one per worker, and calls
/// fn(z_begin, z_end) for each.
template <typename Fn>
void for_each_slab(const Dims& dims, int workers, Fn&& fn) {
  parallel_chunks(static_cast<std::size_t>(dims.nz), workers,
                  [&](std::size_t z0, std::size_t z1) { fn(static_cast<int>(z0), static_cast<int>(z1)); });
}

/// RVOL 1: four text header lines, a blank line, then little-endian float32
/// (r, g, b, sigma) per voxel, x fastest. See docs/formats.md.
RadianceVolume load_rvol(const std::filesystem::path& path);
void save_rvol(const RadianceVolume& volume, const std::filesystem::path& path);
RadianceVolume parse_rvol(std::string_view bytes);
std::string format_rvol(const RadianceVolume& volume);

/// Deterministic test volumes: "solid-sphere", "cloud", "fur-shell",
/// "gradient-cube". Parameters in docs/volumes.md.
RadianceVolume synth_volume(std::string_view recipe, Dims dims, std::uint64_t seed);
std::vector<std::string> synth_volume_names();

/// Constants of the generators, shared with tests.
namespace synth {
inline constexpr float kSphereSigma = 4.0f;
inline constexpr double kSphereRadiusFraction = 0.4;  // of the smallest dimension
inline constexpr RgbColor kSphereColor{0.8, 0.35, 0.2};

inline constexpr float kCloudSigma = 3.0f;
inline constexpr int kCloudLattice = 8;  // voxels per noise cell, first octave
inline constexpr int kCloudOctaves = 3;
inline constexpr double kCloudThreshold = 0.35;
inline constexpr RgbColor kCloudTopColor{0.93, 0.94, 0.97};
inline constexpr RgbColor kCloudBottomColor{0.72, 0.75, 0.82};

inline constexpr float kFurCoreSigma = 5.0f;
inline constexpr float kFurStrandSigma = 8.0f;
inline constexpr double kFurCoreFraction = 0.25;
inline constexpr double kFurOuterFraction = 0.45;
inline constexpr int kFurStrandsPer1000Voxels = 1;
inline constexpr RgbColor kFurCoreColor{0.55, 0.38, 0.22};
inline constexpr RgbColor kFurTipColor{0.85, 0.75, 0.6};

inline constexpr float kGradientSigma = 4.0f;
inline constexpr RgbColor kGradientStart{0.1, 0.6, 0.9};
inline constexpr RgbColor kGradientEnd{0.9, 0.2, 0.1};
}  // namespace synth

}  // namespace voxprint
