#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxprint/gamut.hpp"
#include "voxprint/image.hpp"
#include "voxprint/kmcore.hpp"
#include "voxprint/volume.hpp"

namespace voxprint {

struct AlignmentParams {
  /// Upper limit on the gray fraction blended in to raise density.
  double rho_plus_cap = 0.1;
  /// Voxels thinner than this (per mm) are left unprinted.
  double sigma_empty_threshold = 1e-3;
  SigmaOptions sigma{};
  double t_ref_mm = 1.0;

  void validate() const;
};

enum class AlignBranch : std::uint8_t { kUnchanged, kDiluted, kAugmented };

struct AlignmentResult {
  Concentration concentration;
  AlignBranch branch = AlignBranch::kUnchanged;
  /// Clear-dilution fraction or gray fraction, depending on branch.
  double rho = 1.0;
  /// sigma_scalar of the returned concentration.
  double sigma = 0.0;
  /// Target density unreachable; result sits on the boundary.
  bool flagged = false;
};

/// Adjusts conc_star so its scalar density matches sigma_target. Too dense:
/// blend toward Clear, starting from rho = sigma_target / sigma_star and
/// refined by a bracketed secant on sigma_scalar. Too thin: blend in the K/W
/// gray matching the brightness of `target_color`, the smallest gray
/// fraction in [0, cap] found by bisection; unreachable targets return the
/// cap and are flagged.
AlignmentResult align_density(const PigmentSet& set, const RhoKLut& rhok, const Concentration& conc_star,
                              double sigma_star, double sigma_target, const RgbColor& target_color,
                              const AlignmentParams& params = {});

struct HalftoneSeed {
  std::uint64_t seed = 0;
  std::uint64_t volume_hash = 0;
};

/// Per-voxel concentrations; voxels with occupied == 0 are Empty.
struct ConcentrationVolume {
  Dims dims;
  Pitch pitch = kDefaultPitch;
  std::vector<Concentration> concentration;
  std::vector<std::uint8_t> occupied;

  ConcentrationVolume() = default;
  ConcentrationVolume(Dims d, Pitch p);
  /// Every voxel occupied with the same concentration.
  static ConcentrationVolume uniform(Dims d, Pitch p, const Concentration& c);
};

/// Stream key: splitmix64(seed ^ splitmix64(volume_hash)). Voxel i draws
/// u = unit_interval(splitmix64(key + i * 0x9e3779b97f4a7c15)), i.e. the
/// (i + 1)-th output of a SplitMix64 stream started at key, and takes the
/// first label whose cumulative concentration exceeds u.
std::uint64_t halftone_key(const HalftoneSeed& seed);
double halftone_uniform(std::uint64_t key, std::size_t voxel_index);
LabelVolume halftone(const ConcentrationVolume& volume, const HalftoneSeed& seed, int workers = 1);

enum class Exterior : std::uint8_t { kAir, kClear };

struct ConvertParams {
  AlignmentParams alignment{};
  double density_scale = 1.0;
  Exterior exterior = Exterior::kAir;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Residual above which a voxel's color is counted as out of gamut.
  double gamut_threshold = 0.02;
};

struct ConversionReport {
  static constexpr int kSigmaBins = 16;
  static constexpr double kSigmaBinWidth = 0.5;  // per mm; last bin is open

  std::size_t voxels = 0;
  std::size_t empty = 0;
  std::size_t unchanged = 0;
  std::size_t diluted = 0;
  std::size_t augmented = 0;
  std::size_t density_flagged = 0;
  std::size_t out_of_gamut = 0;
  double residual_p50 = 0.0;
  double residual_p95 = 0.0;
  double residual_p99 = 0.0;
  double residual_max = 0.0;
  /// Largest |sigma - target| / target over unflagged printed voxels.
  double alignment_max_rel_error = 0.0;
  double sigma_mean = 0.0;  // of printed voxels, after density scaling
  double sigma_max = 0.0;
  std::array<std::size_t, kSigmaBins> sigma_histogram{};
  std::array<std::size_t, kLabelCount> labels{};
  std::uint64_t seed = 0;

  std::size_t flags() const { return density_flagged; }
  nlohmann::json to_json() const;
};

struct ConversionResult {
  LabelVolume labels;
  ConcentrationVolume concentrations;
  ConversionReport report;
};

/// Lookup, alignment and halftoning of every voxel. Throws ConfigError when
/// either table was built for a different pigment set or thickness.
ConversionResult convert(const RadianceVolume& volume, const PigmentSet& set, const ColorLut& color_lut,
                         const RhoKLut& rhok_lut, const ConvertParams& params = {});

/// Baseline without pigment modeling: the sigma-weighted mean color of each
/// voxel's n^3 neighborhood (clipped at the volume border) is mapped to the
/// nearest pure pigment at t_ref by RGB distance, ties to the lower code.
/// Voxels below the empty threshold stay Empty.
LabelVolume brute_force_convert(const RadianceVolume& volume, const PigmentSet& set, int neighborhood = 3,
                                const AlignmentParams& params = {}, int workers = 1);

/// Display colors of the pure pigments at thickness t, by label code.
std::array<RgbColor, kLabelCount> label_colors(const PigmentSet& set, double thickness_mm);

enum class Axis : std::uint8_t { kX, kY, kZ };
Axis parse_axis(std::string_view name);
std::string_view axis_name(Axis axis);

enum class PreviewMode : std::uint8_t {
  /// Each voxel shows its pure pigment color.
  kLabelComposite,
  /// Each pixel shows the K-M color of the non-Clear label mix found in its
  /// column and a lateral box of mix_footprint_mm, approximating the
  /// sub-surface blending of voxels smaller than the scattering length.
  kPigmentMix,
};

struct PreviewParams {
  PreviewMode mode = PreviewMode::kLabelComposite;
  /// Thickness at which each label's (or mix's) color is evaluated.
  double color_thickness_mm = 1.0;
  double mix_footprint_mm = 1.0;
  SigmaOptions sigma{};
};

/// Linear RGB, straight (not premultiplied) color plus alpha per pixel.
struct PreviewImage {
  int width = 0;
  int height = 0;
  std::vector<float> rgba;

  /// Mean alpha over all pixels.
  double mean_opacity() const;
  /// Alpha-weighted mean color; white for a fully transparent image.
  RgbColor mean_color() const;
  /// sRGB-encoded RGBA8.
  Image8 to_image8() const;
};

/// Orthographic front-to-back emission-absorption march along `axis`.
/// Voxel opacity is 1 - exp(-sigma_label * pitch[axis]). Image axes: z ->
/// (x, y), y -> (x, z), x -> (y, z). Alpha is the same in both modes.
PreviewImage preview_render(const LabelVolume& labels, const PigmentSet& set, Axis axis,
                            const PreviewParams& params = {});
/// The same compositor applied to the source colors and densities.
PreviewImage preview_source(const RadianceVolume& volume, Axis axis, double density_scale = 1.0);

struct SliceManifest {
  Dims dims;
  Pitch pitch = kDefaultPitch;
  std::uint64_t seed = 0;
  std::vector<std::string> layer_hashes;  // FNV-1a of each layer's codes

  nlohmann::json to_json() const;
  static SliceManifest from_json(const nlohmann::json& j);
};

std::string layer_file_name(int z);
std::uint64_t layer_hash(const LabelVolume& labels, int z);

/// Writes layer_NNNNN.png (8-bit gray, values 0-6) per z layer, in
/// parallel, then manifest.json.
SliceManifest export_slices(const LabelVolume& labels, const std::filesystem::path& out_dir, std::uint64_t seed,
                            int workers = 1);
/// Reads a slice directory back, verifying every layer hash.
LabelVolume import_slices(const std::filesystem::path& dir, SliceManifest* manifest = nullptr);

}  // namespace voxprint
