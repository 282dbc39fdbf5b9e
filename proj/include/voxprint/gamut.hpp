#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "voxprint/kmcore.hpp"

namespace voxprint {

/// Pigments the color solve may use; Clear is reserved for density.
inline constexpr std::size_t kColorPigmentCount = 5;

/// Euclidean projection of v onto the probability simplex.
void project_to_simplex(std::span<double> v);

/// Fast forward model of the five color pigments at a fixed thickness, with
/// the derivative of linear RGB with respect to each concentration.
class ColorModel {
 public:
  ColorModel(const PigmentSet& set, double t_ref_mm);

  using Weights = std::array<double, kColorPigmentCount>;

  /// Unclamped linear RGB of the mixture.
  RgbColor rgb(const Weights& c) const;
  /// Squared distance between the clamped (or raw) color and the target.
  double objective(const Weights& c, const RgbColor& target, bool clamped = true) const;
  /// Objective and its gradient. Per-band derivatives of R + T with respect
  /// to K and S come from central differences; the chain to concentrations
  /// is exact because mixing is linear.
  double objective_gradient(const Weights& c, const RgbColor& target, Weights& gradient, bool clamped = true) const;

  double t_ref_mm() const { return t_ref_mm_; }

 private:
  std::array<std::array<double, kBandCount>, kColorPigmentCount> k_{};
  std::array<std::array<double, kBandCount>, kColorPigmentCount> s_{};
  double t_ref_mm_;
};

struct SolverOptions {
  int max_iterations = 300;
  double step_tolerance = 1e-7;
  int interior_starts = 20;
  /// Residuals within this distance of the best count as ties; the
  /// lexicographically smallest concentration wins.
  double tie_tolerance = 1e-9;
};

struct ColorSolution {
  Concentration concentration;  // c_Cl = 0
  double residual = 0.0;        // ||rgb_C - target||_2 with clamped rgb_C
};

/// Best concentration over {C, M, Y, K, W} for a target color: projected
/// gradient descent from every simplex vertex, the barycenter, and Halton
/// interior points (plus any extra seeds), and from the vertices and
/// barycenter again via descend_unclamped_first; best residual wins.
ColorSolution solve_concentration(const PigmentSet& set, const RgbColor& target, double t_ref_mm);
ColorSolution solve_concentration(const ColorModel& model, const RgbColor& target,
                                  std::span<const Concentration> extra_starts = {},
                                  const SolverOptions& options = {});

/// Projected-gradient descent from a single start.
ColorSolution descend_from(const ColorModel& model, const RgbColor& target, const Concentration& start,
                           const SolverOptions& options = {});

/// Descent on the unclamped color distance, then on the clamped one.
ColorSolution descend_unclamped_first(const ColorModel& model, const RgbColor& target, const Concentration& start,
                                      const SolverOptions& options = {});
/// Starting points used by solve_concentration, in evaluation order.
std::vector<Concentration> solver_starts(int interior_starts);

/// RGB -> concentration table on a res^3 grid over [0, 1]^3.
class ColorLut {
 public:
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::size_t kFloatsPerEntry = kPigmentCount + 1;

  ColorLut() = default;
  ColorLut(int resolution, std::uint64_t set_hash, double t_ref_mm, std::vector<float> entries);

  int resolution() const { return resolution_; }
  std::uint64_t set_hash() const { return set_hash_; }
  double t_ref_mm() const { return t_ref_mm_; }
  std::size_t entry_count() const;

  /// Entry index for grid node (ir, ig, ib), red fastest.
  std::size_t index(int ir, int ig, int ib) const;
  Concentration concentration(std::size_t entry) const;
  double residual(std::size_t entry) const;
  RgbColor node_color(int ir, int ig, int ib) const;

  const std::vector<float>& raw() const { return entries_; }

  bool operator==(const ColorLut&) const = default;

 private:
  int resolution_ = 0;
  std::uint64_t set_hash_ = 0;
  double t_ref_mm_ = 1.0;
  std::vector<float> entries_;
};

struct LutBuildOptions {
  int workers = 1;
  SolverOptions solver{};
  /// A neighbor-seeded descent reaching this residual is accepted without
  /// the full multi-start.
  double seed_accept_residual = 1e-4;
};

/// Solves every grid node. Rows along red are swept in order, each node
/// seeded with its predecessor's solution; rows run in parallel. The result
/// does not depend on the worker count.
ColorLut build_color_lut(const PigmentSet& set, int resolution, double t_ref_mm, const LutBuildOptions& options = {});

/// Trilinear interpolation of the eight surrounding entries, then clamp
/// and renormalize onto the simplex.
Concentration lookup_concentration(const ColorLut& lut, const RgbColor& target);
/// Trilinear interpolation of the stored residuals.
double lookup_residual(const ColorLut& lut, const RgbColor& target);

/// Fraction of entries whose residual is below threshold.
double gamut_coverage(const ColorLut& lut, double threshold = 0.02);

void save_color_lut(const ColorLut& lut, const std::filesystem::path& path);
ColorLut load_color_lut(const std::filesystem::path& path);

/// Concentration with c_K = rho, c_W = 1 - rho.
Concentration gray_mix(double rho);

/// rho in [0, 1] whose K/W gray matches a target brightness, by
/// golden-section search (tolerance 1e-6) plus the two endpoints.
double solve_rhok(const PigmentSet& set, double brightness, double t_ref_mm);

/// Brightness -> rho^K table at `count` uniform samples of [0, 1].
class RhoKLut {
 public:
  static constexpr std::uint32_t kVersion = 1;

  RhoKLut() = default;
  RhoKLut(std::uint64_t set_hash, double t_ref_mm, std::vector<float> entries);

  std::size_t size() const { return entries_.size(); }
  float operator[](std::size_t i) const { return entries_[i]; }
  std::uint64_t set_hash() const { return set_hash_; }
  double t_ref_mm() const { return t_ref_mm_; }
  const std::vector<float>& raw() const { return entries_; }

  bool operator==(const RhoKLut&) const = default;

 private:
  std::uint64_t set_hash_ = 0;
  double t_ref_mm_ = 1.0;
  std::vector<float> entries_;
};

inline constexpr int kDefaultColorLutResolution = 100;
inline constexpr int kDefaultRhoKEntries = 100;

RhoKLut build_rhok_lut(const PigmentSet& set, double t_ref_mm, int count = kDefaultRhoKEntries);
/// Linear interpolation, clamped to the end nodes.
double lookup_rhok(const RhoKLut& lut, double brightness);

void save_rhok_lut(const RhoKLut& lut, const std::filesystem::path& path);
RhoKLut load_rhok_lut(const std::filesystem::path& path);

}  // namespace voxprint
