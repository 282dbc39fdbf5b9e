#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "support.hpp"
#include "voxprint/calib.hpp"
#include "voxprint/errors.hpp"
#include "voxprint/hash.hpp"
#include "voxprint/pipeline.hpp"

using namespace voxprint;

namespace {

const PigmentSet& default_set() {
  static const PigmentSet set = synth_pigment_set("default");
  return set;
}

const ColorLut& color_lut() {
  static const ColorLut lut = build_color_lut(default_set(), 17, 1.0, {.workers = 2});
  return lut;
}

const RhoKLut& rhok_lut() {
  static const RhoKLut lut = build_rhok_lut(default_set(), 1.0);
  return lut;
}

// Cyan with a flat K = 2 and no scattering: sigma is exactly 2 * c_C.
PigmentSet flat_cyan_set() {
  std::vector<PigmentProfile> profiles;
  for (Pigment p : kAllPigments) profiles.push_back({p, Spectrum::constant(0.0), Spectrum::constant(0.0)});
  profiles[index_of(Pigment::C)].absorption = Spectrum::constant(2.0);
  profiles[index_of(Pigment::K)].absorption = Spectrum::constant(8.0);
  profiles[index_of(Pigment::W)].absorption = Spectrum::constant(0.1);
  return PigmentSet(profiles);
}

Concentration random_color_concentration(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Concentration c;
  double s = 0.0;
  for (std::size_t k = 0; k < kColorPigmentCount; ++k) s += c.c[k] = u(rng);
  for (std::size_t k = 0; k < kColorPigmentCount; ++k) c.c[k] /= s;
  return c;
}

RadianceVolume uniform_volume(Dims d, RgbColor color, float sigma, Pitch pitch = kDefaultPitch) {
  RadianceVolume v(d, pitch);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = {static_cast<float>(color.r), static_cast<float>(color.g), static_cast<float>(color.b), sigma};
  }
  return v;
}

double binomial_sd(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("dilution halves a flat absorber") {
  const auto set = flat_cyan_set();
  const auto rhok = build_rhok_lut(set, 1.0, 10);
  const auto cyan = Concentration::pure(Pigment::C);
  REQUIRE(sigma_scalar(set, cyan) == doctest::Approx(2.0).epsilon(1e-9));
  const auto r = align_density(set, rhok, cyan, 2.0, 1.0, {0, 1, 1});
  CHECK(r.branch == AlignBranch::kDiluted);
  CHECK(r.rho == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.concentration[Pigment::Cl] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.concentration[Pigment::C] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK_FALSE(r.flagged);
}

TEST_CASE("matching density is a no-op") {
  const auto& set = default_set();
  const auto c = Concentration::blend(0.4, Concentration::pure(Pigment::M), Concentration::pure(Pigment::Y));
  const double s = sigma_scalar(set, c);
  const auto r = align_density(set, rhok_lut(), c, s, s, {0.8, 0.4, 0.2});
  CHECK(r.branch == AlignBranch::kUnchanged);
  CHECK(r.concentration.c == c.c);
}

TEST_CASE("unreachable density stops at the cap") {
  const auto& set = default_set();
  const auto c = Concentration::pure(Pigment::M);
  const auto r = align_density(set, rhok_lut(), c, 1.0, 10.0, {0.9, 0.2, 0.6});
  CHECK(r.branch == AlignBranch::kAugmented);
  CHECK(r.rho == 0.1);
  CHECK(r.flagged);
  CHECK(r.sigma < 10.0);
  const auto gray = gray_mix(lookup_rhok(rhok_lut(), mean_brightness({0.9, 0.2, 0.6})));
  const auto expected = Concentration::blend(0.1, gray, c);
  for (std::size_t i = 0; i < kPigmentCount; ++i) CHECK(r.concentration.c[i] == doctest::Approx(expected.c[i]));

  SUBCASE("empty source with a positive target") {
    const auto e = align_density(set, rhok_lut(), Concentration::pure(Pigment::Cl), 0.0, 3.0, {0.5, 0.5, 0.5});
    CHECK(e.flagged);
    CHECK(e.rho == 0.1);
  }
  SUBCASE("custom cap") {
    AlignmentParams p;
    p.rho_plus_cap = 0.25;
    CHECK(align_density(set, rhok_lut(), c, 1.0, 10.0, {0.9, 0.2, 0.6}, p).rho == 0.25);
    p.rho_plus_cap = 1.5;
    CHECK_THROWS_AS(align_density(set, rhok_lut(), c, 1.0, 10.0, {0.9, 0.2, 0.6}, p), ConfigError);
  }
}

TEST_CASE("alignment lands on the target when it is reachable") {
  const auto& set = default_set();
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AlignmentParams params;
  for (int trial = 0; trial < 150; ++trial) {
    const auto c = random_color_concentration(rng);
    const double s = sigma_scalar(set, c);
    const RgbColor color{u(rng), u(rng), u(rng)};
    const auto gray = gray_mix(lookup_rhok(rhok_lut(), mean_brightness(color)));
    const double s_cap = sigma_scalar(set, Concentration::blend(params.rho_plus_cap, gray, c));
    const double target = s * std::exp(u(rng) * 4.0 - 3.0);  // s/20 .. 2.7 s
    const auto r = align_density(set, rhok_lut(), c, s, target, color, params);
    CHECK(r.concentration.is_valid(1e-9));
    CHECK(r.sigma == doctest::Approx(sigma_scalar(set, r.concentration)).epsilon(1e-12));
    if (target <= s) {
      CHECK(r.branch != AlignBranch::kAugmented);
      CHECK(std::abs(r.sigma - target) <= 0.02 * target);
    } else if (target <= s_cap) {
      CHECK_FALSE(r.flagged);
      CHECK(r.sigma >= target);
      CHECK(std::abs(r.sigma - target) <= 0.02 * target);
    } else {
      CHECK(r.flagged);
      CHECK(r.rho == params.rho_plus_cap);
    }
  }
}

TEST_CASE("dilution is exact for pure absorbers") {
  const auto set = pure_absorber_pigment_set();
  const auto rhok = build_rhok_lut(set, 1.0, 20);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_color_concentration(rng);
    const double s = sigma_scalar(set, c);
    const double target = s * u(rng);
    const auto r = align_density(set, rhok, c, s, target, {0.5, 0.5, 0.5});
    CHECK(std::abs(r.sigma - target) <= 1e-6 * target);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("halftone of a pure concentration") {
  const auto cv = ConcentrationVolume::uniform({8, 8, 8}, kDefaultPitch, Concentration::pure(Pigment::C));
  const auto labels = halftone(cv, {3, 0}, 2);
  CHECK(labels.histogram()[static_cast<int>(Label::C)] == 512);
}

TEST_CASE("halftone frequencies are unbiased") {
  const Dims d{100, 100, 100};
  const auto cm = Concentration::blend(0.5, Concentration::pure(Pigment::C), Concentration::pure(Pigment::M));
  const auto labels = halftone(ConcentrationVolume::uniform(d, kDefaultPitch, cm), {11, 5}, 4);
  const double freq = static_cast<double>(labels.histogram()[static_cast<int>(Label::C)]) / 1e6;
  CHECK(std::abs(freq - 0.5) <= 0.0015);

  Concentration mixed;
  mixed.c = {0.3, 0.3, 0.2, 0.1, 0.1, 0.0};
  const auto h = halftone(ConcentrationVolume::uniform(d, kDefaultPitch, mixed), {12, 5}, 4).histogram();
  for (std::size_t p = 0; p < kPigmentCount; ++p) {
    const double f = static_cast<double>(h[p + 1]) / 1e6;
    CHECK(std::abs(f - mixed.c[p]) <= 4.0 * binomial_sd(mixed.c[p], 1000000) + 1e-12);
  }
  CHECK(h[0] == 0);
}

TEST_CASE("halftone is a pure function of seed and voxel index") {
  const Dims d{13, 7, 11};
  std::mt19937_64 rng(4);
  ConcentrationVolume cv(d, kDefaultPitch);
  for (std::size_t i = 0; i < cv.concentration.size(); ++i) {
    cv.concentration[i] = random_color_concentration(rng);
    cv.occupied[i] = i % 5 != 0;
  }
  const HalftoneSeed seed{99, volume_identity(d, kDefaultPitch)};
  const auto one = halftone(cv, seed, 1);
  CHECK(halftone(cv, seed, 7) == one);
  CHECK_FALSE(halftone(cv, {100, seed.volume_hash}, 1) == one);

  // Independent walk in reverse order with the documented stream.
  const std::uint64_t key = splitmix64(seed.seed ^ splitmix64(seed.volume_hash));
  CHECK(halftone_key(seed) == key);
  for (std::size_t i = cv.concentration.size(); i-- > 0;) {
    if (!cv.occupied[i]) {
      CHECK(one[i] == Label::Empty);
      continue;
    }
    const double u = unit_interval(splitmix64(key + i * 0x9e3779b97f4a7c15ULL));
    CHECK(halftone_uniform(key, i) == u);
    double cum = 0.0;
    int expected = 0;
    for (std::size_t p = 0; p < kPigmentCount; ++p) {
      if (cv.concentration[i].c[p] <= 0.0) continue;
      cum += cv.concentration[i].c[p];
      expected = static_cast<int>(p) + 1;
      if (u < cum) break;
    }
    CHECK(static_cast<int>(one[i]) == expected);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("convert an empty volume") {
  const RadianceVolume v({6, 5, 4}, kDefaultPitch);
  const auto result = convert(v, default_set(), color_lut(), rhok_lut());
  CHECK(result.report.empty == v.size());
  CHECK(result.labels.histogram()[0] == v.size());
  CHECK(result.report.residual_max == 0.0);

  ConvertParams clear;
  clear.exterior = Exterior::kClear;
  const auto filled = convert(v, default_set(), color_lut(), rhok_lut(), clear);
  CHECK(filled.labels.histogram()[static_cast<int>(Label::Cl)] == v.size());
}

TEST_CASE("convert refuses tables of another set") {
  const RadianceVolume v({2, 2, 2}, kDefaultPitch);
  const auto other = synth_pigment_set("scatter-heavy");
  CHECK_THROWS_WITH_AS(convert(v, other, color_lut(), rhok_lut()), doctest::Contains("pigment set"), ConfigError);
  ConvertParams p;
  p.alignment.t_ref_mm = 2.0;
  CHECK_THROWS_AS(convert(v, default_set(), color_lut(), rhok_lut(), p), ConfigError);
}

TEST_CASE("uniform volume follows its aligned concentration") {
  const Dims d{32, 32, 32};
  const RgbColor color{0.55, 0.4, 0.3};
  const auto v = uniform_volume(d, color, 0.6f);
  const auto result = convert(v, default_set(), color_lut(), rhok_lut(), {.seed = 5, .workers = 2});

  const auto cstar = lookup_concentration(color_lut(), color);
  const auto aligned = align_density(default_set(), rhok_lut(), cstar, sigma_scalar(default_set(), cstar), 0.6, color);
  const auto h = result.labels.histogram();
  for (std::size_t p = 0; p < kPigmentCount; ++p) {
    const double f = static_cast<double>(h[p + 1]) / static_cast<double>(d.voxel_count());
    CHECK(std::abs(f - aligned.concentration.c[p]) <= 4.0 * binomial_sd(aligned.concentration.c[p], d.voxel_count()) + 1e-12);
  }
  CHECK(result.report.alignment_max_rel_error <= 0.02);
  CHECK(result.report.empty == 0);
  CHECK(result.report.sigma_mean == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(result.report.sigma_histogram[1] == d.voxel_count());
}

TEST_CASE("sphere interior is printed, exterior empty") {
  const Dims d{32, 32, 32};
  const auto v = synth_volume("solid-sphere", d, 0);
  const auto a = convert(v, default_set(), color_lut(), rhok_lut(), {.seed = 1, .workers = 1});
  for (std::size_t i = 0; i < v.size(); ++i) CHECK((a.labels[i] != Label::Empty) == (v[i].sigma > 0.0f));
  // sigma 4 exceeds what the gray cap reaches for this color.
  CHECK(a.report.density_flagged == v.size() - a.report.empty);

  const auto b = convert(v, default_set(), color_lut(), rhok_lut(), {.seed = 1, .workers = 3});
  CHECK(a.labels == b.labels);
  const auto c = convert(v, default_set(), color_lut(), rhok_lut(), {.seed = 2, .workers = 3});
  CHECK_FALSE(a.labels == c.labels);
}

TEST_CASE("report json") {
  const auto v = synth_volume("cloud", {16, 16, 16}, 7);
  const auto r = convert(v, default_set(), color_lut(), rhok_lut(), {.seed = 9}).report;
  const auto j = r.to_json();
  CHECK(j["voxels"] == 4096);
  CHECK(j["seed"] == 9);
  CHECK(j["labels"]["Empty"] == r.labels[0]);
  std::size_t total = 0;
  for (auto& [name, count] : j["labels"].items()) total += count.get<std::size_t>();
  CHECK(total == 4096);
  CHECK(j["branches"]["diluted"].get<std::size_t>() + j["branches"]["augmented"].get<std::size_t>() +
            j["branches"]["unchanged"].get<std::size_t>() + j["empty"].get<std::size_t>() ==
        4096);
  CHECK(r.residual_p50 <= r.residual_p95);
  CHECK(r.residual_p95 <= r.residual_p99);
  CHECK(r.residual_p99 <= r.residual_max);
}

// ---------------------------------------------------------------------------

TEST_CASE("brute-force baseline") {
  const auto& set = default_set();
  const auto palette = label_colors(set, 1.0);

  SUBCASE("pure cyan volume") {
    const auto v = uniform_volume({5, 5, 5}, palette[static_cast<int>(Label::C)], 3.0f);
    CHECK(brute_force_convert(v, set).histogram()[static_cast<int>(Label::C)] == 125);
  }
  SUBCASE("empty neighborhood") {
    RadianceVolume v({5, 5, 5}, kDefaultPitch);
    v.at(4, 4, 4) = {0.2f, 0.3f, 0.9f, 1.0f};
    const auto labels = brute_force_convert(v, set);
    CHECK(labels.at(0, 0, 0) == Label::Empty);
    CHECK(labels.at(3, 3, 3) == Label::Empty);
    CHECK(labels.at(4, 4, 4) != Label::Empty);
  }
  SUBCASE("bad neighborhood") {
    const RadianceVolume v({2, 2, 2}, kDefaultPitch);
    CHECK_THROWS_AS(brute_force_convert(v, set, 2), ConfigError);
    CHECK_THROWS_AS(brute_force_convert(v, set, 0), ConfigError);
  }
}

TEST_CASE("brute-force labels of the gradient cube follow the Voronoi cells") {
  const auto& set = default_set();
  const Dims d{40, 4, 3};
  const auto v = synth_volume("gradient-cube", d, 0);
  const auto labels = brute_force_convert(v, set, 3, {}, 2);
  const auto palette = label_colors(set, 1.0);

  auto color_at = [&](double t) {
    const auto& a = synth::kGradientStart;
    const auto& b = synth::kGradientEnd;
    return RgbColor{a.r + t * (b.r - a.r), a.g + t * (b.g - a.g), a.b + t * (b.b - a.b)};
  };
  int boundaries = 0;
  Label previous = Label::Empty;
  for (int x = 0; x < d.nx; ++x) {
    Label expected = Label::Empty;
    if (x > 0) {
      // sigma grows as 4 t; the neighborhood mean weights each column by it.
      RgbColor sum{0, 0, 0};
      double w = 0.0;
      for (int xx = std::max(0, x - 1); xx <= std::min(d.nx - 1, x + 1); ++xx) {
        const double t = xx / static_cast<double>(d.nx - 1);
        const auto c = color_at(t);
        const double s = static_cast<float>(synth::kGradientSigma * t);
        sum.r += s * c.r, sum.g += s * c.g, sum.b += s * c.b;
        w += s;
      }
      const RgbColor mean{sum.r / w, sum.g / w, sum.b / w};
      int best = 1;
      for (int code = 2; code < kLabelCount; ++code)
        if (distance(mean, palette[code]) < distance(mean, palette[best])) best = code;
      expected = static_cast<Label>(best);
    }
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y) CHECK(labels.at(x, y, z) == expected);
    if (x > 1 && expected != previous) ++boundaries;
    previous = expected;
  }
  CHECK(boundaries >= 1);
}

// ---------------------------------------------------------------------------

TEST_CASE("preview of an empty volume") {
  const LabelVolume labels({8, 6, 4}, kDefaultPitch);
  for (Axis axis : {Axis::kX, Axis::kY, Axis::kZ}) {
    const auto img = preview_render(labels, default_set(), axis);
    CHECK(img.mean_opacity() == 0.0);
    CHECK(img.mean_color() == RgbColor{1, 1, 1});
  }
  const auto z = preview_render(labels, default_set(), Axis::kZ);
  CHECK(z.width == 8);
  CHECK(z.height == 6);
  const auto y = preview_render(labels, default_set(), Axis::kY);
  CHECK(y.width == 8);
  CHECK(y.height == 4);
  const auto x = preview_render(labels, default_set(), Axis::kX);
  CHECK(x.width == 6);
  CHECK(x.height == 4);
  const auto png = z.to_image8();
  CHECK(png.channels == 4);
  CHECK(png.pixels.size() == 8u * 6u * 4u);
  CHECK(png.pixels[3] == 0);
}

TEST_CASE("preview of a black slab") {
  const Dims d{12, 12, 80};
  LabelVolume labels(d, kDefaultPitch);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 3; y < 9; ++y)
      for (int x = 2; x < 10; ++x) labels.set(d.index(x, y, z), Label::K);
  const auto img = preview_render(labels, default_set(), Axis::kZ);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) {
      const std::size_t p = (static_cast<std::size_t>(y) * 12 + x) * 4;
      const bool inside = y >= 3 && y < 9 && x >= 2 && x < 10;
      if (inside) {
        CHECK(img.rgba[p + 3] > 0.99f);
        CHECK(img.rgba[p] < 0.05f);
      } else {
        CHECK(img.rgba[p + 3] == 0.0f);
      }
    }
}

TEST_CASE("preview of a halftoned cyan-magenta layer") {
  const auto& set = default_set();
  const Dims d{64, 64, 1};
  const auto cm = Concentration::blend(0.5, Concentration::pure(Pigment::C), Concentration::pure(Pigment::M));
  const auto labels = halftone(ConcentrationVolume::uniform(d, kDefaultPitch, cm), {1, 2});
  const auto img = preview_render(labels, set, Axis::kZ);

  const auto palette = label_colors(set, 1.0);
  const auto h = labels.histogram();
  const double step = kDefaultPitch[2];
  const double a_c = -std::expm1(-sigma_scalar(set, Concentration::pure(Pigment::C)) * step);
  const double a_m = -std::expm1(-sigma_scalar(set, Concentration::pure(Pigment::M)) * step);
  const double wc = a_c * h[1], wm = a_m * h[2];
  const auto& pc = palette[1];
  const auto& pm = palette[2];
  const RgbColor expected{(wc * pc.r + wm * pm.r) / (wc + wm), (wc * pc.g + wm * pm.g) / (wc + wm),
                          (wc * pc.b + wm * pm.b) / (wc + wm)};
  const auto mean = img.mean_color();
  CHECK(distance(mean, expected) <= 1e-5);
  CHECK(mean.r >= std::min(pc.r, pm.r));
  CHECK(mean.r <= std::max(pc.r, pm.r));
  CHECK(mean.g >= std::min(pc.g, pm.g));
  CHECK(mean.g <= std::max(pc.g, pm.g));
  CHECK(img.mean_opacity() == doctest::Approx((a_c * h[1] + a_m * h[2]) / 4096.0).epsilon(1e-5));
}

TEST_CASE("pigment-mix preview reproduces uniform in-gamut colors") {
  const auto& set = default_set();
  const Dims d{128, 128, 1};
  for (const RgbColor color : {RgbColor{0.6, 0.5, 0.4}, RgbColor{0.35, 0.55, 0.7}, RgbColor{0.8, 0.75, 0.3}}) {
    const auto v = uniform_volume(d, color, 2.0f);
    const auto result = convert(v, set, color_lut(), rhok_lut(), {.seed = 3});
    PreviewParams mix;
    mix.mode = PreviewMode::kPigmentMix;
    const auto print = preview_render(result.labels, set, Axis::kZ, mix).mean_color();
    const auto source = preview_source(v, Axis::kZ).mean_color();
    CHECK(distance(print, source) <= 0.05);

    // Per-voxel label colors do not blend subtractively, so the plain
    // composite drifts much further from the source.
    const auto composite = preview_render(result.labels, set, Axis::kZ).mean_color();
    CHECK(distance(composite, source) > distance(print, source));
  }
}

TEST_CASE("source preview") {
  const auto v = uniform_volume({4, 4, 10}, {0.2, 0.4, 0.6}, 5.0f);
  const auto img = preview_source(v, Axis::kZ);
  CHECK(distance(img.mean_color(), {0.2, 0.4, 0.6}) <= 1e-6);
  CHECK(img.mean_opacity() == doctest::Approx(-std::expm1(-5.0 * 10 * kDefaultPitch[2])).epsilon(1e-6));
  CHECK(preview_source(v, Axis::kZ, 2.0).mean_opacity() > img.mean_opacity());
  CHECK(parse_axis("y") == Axis::kY);
  CHECK(axis_name(Axis::kX) == "x");
  CHECK_THROWS_AS(parse_axis("w"), ConfigError);
}

// ---------------------------------------------------------------------------

TEST_CASE("slice export and import") {
  test_support::TempDir dir("slices");
  const Dims d{9, 7, 4};
  std::mt19937_64 rng(2);
  ConcentrationVolume cv(d, kDefaultPitch);
  for (std::size_t i = 0; i < cv.concentration.size(); ++i) {
    cv.concentration[i] = random_color_concentration(rng);
    cv.occupied[i] = i % 3 != 0;
  }
  const auto labels = halftone(cv, {7, 1});
  const auto manifest = export_slices(labels, dir / "out", 7, 3);
  CHECK(manifest.layer_hashes.size() == 4);
  for (int z = 0; z < 4; ++z) CHECK(std::filesystem::exists(dir / "out" / layer_file_name(z)));
  CHECK(std::filesystem::exists(dir / "out" / "manifest.json"));
  CHECK(layer_file_name(3) == "layer_00003.png");

  const auto again = export_slices(labels, dir / "again", 7, 1);
  CHECK(again.layer_hashes == manifest.layer_hashes);

  SliceManifest read;
  const auto back = import_slices(dir / "out", &read);
  CHECK(back == labels);
  CHECK(read.seed == 7);
  CHECK(read.dims == d);
  CHECK(read.pitch == kDefaultPitch);

  const auto png = read_png(dir / "out" / layer_file_name(1), 1);
  CHECK(png.width == 9);
  CHECK(png.height == 7);
  CHECK(png.pixels[3] == labels.codes()[d.layer_size() + 3]);

  SUBCASE("tampered layer") {
    Image8 img = read_png(dir / "out" / layer_file_name(2), 1);
    img.pixels[0] = img.pixels[0] == 1 ? 2 : 1;
    write_png(img, dir / "out" / layer_file_name(2));
    CHECK_THROWS_WITH_AS(import_slices(dir / "out"), doctest::Contains("hash"), FormatError);
  }
  SUBCASE("out of range code") {
    Image8 img = read_png(dir / "out" / layer_file_name(0), 1);
    img.pixels[0] = 9;
    write_png(img, dir / "out" / layer_file_name(0));
    CHECK_THROWS_WITH_AS(import_slices(dir / "out"), doctest::Contains("out of range"), FormatError);
  }
  SUBCASE("unwritable directory") {
    std::ofstream(dir / "file") << "x";
    CHECK_THROWS_AS(export_slices(labels, dir / "file" / "sub", 7), FormatError);
  }
  SUBCASE("missing manifest") { CHECK_THROWS_AS(import_slices(dir.path()), FormatError); }
}

TEST_CASE("manifest json") {
  SliceManifest m{{2, 3, 2}, kDefaultPitch, 42, {"00000000000000aa", "00000000000000bb"}};
  const auto j = m.to_json();
  CHECK(j["format"] == "voxprint-slices");
  CHECK(j["palette"]["6"] == "Cl");
  CHECK(j["layers"][1]["file"] == "layer_00001.png");
  const auto back = SliceManifest::from_json(j);
  CHECK(back.layer_hashes == m.layer_hashes);
  CHECK(back.seed == 42);
  auto bad = j;
  bad["layers"].erase(1);
  CHECK_THROWS_AS(SliceManifest::from_json(bad), FormatError);
}
