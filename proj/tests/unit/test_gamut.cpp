#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "voxprint/calib.hpp"
#include "voxprint/errors.hpp"
#include "voxprint/gamut.hpp"

using namespace voxprint;

namespace {

const PigmentSet& default_set() {
  static const PigmentSet set = synth_pigment_set("default");
  return set;
}

// Small table shared by the lookup tests; 17^3 nodes keeps the suite fast.
const ColorLut& small_lut() {
  static const ColorLut lut = build_color_lut(default_set(), 17, 1.0, {.workers = 2});
  return lut;
}

bool on_simplex(const Concentration& c, double tol = 1e-9) {
  for (double v : c.c)
    if (v < 0.0 || v > 1.0) return false;
  return std::abs(c.sum() - 1.0) <= tol;
}

}  // namespace

TEST_CASE("simplex projection") {
  std::vector<double> inside = {0.2, 0.3, 0.5};
  project_to_simplex(inside);
  CHECK(inside[0] == doctest::Approx(0.2));
  CHECK(inside[2] == doctest::Approx(0.5));

  std::vector<double> v = {2.0, 0.0, 0.0};
  project_to_simplex(v);
  CHECK(v == std::vector<double>{1.0, 0.0, 0.0});

  std::vector<double> w = {0.5, 0.5, 0.5, 0.5};
  project_to_simplex(w);
  for (double x : w) CHECK(x == doctest::Approx(0.25));

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> x(5);
    for (double& e : x) e = n(rng);
    const auto original = x;
    project_to_simplex(x);
    double sum = 0.0;
    for (double e : x) {
      sum += e;
      CHECK(e >= 0.0);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // Projection is idempotent.
    auto again = x;
    project_to_simplex(again);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(again[k] == doctest::Approx(x[k]).epsilon(1e-12));
    (void)original;
  }
}

TEST_CASE("solve_concentration examples") {
  const auto& set = default_set();
  const test_support::SimplexGridOracle oracle(set, 1.0);

  SUBCASE("pure cyan is a fixed point") {
    const auto target = concentration_to_rgb(set, Concentration::pure(Pigment::C), 1.0);
    const auto sol = solve_concentration(set, target, 1.0);
    CHECK(sol.residual < 1e-4);
    for (std::size_t i = 0; i < kPigmentCount; ++i) {
      CHECK(std::abs(sol.concentration.c[i] - Concentration::pure(Pigment::C).c[i]) <= 1e-3);
    }
  }
  SUBCASE("white target is mostly W") {
    const auto sol = solve_concentration(set, {1, 1, 1}, 1.0);
    CHECK(sol.concentration[Pigment::W] > 0.9);
    CHECK(sol.residual < 0.02);
    CHECK(sol.residual <= oracle.best({1, 1, 1}).first + 1e-6);
  }
  SUBCASE("saturated magenta beyond the pigments") {
    const RgbColor target{1, 0, 1};
    const auto sol = solve_concentration(set, target, 1.0);
    const double grid = oracle.best(target).first;
    CHECK(sol.residual > 0.05);
    CHECK(std::abs(sol.residual - grid) <= 0.01);
  }
}

TEST_CASE("solver matches or beats the coarse grid") {
  const auto& set = default_set();
  const test_support::SimplexGridOracle oracle(set, 1.0);
  const ColorModel model(set, 1.0);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    const RgbColor target{u(rng), u(rng), u(rng)};
    const auto sol = solve_concentration(model, target);
    CHECK(on_simplex(sol.concentration));
    CHECK(sol.concentration[Pigment::Cl] == 0.0);
    CHECK(sol.residual <= oracle.best(target).first + 1e-6);
    CHECK(sol.residual == doctest::Approx(distance(concentration_to_rgb(set, sol.concentration, 1.0), target))
                              .epsilon(1e-9));
  }
}

TEST_CASE("solver starts") {
  const auto starts = solver_starts(20);
  CHECK(starts.size() == 26);
  for (const auto& s : starts) CHECK(on_simplex(s));
  CHECK(starts[0][Pigment::C] == 1.0);
}

TEST_CASE("color model gradient agrees with finite differences") {
  const ColorModel model(default_set(), 1.0);
  const RgbColor target{0.3, 0.5, 0.7};
  ColorModel::Weights c = {0.1, 0.2, 0.3, 0.05, 0.35};
  ColorModel::Weights grad{};
  const double f = model.objective_gradient(c, target, grad);
  CHECK(f == doctest::Approx(model.objective(c, target)).epsilon(1e-12));
  for (std::size_t i = 0; i < kColorPigmentCount; ++i) {
    auto hi = c, lo = c;
    hi[i] += 1e-6;
    lo[i] -= 1e-6;
    const double fd = (model.objective(hi, target) - model.objective(lo, target)) / 2e-6;
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("resolution-2 table") {
  const auto& set = default_set();
  const auto lut = build_color_lut(set, 2, 1.0);
  CHECK(lut.entry_count() == 8);
  CHECK(lut.set_hash() == set.hash());
  const ColorModel model(set, 1.0);
  for (int ib = 0; ib < 2; ++ib)
    for (int ig = 0; ig < 2; ++ig)
      for (int ir = 0; ir < 2; ++ir) {
        const auto e = lut.index(ir, ig, ib);
        const auto direct = solve_concentration(model, lut.node_color(ir, ig, ib));
        if (ir == 0) {
          // First node of each row has no neighbor seed: identical to a single solve.
          for (std::size_t i = 0; i < kPigmentCount; ++i)
            CHECK(lut.concentration(e).c[i] == doctest::Approx(direct.concentration.c[i]).epsilon(1e-6));
        }
        CHECK(lut.residual(e) <= direct.residual + 1e-4);
      }
  CHECK_THROWS_AS(build_color_lut(set, 1, 1.0), ConfigError);
}

TEST_CASE("lookup at nodes and between equal nodes") {
  const auto& lut = small_lut();
  const auto e = lut.index(3, 5, 7);
  const auto at_node = lookup_concentration(lut, lut.node_color(3, 5, 7));
  for (std::size_t i = 0; i < kPigmentCount; ++i) CHECK(at_node.c[i] == doctest::Approx(lut.concentration(e).c[i]).epsilon(1e-6));

  // Two nodes with identical entries interpolate to that entry.
  std::vector<float> raw(8 * ColorLut::kFloatsPerEntry, 0.0f);
  for (std::size_t n = 0; n < 8; ++n) {
    raw[n * ColorLut::kFloatsPerEntry + 1] = 0.25f;
    raw[n * ColorLut::kFloatsPerEntry + 4] = 0.75f;
  }
  const ColorLut flat(2, 1, 1.0, raw);
  const auto mid = lookup_concentration(flat, {0.5, 0.0, 0.0});
  CHECK(mid[Pigment::M] == doctest::Approx(0.25));
  CHECK(mid[Pigment::W] == doctest::Approx(0.75));
}

TEST_CASE("table entries lie on the simplex") {
  const auto& lut = small_lut();
  for (std::size_t e = 0; e < lut.entry_count(); ++e) {
    const auto c = lut.concentration(e);
    CHECK(c[Pigment::Cl] == 0.0);
    CHECK(std::abs(c.sum() - 1.0) <= 1e-6);  // float storage
  }
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) CHECK(on_simplex(lookup_concentration(lut, {u(rng), u(rng), u(rng)})));
}

TEST_CASE("lookup tracks the direct solve on in-gamut colors") {
  const auto& set = default_set();
  const auto& lut = small_lut();
  const ColorModel model(set, 1.0);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int close = 0, total = 0;
  for (int i = 0; i < 200; ++i) {
    // In-gamut by construction: the color of a random mixture.
    ColorModel::Weights w{};
    Concentration c;
    double s = 0.0;
    for (std::size_t k = 0; k < kColorPigmentCount; ++k) s += c.c[k] = std::pow(u(rng), 3.0);
    for (std::size_t k = 0; k < kColorPigmentCount; ++k) c.c[k] /= s;
    (void)w;
    const auto target = concentration_to_rgb(set, c, 1.0);
    const auto looked = concentration_to_rgb(set, lookup_concentration(lut, target), 1.0);
    const auto direct = solve_concentration(model, target);
    ++total;
    if (distance(looked, target) - direct.residual <= 0.02) ++close;
  }
  CHECK(static_cast<double>(close) / total >= 0.95);
}

TEST_CASE("table is independent of the worker count") {
  const auto& set = synth_pigment_set("scatter-heavy");
  const auto a = build_color_lut(set, 5, 1.0, {.workers = 1});
  const auto b = build_color_lut(set, 5, 1.0, {.workers = 3});
  CHECK(a == b);
  CHECK(a.set_hash() != small_lut().set_hash());
}

TEST_CASE("color table files") {
  test_support::TempDir dir("lut");
  const auto& lut = small_lut();
  save_color_lut(lut, dir / "color.vlut");
  CHECK(load_color_lut(dir / "color.vlut") == lut);

  SUBCASE("bad magic") {
    std::fstream f(dir / "color.vlut", std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
    f.close();
    CHECK_THROWS_WITH_AS(load_color_lut(dir / "color.vlut"), doctest::Contains("bad magic"), FormatError);
  }
  SUBCASE("truncated") {
    std::filesystem::resize_file(dir / "color.vlut", std::filesystem::file_size(dir / "color.vlut") - 3);
    CHECK_THROWS_AS(load_color_lut(dir / "color.vlut"), FormatError);
  }
  SUBCASE("missing") { CHECK_THROWS_AS(load_color_lut(dir / "nope.vlut"), FormatError); }
}

TEST_CASE("gray brightness solve") {
  const auto& set = default_set();
  const double white = mean_brightness(concentration_to_rgb(set, Concentration::pure(Pigment::W), 1.0));
  const double black = mean_brightness(concentration_to_rgb(set, Concentration::pure(Pigment::K), 1.0));
  CHECK(solve_rhok(set, white, 1.0) == 0.0);
  CHECK(solve_rhok(set, black, 1.0) == 1.0);
  CHECK(solve_rhok(set, 1.0, 1.0) == 0.0);
  CHECK(solve_rhok(set, 0.0, 1.0) == 1.0);
  const double rho = solve_rhok(set, 0.5, 1.0);
  CHECK(std::abs(rho - test_support::scan_rhok(set, 0.5, 1.0)) <= 1e-4);
  CHECK(rho == doctest::Approx(0.276731688).epsilon(1e-6));
  const auto g = gray_mix(0.3);
  CHECK(g[Pigment::K] == 0.3);
  CHECK(g[Pigment::W] == 0.7);
}

TEST_CASE("brightness table") {
  const auto& set = default_set();
  const auto lut = build_rhok_lut(set, 1.0);
  REQUIRE(lut.size() == 100);
  CHECK(lookup_rhok(lut, 0.0) == lut[0]);
  CHECK(lookup_rhok(lut, -3.0) == lut[0]);
  CHECK(lookup_rhok(lut, 2.0) == lut[99]);
  CHECK(lookup_rhok(lut, 33.0 / 99.0) == doctest::Approx(lut[33]).epsilon(1e-12));
  CHECK(std::abs(lookup_rhok(lut, 0.505) - solve_rhok(set, 0.505, 1.0)) <= 0.02);

  for (const auto& name : synth_recipe_names()) {
    const auto t = build_rhok_lut(synth_pigment_set(name), 1.0, 40);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] <= t[i - 1]);
  }

  test_support::TempDir dir("rhok");
  save_rhok_lut(lut, dir / "rhok.vlut");
  CHECK(load_rhok_lut(dir / "rhok.vlut") == lut);
  std::filesystem::resize_file(dir / "rhok.vlut", 10);
  CHECK_THROWS_AS(load_rhok_lut(dir / "rhok.vlut"), FormatError);
  CHECK_THROWS_AS(build_rhok_lut(set, 1.0, 1), ConfigError);
}

TEST_CASE("coverage") {
  const auto& lut = small_lut();
  const double cov = gamut_coverage(lut, 0.02);
  CHECK(cov > 0.0);
  CHECK(cov < 1.0);
  CHECK(gamut_coverage(lut, 10.0) == 1.0);
  CHECK(gamut_coverage(lut, 0.0) == 0.0);
}
