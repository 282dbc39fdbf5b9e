#include "voxprint/gamut.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>

#include "binary_io.hpp"
#include "voxprint/errors.hpp"
#include "voxprint/parallel.hpp"

namespace voxprint {

namespace {

constexpr std::array<Pigment, kColorPigmentCount> kColorPigments = {Pigment::C, Pigment::M, Pigment::Y, Pigment::K,
                                                                    Pigment::W};

ColorModel::Weights to_weights(const Concentration& c) {
  ColorModel::Weights w{};
  for (std::size_t i = 0; i < kColorPigmentCount; ++i) w[i] = c[kColorPigments[i]];
  return w;
}

Concentration to_concentration(const ColorModel::Weights& w) {
  Concentration c;
  for (std::size_t i = 0; i < kColorPigmentCount; ++i) c[kColorPigments[i]] = w[i];
  return c;
}

double band_sum(double k, double s, double t) {
  const auto b = km_band(k, s, t);
  return b.reflectance + b.transmittance;
}

}  // namespace

void project_to_simplex(std::span<double> v) {
  // Sort-based projection (Held, Wolfe, Crowder 1974).
  const std::size_t n = v.size();
  if (n == 0) return;
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  for (double& x : v) x = std::max(0.0, x - theta);
}

ColorModel::ColorModel(const PigmentSet& set, double t_ref_mm) : t_ref_mm_(t_ref_mm) {
  if (!(t_ref_mm > 0.0)) throw DomainError("reference thickness must be positive");
  for (std::size_t i = 0; i < kColorPigmentCount; ++i) {
    const auto& prof = set[kColorPigments[i]];
    for (std::size_t b = 0; b < kBandCount; ++b) {
      k_[i][b] = prof.absorption[b];
      s_[i][b] = prof.scattering[b];
    }
  }
}

RgbColor ColorModel::rgb(const Weights& c) const {
  std::array<double, kBandCount> rt{};
  for (std::size_t b = 0; b < kBandCount; ++b) {
    double k = 0.0, s = 0.0;
    for (std::size_t i = 0; i < kColorPigmentCount; ++i) {
      k += c[i] * k_[i][b];
      s += c[i] * s_[i][b];
    }
    rt[b] = band_sum(std::max(0.0, k), std::max(0.0, s), t_ref_mm_);
  }
  return RgbProjector::instance().project(rt);
}

double ColorModel::objective(const Weights& c, const RgbColor& target, bool clamped) const {
  const RgbColor color = clamped ? clamp_unit(rgb(c)) : rgb(c);
  const double dr = color.r - target.r;
  const double dg = color.g - target.g;
  const double db = color.b - target.b;
  return dr * dr + dg * dg + db * db;
}

double ColorModel::objective_gradient(const Weights& c, const RgbColor& target, Weights& gradient,
                                      bool clamped) const {
  std::array<double, kBandCount> rt{}, d_k{}, d_s{};
  const double t = t_ref_mm_;
  for (std::size_t b = 0; b < kBandCount; ++b) {
    double k = 0.0, s = 0.0;
    for (std::size_t i = 0; i < kColorPigmentCount; ++i) {
      k += c[i] * k_[i][b];
      s += c[i] * s_[i][b];
    }
    k = std::max(0.0, k);
    s = std::max(0.0, s);
    rt[b] = band_sum(k, s, t);
    const double hk = 1e-6 * std::max(k, 1e-3);
    const double km = std::max(0.0, k - hk);
    d_k[b] = (band_sum(k + hk, s, t) - band_sum(km, s, t)) / (k + hk - km);
    const double hs = 1e-6 * std::max(s, 1e-3);
    const double sm = std::max(0.0, s - hs);
    d_s[b] = (band_sum(k, s + hs, t) - band_sum(k, sm, t)) / (s + hs - sm);
  }
  const auto& proj = RgbProjector::instance();
  const RgbColor raw = proj.project(rt);
  const RgbColor color = clamped ? clamp_unit(raw) : raw;
  const double res[3] = {color.r - target.r, color.g - target.g, color.b - target.b};
  // Clamped channels contribute nothing to the gradient.
  double coeff[3];
  for (int ch = 0; ch < 3; ++ch) {
    const bool inside = !clamped || (raw[static_cast<std::size_t>(ch)] > 0.0 && raw[static_cast<std::size_t>(ch)] < 1.0);
    coeff[ch] = inside ? 2.0 * res[ch] : 0.0;
  }
  gradient.fill(0.0);
  const auto& w = proj.weights();
  for (std::size_t b = 0; b < kBandCount; ++b) {
    const double q = coeff[0] * w[0][b] + coeff[1] * w[1][b] + coeff[2] * w[2][b];
    if (q == 0.0) continue;
    const double gk = q * d_k[b];
    const double gs = q * d_s[b];
    for (std::size_t i = 0; i < kColorPigmentCount; ++i) gradient[i] += gk * k_[i][b] + gs * s_[i][b];
  }
  return res[0] * res[0] + res[1] * res[1] + res[2] * res[2];
}

// ---------------------------------------------------------------------------
// Solver

namespace {

double radical_inverse(int index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * (index % base);
    index /= base;
    f /= base;
  }
  return result;
}

double dot(const ColorModel::Weights& a, const ColorModel::Weights& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kColorPigmentCount; ++i) s += a[i] * b[i];
  return s;
}

bool better(const ColorSolution& a, const ColorSolution& b, double tie) {
  if (a.residual < b.residual - tie) return true;
  if (a.residual > b.residual + tie) return false;
  return std::lexicographical_compare(a.concentration.c.begin(), a.concentration.c.end(), b.concentration.c.begin(),
                                      b.concentration.c.end());
}

}  // namespace

std::vector<Concentration> solver_starts(int interior_starts) {
  std::vector<Concentration> starts;
  for (Pigment p : kColorPigments) starts.push_back(Concentration::pure(p));
  Concentration center;
  for (Pigment p : kColorPigments) center[p] = 1.0 / kColorPigmentCount;
  starts.push_back(center);
  // Halton points pushed through -log give Dirichlet(1,...,1) samples:
  // uniform over the simplex.
  static constexpr int kBases[kColorPigmentCount] = {2, 3, 5, 7, 11};
  for (int n = 1; n <= interior_starts; ++n) {
    ColorModel::Weights w{};
    double total = 0.0;
    for (std::size_t i = 0; i < kColorPigmentCount; ++i) {
      w[i] = -std::log(radical_inverse(n, kBases[i]) + 1e-12);
      total += w[i];
    }
    for (double& x : w) x /= total;
    starts.push_back(to_concentration(w));
  }
  return starts;
}

namespace {

ColorModel::Weights descend(const ColorModel& model, const RgbColor& target, ColorModel::Weights x,
                            const SolverOptions& options, bool clamped) {
  project_to_simplex(x);
  ColorModel::Weights g{};
  double f = model.objective_gradient(x, target, g, clamped);
  double alpha = 1.0;
  for (int iter = 0; iter < options.max_iterations && f > 0.0; ++iter) {
    ColorModel::Weights xn{};
    double fn = f;
    double a = alpha;
    bool moved = false;
    // Armijo backtracking along the projection arc.
    while (a > 1e-14) {
      for (std::size_t i = 0; i < kColorPigmentCount; ++i) xn[i] = x[i] - a * g[i];
      project_to_simplex(xn);
      ColorModel::Weights d{};
      for (std::size_t i = 0; i < kColorPigmentCount; ++i) d[i] = xn[i] - x[i];
      if (dot(d, d) == 0.0) break;
      fn = model.objective(xn, target, clamped);
      if (fn <= f + 1e-4 * dot(g, d)) {
        moved = true;
        break;
      }
      a *= 0.5;
    }
    if (!moved) break;
    ColorModel::Weights gn{};
    fn = model.objective_gradient(xn, target, gn, clamped);
    ColorModel::Weights s{}, y{};
    for (std::size_t i = 0; i < kColorPigmentCount; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
    }
    const double step = std::sqrt(dot(s, s));
    x = xn;
    f = fn;
    g = gn;
    if (step < options.step_tolerance) break;
    // Barzilai-Borwein step length for the next trial.
    const double sy = dot(s, y);
    alpha = sy > 0.0 ? std::clamp(dot(s, s) / sy, 1e-6, 1e4) : std::min(a * 4.0, 1e4);
  }
  return x;
}

}  // namespace

ColorSolution descend_from(const ColorModel& model, const RgbColor& target, const Concentration& start,
                           const SolverOptions& options) {
  const auto x = descend(model, target, to_weights(start), options, true);
  return {to_concentration(x), std::sqrt(model.objective(x, target))};
}

ColorSolution descend_unclamped_first(const ColorModel& model, const RgbColor& target, const Concentration& start,
                                      const SolverOptions& options) {
  const auto smooth = descend(model, target, to_weights(start), options, false);
  const auto x = descend(model, target, smooth, options, true);
  return {to_concentration(x), std::sqrt(model.objective(x, target))};
}

ColorSolution solve_concentration(const ColorModel& model, const RgbColor& target,
                                  std::span<const Concentration> extra_starts, const SolverOptions& options) {
  static thread_local std::vector<Concentration> cached_starts;
  static thread_local int cached_count = -1;
  if (cached_count != options.interior_starts) {
    cached_starts = solver_starts(options.interior_starts);
    cached_count = options.interior_starts;
  }
  ColorSolution best{Concentration::pure(Pigment::W), std::numeric_limits<double>::infinity()};
  auto consider = [&](const Concentration& start) {
    const auto sol = descend_from(model, target, start, options);
    if (better(sol, best, options.tie_tolerance)) best = sol;
  };
  for (const auto& s : cached_starts) consider(s);
  for (const auto& s : extra_starts) consider(s);
  // A channel pinned at 0 or 1 has no gradient, which can strand every
  // start on a plateau; the unclamped objective sees through it.
  for (std::size_t i = 0; i <= kColorPigmentCount && i < cached_starts.size(); ++i) {
    const auto sol = descend_unclamped_first(model, target, cached_starts[i], options);
    if (better(sol, best, options.tie_tolerance)) best = sol;
  }
  return best;
}

ColorSolution solve_concentration(const PigmentSet& set, const RgbColor& target, double t_ref_mm) {
  const ColorModel model(set, t_ref_mm);
  return solve_concentration(model, target);
}

// ---------------------------------------------------------------------------
// Color LUT

ColorLut::ColorLut(int resolution, std::uint64_t set_hash, double t_ref_mm, std::vector<float> entries)
    : resolution_(resolution), set_hash_(set_hash), t_ref_mm_(t_ref_mm), entries_(std::move(entries)) {
  if (resolution < 2) throw ConfigError("color LUT resolution must be at least 2");
  if (entries_.size() != entry_count() * kFloatsPerEntry) throw FormatError("color LUT payload size mismatch");
}

std::size_t ColorLut::entry_count() const {
  const auto n = static_cast<std::size_t>(resolution_);
  return n * n * n;
}

std::size_t ColorLut::index(int ir, int ig, int ib) const {
  const auto n = static_cast<std::size_t>(resolution_);
  return static_cast<std::size_t>(ir) + n * (static_cast<std::size_t>(ig) + n * static_cast<std::size_t>(ib));
}

Concentration ColorLut::concentration(std::size_t entry) const {
  Concentration c;
  for (std::size_t i = 0; i < kPigmentCount; ++i) c.c[i] = entries_[entry * kFloatsPerEntry + i];
  return c;
}

double ColorLut::residual(std::size_t entry) const { return entries_[entry * kFloatsPerEntry + kPigmentCount]; }

RgbColor ColorLut::node_color(int ir, int ig, int ib) const {
  const double scale = 1.0 / (resolution_ - 1);
  return {ir * scale, ig * scale, ib * scale};
}

ColorLut build_color_lut(const PigmentSet& set, int resolution, double t_ref_mm, const LutBuildOptions& options) {
  if (resolution < 2) throw ConfigError("color LUT resolution must be at least 2, got " + std::to_string(resolution));
  const ColorModel model(set, t_ref_mm);
  const auto n = static_cast<std::size_t>(resolution);
  std::vector<float> entries(n * n * n * ColorLut::kFloatsPerEntry);
  const double scale = 1.0 / (resolution - 1);

  parallel_for(n * n, options.workers, [&](std::size_t row) {
    const auto ig = static_cast<int>(row % n);
    const auto ib = static_cast<int>(row / n);
    std::optional<Concentration> previous;
    for (int ir = 0; ir < resolution; ++ir) {
      const RgbColor target{ir * scale, ig * scale, ib * scale};
      ColorSolution sol;
      bool solved = false;
      if (previous) {
        sol = descend_from(model, target, *previous, options.solver);
        solved = sol.residual <= options.seed_accept_residual;
      }
      if (!solved) {
        if (previous) {
          const Concentration seed[1] = {*previous};
          sol = solve_concentration(model, target, seed, options.solver);
        } else {
          sol = solve_concentration(model, target, {}, options.solver);
        }
      }
      previous = sol.concentration;
      const std::size_t entry = static_cast<std::size_t>(ir) + n * row;
      for (std::size_t i = 0; i < kPigmentCount; ++i) {
        entries[entry * ColorLut::kFloatsPerEntry + i] = static_cast<float>(sol.concentration.c[i]);
      }
      entries[entry * ColorLut::kFloatsPerEntry + kPigmentCount] = static_cast<float>(sol.residual);
    }
  });
  return ColorLut(resolution, set.hash(), t_ref_mm, std::move(entries));
}

namespace {

struct Cell {
  int i0;
  double f;
};

Cell locate(double v, int resolution) {
  const double x = std::clamp(v, 0.0, 1.0) * (resolution - 1);
  int i0 = static_cast<int>(std::floor(x));
  i0 = std::clamp(i0, 0, resolution - 2);
  return {i0, x - i0};
}

template <typename Fn>
void for_each_corner(const ColorLut& lut, const RgbColor& target, Fn&& fn) {
  const int n = lut.resolution();
  const Cell cr = locate(target.r, n), cg = locate(target.g, n), cb = locate(target.b, n);
  for (int corner = 0; corner < 8; ++corner) {
    const int dr = corner & 1, dg = (corner >> 1) & 1, db = (corner >> 2) & 1;
    const double w = (dr ? cr.f : 1.0 - cr.f) * (dg ? cg.f : 1.0 - cg.f) * (db ? cb.f : 1.0 - cb.f);
    if (w == 0.0) continue;
    fn(lut.index(cr.i0 + dr, cg.i0 + dg, cb.i0 + db), w);
  }
}

}  // namespace

Concentration lookup_concentration(const ColorLut& lut, const RgbColor& target) {
  Concentration out;
  for_each_corner(lut, target, [&](std::size_t entry, double w) {
    const float* e = lut.raw().data() + entry * ColorLut::kFloatsPerEntry;
    for (std::size_t i = 0; i < kPigmentCount; ++i) out.c[i] += w * e[i];
  });
  double total = 0.0;
  for (double& v : out.c) {
    v = std::max(0.0, v);
    total += v;
  }
  if (total <= 0.0) return Concentration::pure(Pigment::W);
  for (double& v : out.c) v /= total;
  return out;
}

double lookup_residual(const ColorLut& lut, const RgbColor& target) {
  double out = 0.0;
  for_each_corner(lut, target, [&](std::size_t entry, double w) { out += w * lut.residual(entry); });
  return out;
}

double gamut_coverage(const ColorLut& lut, double threshold) {
  const std::size_t n = lut.entry_count();
  if (n == 0) return 0.0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < n; ++i) inside += lut.residual(i) < threshold ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(n);
}

void save_color_lut(const ColorLut& lut, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write color LUT " + path.string());
  out.write("VPPL", 4);
  detail::put_u32(out, ColorLut::kVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(lut.resolution()));
  detail::put_u64(out, lut.set_hash());
  detail::put_f64(out, lut.t_ref_mm());
  for (float v : lut.raw()) detail::put_f32(out, v);
  if (!out) throw FormatError("write failed for " + path.string());
}

ColorLut load_color_lut(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open color LUT " + path.string());
  const std::string what = "color LUT " + path.string();
  char magic[4];
  detail::read_exact(in, magic, 4, what);
  if (std::string(magic, 4) != "VPPL") throw FormatError(what + ": bad magic");
  const auto version = detail::get_u32(in, what);
  if (version != ColorLut::kVersion) throw FormatError(what + ": unsupported version " + std::to_string(version));
  const auto resolution = detail::get_u32(in, what);
  if (resolution < 2 || resolution > 4096) throw FormatError(what + ": bad resolution");
  const auto hash = detail::get_u64(in, what);
  const double t_ref = detail::get_f64(in, what);
  const std::size_t n = static_cast<std::size_t>(resolution);
  std::vector<float> entries(n * n * n * ColorLut::kFloatsPerEntry);
  for (float& v : entries) v = detail::get_f32(in, what);
  return ColorLut(static_cast<int>(resolution), hash, t_ref, std::move(entries));
}

// ---------------------------------------------------------------------------
// Brightness -> rho^K

Concentration gray_mix(double rho) {
  Concentration c;
  c[Pigment::K] = rho;
  c[Pigment::W] = 1.0 - rho;
  return c;
}

double solve_rhok(const PigmentSet& set, double brightness, double t_ref_mm) {
  auto cost = [&](double rho) {
    const double d = mean_brightness(concentration_to_rgb(set, gray_mix(rho), t_ref_mm)) - brightness;
    return d * d;
  };
  constexpr double kInvPhi = 0.6180339887498949;
  double a = 0.0, b = 1.0;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = cost(x1), f2 = cost(x2);
  while (b - a > 1e-6) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = cost(x2);
    }
  }
  // The optimum can sit on the boundary; golden section never samples it.
  double best = 0.5 * (a + b);
  double best_cost = cost(best);
  for (double edge : {0.0, 1.0}) {
    const double c = cost(edge);
    if (c < best_cost) {
      best = edge;
      best_cost = c;
    }
  }
  return best;
}

RhoKLut::RhoKLut(std::uint64_t set_hash, double t_ref_mm, std::vector<float> entries)
    : set_hash_(set_hash), t_ref_mm_(t_ref_mm), entries_(std::move(entries)) {
  if (entries_.size() < 2) throw ConfigError("rho^K table needs at least two entries");
}

RhoKLut build_rhok_lut(const PigmentSet& set, double t_ref_mm, int count) {
  if (count < 2) throw ConfigError("rho^K table needs at least two entries");
  std::vector<float> entries(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    entries[static_cast<std::size_t>(i)] =
        static_cast<float>(solve_rhok(set, static_cast<double>(i) / (count - 1), t_ref_mm));
  }
  return RhoKLut(set.hash(), t_ref_mm, std::move(entries));
}

double lookup_rhok(const RhoKLut& lut, double brightness) {
  const auto n = static_cast<int>(lut.size());
  const double x = std::clamp(brightness, 0.0, 1.0) * (n - 1);
  const int i0 = std::clamp(static_cast<int>(std::floor(x)), 0, n - 2);
  const double f = x - i0;
  return (1.0 - f) * lut[static_cast<std::size_t>(i0)] + f * lut[static_cast<std::size_t>(i0 + 1)];
}

void save_rhok_lut(const RhoKLut& lut, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write rho^K LUT " + path.string());
  out.write("VPPK", 4);
  detail::put_u32(out, RhoKLut::kVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(lut.size()));
  detail::put_u64(out, lut.set_hash());
  detail::put_f64(out, lut.t_ref_mm());
  for (float v : lut.raw()) detail::put_f32(out, v);
  if (!out) throw FormatError("write failed for " + path.string());
}

RhoKLut load_rhok_lut(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open rho^K LUT " + path.string());
  const std::string what = "rho^K LUT " + path.string();
  char magic[4];
  detail::read_exact(in, magic, 4, what);
  if (std::string(magic, 4) != "VPPK") throw FormatError(what + ": bad magic");
  const auto version = detail::get_u32(in, what);
  if (version != RhoKLut::kVersion) throw FormatError(what + ": unsupported version " + std::to_string(version));
  const auto count = detail::get_u32(in, what);
  if (count < 2 || count > (1u << 20)) throw FormatError(what + ": bad entry count");
  const auto hash = detail::get_u64(in, what);
  const double t_ref = detail::get_f64(in, what);
  std::vector<float> entries(count);
  for (float& v : entries) v = detail::get_f32(in, what);
  return RhoKLut(hash, t_ref, std::move(entries));
}

}  // namespace voxprint
