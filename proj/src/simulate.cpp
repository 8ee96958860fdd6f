#include "exprec/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "exprec/fft.hpp"
#include "exprec/rng.hpp"

namespace exprec {
namespace {

constexpr double kPi = std::numbers::pi;

void check_mask(const SamplingMask& mask, const Grid& g) {
  require(mask.grid.same_shape(g) && mask.bits.size() == g.size(), Errc::shape_mismatch,
          "mask does not match grid");
}

void check_coils(const CoilSet& coils, const Grid& g) {
  require(coils.P == g.P && coils.Q == g.Q && coils.count() >= 1, Errc::shape_mismatch,
          "coil maps do not match grid");
}

// Low-pass a real map with a frequency-domain Gaussian of standard deviation
// `bandwidth` (in frequency samples).
std::vector<double> smooth(const std::vector<double>& map, int P, int Q, double bandwidth) {
  std::vector<cx> f(map.begin(), map.end());
  fft::forward(f, P, Q);
  for (int x = 0; x < P; ++x)
    for (int y = 0; y < Q; ++y) {
      const double kx = centered_freq(x, P), ky = centered_freq(y, Q);
      f[std::size_t(x) * Q + y] *= std::exp(-(kx * kx + ky * ky) / (2.0 * bandwidth * bandwidth));
    }
  fft::backward(f, P, Q);
  std::vector<double> out(map.size());
  const double n = double(P) * Q;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f[i].real() / n;
  return out;
}

struct Ellipse {
  double cx, cy, ax, ay;
  bool inside(double x, double y) const {
    const double u = (x - cx) / ax, v = (y - cy) / ay;
    return u * u + v * v <= 1.0;
  }
};

struct Tissue {
  double amp;
  double t2;
};

// Smooth low-order phase so amplitudes are genuinely complex.
std::vector<double> smooth_phase(int P, int Q, CounterRng& rng) {
  const double a = 0.6 * (rng.uniform() - 0.5), b = 0.6 * (rng.uniform() - 0.5);
  const double c = 0.4 * (rng.uniform() - 0.5);
  std::vector<double> ph(std::size_t(P) * Q);
  for (int x = 0; x < P; ++x)
    for (int y = 0; y < Q; ++y) {
      const double u = double(x) / P - 0.5, v = double(y) / Q - 0.5;
      ph[std::size_t(x) * Q + y] = 2.0 * kPi * (a * u + b * v + c * u * v);
    }
  return ph;
}

void regions_maps(const PhantomSpec& spec, std::uint64_t seed, PhantomMaps& maps) {
  const Grid& g = spec.grid;
  const int P = g.P, Q = g.Q;
  CounterRng rng(seed, 1);
  auto jitter = [&](double scale) { return 1.0 + scale * (2.0 * rng.uniform() - 1.0); };

  const double ox = 0.5 * P, oy = 0.5 * Q;
  const Ellipse scalp{ox, oy, 0.44 * P, 0.36 * Q};
  const Ellipse brain{ox, oy, 0.39 * P, 0.31 * Q};
  const Ellipse white{ox, oy, 0.28 * P * jitter(0.05), 0.21 * Q * jitter(0.05)};
  const Ellipse vent_a{ox - 0.04 * P, oy - 0.07 * Q, 0.12 * P, 0.04 * Q};
  const Ellipse vent_b{ox - 0.04 * P, oy + 0.07 * Q, 0.12 * P, 0.04 * Q};
  const Ellipse lesion_a{ox + 0.15 * P * jitter(0.2), oy - 0.12 * Q * jitter(0.2), 0.05 * P, 0.05 * Q};
  const Ellipse lesion_b{ox - 0.2 * P * jitter(0.2), oy + 0.16 * Q * jitter(0.2), 0.035 * P, 0.035 * Q};

  const Tissue t_scalp{0.75, 55.0 * jitter(0.1)};
  const Tissue t_grey{0.85, 95.0 * jitter(0.1)};
  const Tissue t_white{0.65, 70.0 * jitter(0.1)};
  const Tissue t_csf{1.0, 280.0 * jitter(0.1)};
  const Tissue t_lesion{0.9, 140.0 * jitter(0.1)};

  std::vector<double> amp(std::size_t(P) * Q, 0.0), t2(std::size_t(P) * Q, t_scalp.t2);
  for (int x = 0; x < P; ++x)
    for (int y = 0; y < Q; ++y) {
      const std::size_t i = std::size_t(x) * Q + y;
      const double px = x, py = y;
      const Tissue* t = nullptr;
      if (scalp.inside(px, py)) t = &t_scalp;
      if (brain.inside(px, py)) t = &t_grey;
      if (white.inside(px, py)) t = &t_white;
      if (vent_a.inside(px, py) || vent_b.inside(px, py)) t = &t_csf;
      if (lesion_a.inside(px, py) || lesion_b.inside(px, py)) t = &t_lesion;
      if (t) {
        amp[i] = t->amp;
        t2[i] = t->t2;
      }
    }

  // Smooth the decay factor rather than T2 itself: beta is the quantity the
  // annihilation model assumes to be spatially bandlimited.
  std::vector<double> beta(t2.size());
  for (std::size_t i = 0; i < t2.size(); ++i) beta[i] = std::exp(-g.dt_ms / t2[i]);
  beta = smooth(beta, P, Q, spec.bandwidth);

  const auto phase = smooth_phase(P, Q, rng);
  maps.support.assign(amp.size(), 0);
  for (int i = 0; i < spec.L; ++i) {
    // Extra components are slower/faster pools sharing the region layout.
    const double factor = i == 0 ? 1.0 : (i % 2 == 1 ? 0.3 : 3.0);
    const double weight = i == 0 ? 1.0 : 0.25;
    std::vector<double> t2i(amp.size());
    std::vector<cx> ai(amp.size());
    for (std::size_t j = 0; j < amp.size(); ++j) {
      const double b = std::clamp(beta[j], std::exp(-g.dt_ms / kT2MinMs) + 1e-12, std::exp(-g.dt_ms / kT2MaxMs) - 1e-12);
      t2i[j] = std::clamp(-g.dt_ms / std::log(b) * factor, 1.0 + 1e-9, kT2MaxMs - 1e-9);
      ai[j] = weight * amp[j] * std::polar(1.0, phase[j]);
      if (amp[j] > 0.0) maps.support[j] = 1;
    }
    maps.t2_ms.push_back(std::move(t2i));
    maps.amp.push_back(std::move(ai));
  }
}

void bandlimited_maps(const PhantomSpec& spec, std::uint64_t seed, PhantomMaps& maps) {
  const Grid& g = spec.grid;
  const int P = g.P, Q = g.Q;
  const int B = int(std::floor(spec.bandwidth));
  CounterRng rng(seed, 2);

  // Amplitudes need not be smooth: reuse the region layout for them.
  PhantomSpec layout = spec;
  layout.kind = PhantomKind::regions_smoothed;
  PhantomMaps region;
  regions_maps(layout, seed, region);

  const double lo = std::exp(-g.dt_ms / kT2MinMs), hi = std::exp(-g.dt_ms / kT2MaxMs);
  maps.support = region.support;
  for (int i = 0; i < spec.L; ++i) {
    const double t2c = 60.0 * std::pow(2.5, i);
    const double b0 = std::exp(-g.dt_ms / t2c);
    const double room = 0.5 * std::min(b0 - lo, hi - b0);
    std::vector<double> beta(std::size_t(P) * Q, b0);
    std::vector<std::pair<std::pair<int, int>, std::pair<double, double>>> terms;
    double total = 0.0;
    for (int kx = -B; kx <= B; ++kx)
      for (int ky = 0; ky <= B; ++ky) {
        if (ky == 0 && kx <= 0) continue;  // one of each +/- pair, DC excluded
        const double a = rng.uniform() + 0.1, ph = 2.0 * kPi * rng.uniform();
        terms.push_back({{kx, ky}, {a, ph}});
        total += a;
      }
    for (auto& [k, ap] : terms) {
      const double a = total > 0.0 ? room * ap.first / total : 0.0;
      for (int x = 0; x < P; ++x)
        for (int y = 0; y < Q; ++y)
          beta[std::size_t(x) * Q + y] += a * std::cos(2.0 * kPi * (double(k.first) * x / P + double(k.second) * y / Q) + ap.second);
    }
    std::vector<double> t2(beta.size());
    for (std::size_t j = 0; j < beta.size(); ++j) t2[j] = -g.dt_ms / std::log(beta[j]);
    maps.t2_ms.push_back(std::move(t2));
    std::vector<cx> amp = region.amp[0];
    if (spec.L > 1)
      for (auto& v : amp) v *= (i == 0 ? 1.0 : 0.5);
    maps.amp.push_back(std::move(amp));
  }
}

}  // namespace

void PhantomSpec::validate() const {
  grid.validate();
  require(L >= 1, Errc::invalid_argument, "phantom needs L >= 1");
  require(bandwidth > 0.0 && std::isfinite(bandwidth), Errc::invalid_argument, "phantom bandwidth must be positive");
  if (kind == PhantomKind::uniform) {
    require(t2_ms.size() == std::size_t(L) && amplitude.size() == std::size_t(L), Errc::invalid_argument,
            "uniform phantom needs L T2 values and L amplitudes");
    for (double t : t2_ms)
      require(t > kT2MinMs && t < kT2MaxMs, Errc::invalid_argument,
              "invalid T2 range: " + std::to_string(t) + " ms not in (1, 5000)");
  }
}

std::vector<double> PhantomMaps::beta(int i) const {
  std::vector<double> b(t2_ms.at(std::size_t(i)).size());
  for (std::size_t j = 0; j < b.size(); ++j) b[j] = std::exp(-grid.dt_ms / t2_ms[std::size_t(i)][j]);
  return b;
}

ImageSeries synthesize(const Grid& grid, std::span<const std::vector<cx>> amp,
                       std::span<const std::vector<cx>> beta) {
  require(amp.size() == beta.size() && !amp.empty(), Errc::invalid_argument, "need matching amplitude and decay maps");
  ImageSeries s(grid);
  const std::size_t n = grid.frame_size();
  for (std::size_t i = 0; i < amp.size(); ++i) {
    require(amp[i].size() == n && beta[i].size() == n, Errc::shape_mismatch, "map size does not match grid");
    for (std::size_t r = 0; r < n; ++r) {
      cx pw = 1.0;
      for (int t = 0; t < grid.T; ++t) {
        s.storage()[std::size_t(t) * n + r] += amp[i][r] * pw;
        pw *= beta[i][r];
      }
    }
  }
  return s;
}

ImageSeries synthesize(const PhantomMaps& maps) {
  std::vector<std::vector<cx>> beta;
  for (int i = 0; i < maps.L(); ++i) {
    auto b = maps.beta(i);
    beta.emplace_back(b.begin(), b.end());
  }
  return synthesize(maps.grid, maps.amp, beta);
}

Phantom make_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  spec.validate();
  PhantomMaps maps;
  maps.grid = spec.grid;
  const std::size_t n = spec.grid.frame_size();
  switch (spec.kind) {
    case PhantomKind::uniform:
      for (int i = 0; i < spec.L; ++i) {
        maps.t2_ms.emplace_back(n, spec.t2_ms[std::size_t(i)]);
        maps.amp.emplace_back(n, spec.amplitude[std::size_t(i)]);
      }
      maps.support.assign(n, 1);
      break;
    case PhantomKind::regions_smoothed:
      regions_maps(spec, seed, maps);
      break;
    case PhantomKind::bandlimited_exact:
      bandlimited_maps(spec, seed, maps);
      break;
  }
  for (const auto& m : maps.t2_ms)
    for (double t : m)
      require(t > kT2MinMs && t < kT2MaxMs, Errc::invalid_argument, "invalid T2 range in generated map");
  Phantom ph{synthesize(maps), std::move(maps)};
  return ph;
}

std::vector<double> echo_times(const Grid& grid, double te0_ms) {
  std::vector<double> te(std::size_t(grid.T));
  for (int n = 0; n < grid.T; ++n) te[std::size_t(n)] = te0_ms + n * grid.dt_ms;
  return te;
}

// ---- coils -----------------------------------------------------------------

bool CoilSet::is_identity() const {
  if (maps.size() != 1) return false;
  return std::all_of(maps[0].begin(), maps[0].end(), [](const cx& v) { return v == cx(1.0, 0.0); });
}

CoilSet make_coils(const Grid& grid, int C, std::uint64_t seed) {
  grid.validate();
  require(C >= 1, Errc::invalid_argument, "coil count must be >= 1");
  CoilSet set;
  set.P = grid.P;
  set.Q = grid.Q;
  const std::size_t n = grid.frame_size();
  if (C == 1) {
    set.maps.assign(1, std::vector<cx>(n, cx(1.0, 0.0)));
    return set;
  }
  CounterRng rng(seed, 3);
  const double P = grid.P, Q = grid.Q;
  const double width = 0.4 * std::max(P, Q);
  for (int c = 0; c < C; ++c) {
    const double theta = 2.0 * kPi * (c + 0.25 * rng.uniform()) / C;
    const double ccx = 0.5 * P + 0.55 * P * std::cos(theta), ccy = 0.5 * Q + 0.55 * Q * std::sin(theta);
    std::vector<cx> m(n);
    for (int x = 0; x < grid.P; ++x)
      for (int y = 0; y < grid.Q; ++y) {
        const double dx = x - ccx, dy = y - ccy;
        const double mag = std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
        const double ph = 0.5 * kPi * (std::cos(theta) * (x - 0.5 * P) / P + std::sin(theta) * (y - 0.5 * Q) / Q);
        m[std::size_t(x) * grid.Q + y] = std::polar(mag, ph);
      }
    set.maps.push_back(std::move(m));
  }
  for (std::size_t r = 0; r < n; ++r) {
    double sos = 0.0;
    for (const auto& m : set.maps) sos += std::norm(m[r]);
    const double s = 1.0 / std::sqrt(sos);
    for (auto& m : set.maps) m[r] *= s;
  }
  return set;
}

// ---- sampling --------------------------------------------------------------

std::size_t SamplingMask::count(int t) const {
  auto f = frame(t);
  return std::size_t(std::count(f.begin(), f.end(), std::uint8_t{1}));
}

double SamplingMask::acceleration() const {
  const double total = double(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  return total > 0.0 ? double(bits.size()) / total : 0.0;
}

SamplingMask make_mask(const Grid& grid, const MaskSpec& spec, std::uint64_t seed) {
  grid.validate();
  SamplingMask mask;
  mask.grid = grid;
  mask.kind = spec.kind;
  const std::size_t n = grid.frame_size();
  mask.bits.assign(grid.size(), 0);

  if (spec.kind == MaskKind::uniform_random) {
    require(spec.fraction > 0.0 && spec.fraction <= 1.0, Errc::invalid_argument,
            "infeasible fraction " + std::to_string(spec.fraction) + " (need 0 < fraction <= 1)");
    const auto count = std::size_t(std::floor(spec.fraction * double(n) + 0.5));
    require(count >= 1, Errc::invalid_argument, "infeasible fraction: no samples per frame");
    std::vector<std::size_t> idx(n);
    for (int t = 0; t < grid.T; ++t) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      CounterRng rng(seed, spec.static_mask ? 100 : 100 + std::uint64_t(t));
      for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
      for (std::size_t i = 0; i < count; ++i) mask.bits[std::size_t(t) * n + idx[i]] = 1;
    }
    return mask;
  }

  // Variable density on the 2x2-decimated lattice (even rows and columns).
  require(spec.acceleration >= 4.0, Errc::invalid_argument,
          "infeasible acceleration " + std::to_string(spec.acceleration) + " (vd_cartesian needs >= 4)");
  const auto target = std::size_t(std::floor(double(n) / spec.acceleration + 0.5));
  std::vector<std::size_t> forced, candidates;
  std::vector<double> weight;
  const int half = spec.center / 2;
  for (int x = 0; x < grid.P; x += 2)
    for (int y = 0; y < grid.Q; y += 2) {
      const int kx = centered_freq(x, grid.P), ky = centered_freq(y, grid.Q);
      const std::size_t i = std::size_t(x) * grid.Q + y;
      if (kx >= -half && kx < half && ky >= -half && ky < half) {
        forced.push_back(i);
        continue;
      }
      const double rx = kx / (0.5 * grid.P), ry = ky / (0.5 * grid.Q);
      const double rad = std::min(1.0, std::sqrt(0.5 * (rx * rx + ry * ry)));
      candidates.push_back(i);
      weight.push_back(std::max(1e-3, std::pow(1.0 - rad, spec.power)));
    }
  require(target >= forced.size() && target <= forced.size() + candidates.size(), Errc::invalid_argument,
          "infeasible acceleration for this grid and center block");
  const std::size_t extra = target - forced.size();
  std::vector<std::pair<double, std::size_t>> keys(candidates.size());
  for (int t = 0; t < grid.T; ++t) {
    CounterRng rng(seed, spec.static_mask ? 200 : 200 + std::uint64_t(t));
    // Weighted sampling without replacement: largest log(u) / w wins.
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      double u = rng.uniform();
      if (u <= 0.0) u = 0x1.0p-53;
      keys[j] = {std::log(u) / weight[j], j};
    }
    std::partial_sort(keys.begin(), keys.begin() + std::ptrdiff_t(extra), keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t i : forced) mask.bits[std::size_t(t) * n + i] = 1;
    for (std::size_t j = 0; j < extra; ++j) mask.bits[std::size_t(t) * n + candidates[keys[j].second]] = 1;
  }
  return mask;
}

// ---- forward model ---------------------------------------------------------

CoilData forward(const KtVolume& rho_hat, const CoilSet& coils, const SamplingMask& mask) {
  const Grid& g = rho_hat.grid();
  check_mask(mask, g);
  check_coils(coils, g);
  CoilData b{g, coils.count(), std::vector<cx>(std::size_t(coils.count()) * g.size())};
  const std::size_t n = g.frame_size();
  if (coils.is_identity()) {
    for (int t = 0; t < g.T; ++t) {
      auto src = rho_hat.frame(t);
      auto dst = b.frame(0, t);
      auto m = mask.frame(t);
      for (std::size_t i = 0; i < n; ++i) dst[i] = m[i] ? src[i] : cx{};
    }
    return b;
  }
  std::vector<cx> img(n);
  for (int t = 0; t < g.T; ++t) {
    auto src = rho_hat.frame(t);
    std::copy(src.begin(), src.end(), img.begin());
    fft::inverse_unitary(img, g.P, g.Q);
    auto m = mask.frame(t);
    for (int c = 0; c < coils.count(); ++c) {
      auto dst = b.frame(c, t);
      const auto& s = coils.maps[std::size_t(c)];
      for (std::size_t i = 0; i < n; ++i) dst[i] = s[i] * img[i];
      fft::forward_unitary(dst, g.P, g.Q);
      for (std::size_t i = 0; i < n; ++i)
        if (!m[i]) dst[i] = cx{};
    }
  }
  return b;
}

KtVolume adjoint(const CoilData& b, const CoilSet& coils, const SamplingMask& mask) {
  const Grid& g = b.grid;
  check_mask(mask, g);
  check_coils(coils, g);
  require(b.C == coils.count() && b.values.size() == std::size_t(b.C) * g.size(), Errc::shape_mismatch,
          "data does not match coil set");
  KtVolume out(g);
  const std::size_t n = g.frame_size();
  if (coils.is_identity()) {
    for (int t = 0; t < g.T; ++t) {
      auto src = b.frame(0, t);
      auto dst = out.frame(t);
      auto m = mask.frame(t);
      for (std::size_t i = 0; i < n; ++i) dst[i] = m[i] ? src[i] : cx{};
    }
    return out;
  }
  std::vector<cx> tmp(n);
  for (int t = 0; t < g.T; ++t) {
    auto dst = out.frame(t);
    auto m = mask.frame(t);
    for (int c = 0; c < coils.count(); ++c) {
      auto src = b.frame(c, t);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = m[i] ? src[i] : cx{};
      fft::inverse_unitary(tmp, g.P, g.Q);
      const auto& s = coils.maps[std::size_t(c)];
      for (std::size_t i = 0; i < n; ++i) dst[i] += std::conj(s[i]) * tmp[i];
    }
    fft::forward_unitary(dst, g.P, g.Q);
  }
  return out;
}

KtVolume normal(const KtVolume& rho_hat, const CoilSet& coils, const SamplingMask& mask) {
  return adjoint(forward(rho_hat, coils, mask), coils, mask);
}

CoilData add_noise(const CoilData& b, const SamplingMask& mask, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0 && std::isfinite(sigma), Errc::invalid_argument, "noise sigma must be >= 0");
  CoilData out = b;
  if (sigma == 0.0) return out;
  const Grid& g = b.grid;
  check_mask(mask, g);
  const CounterRng rng(seed, 4);
  auto normal_at = [&](std::uint64_t c) {
    double u1 = double(rng.at(2 * c) >> 11) * 0x1.0p-53;
    const double u2 = double(rng.at(2 * c + 1) >> 11) * 0x1.0p-53;
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  };
  const std::size_t vol = g.size();
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (!mask.bits[i % vol]) continue;
    out.values[i] += cx(sigma * normal_at(2 * i), sigma * normal_at(2 * i + 1));
  }
  return out;
}

double mean_sampled_magnitude(const CoilData& b, const SamplingMask& mask) {
  const std::size_t vol = b.grid.size();
  double s = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < b.values.size(); ++i)
    if (mask.bits[i % vol]) {
      s += std::abs(b.values[i]);
      ++cnt;
    }
  return cnt ? s / double(cnt) : 0.0;
}

}  // namespace exprec
