#include "doctest.h"

#include <cmath>

#include "exprec/simulate.hpp"
#include "support.hpp"

using namespace exprec;
using namespace testsupport;

namespace {

PhantomSpec uniform_spec(const Grid& g, std::vector<double> t2) {
  PhantomSpec ps;
  ps.grid = g;
  ps.kind = PhantomKind::uniform;
  ps.L = int(t2.size());
  ps.amplitude.assign(t2.size(), 1.0);
  ps.t2_ms = std::move(t2);
  return ps;
}

CoilData random_coil_data(const Grid& g, int C, std::uint64_t seed) {
  CounterRng rng(seed, 5);
  CoilData d{g, C, std::vector<cx>(std::size_t(C) * g.size())};
  for (auto& v : d.values) v = rand_cx(rng);
  return d;
}

cx data_inner(const CoilData& a, const CoilData& b) {
  cx s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::conj(a.values[i]) * b.values[i];
  return s;
}

}  // namespace

TEST_CASE("uniform mono-exponential phantom") {
  const Grid g{4, 3, 6, 10.0};
  const Phantom ph = make_phantom(uniform_spec(g, {50.0}), 0);
  for (int n = 0; n < g.T; ++n)
    for (int x = 0; x < g.P; ++x)
      for (int y = 0; y < g.Q; ++y) CHECK(std::abs(ph.series(x, y, n) - std::exp(-n / 5.0)) < 1e-15);
}

TEST_CASE("series is rebuilt bit-for-bit from the returned maps") {
  for (auto kind : {PhantomKind::regions_smoothed, PhantomKind::bandlimited_exact}) {
    PhantomSpec ps;
    ps.grid = Grid{24, 20, 5, 10.0};
    ps.kind = kind;
    ps.L = 2;
    ps.bandwidth = 2.0;
    const Phantom ph = make_phantom(ps, 3);
    const ImageSeries again = synthesize(ph.maps);
    CHECK(again.storage() == ph.series.storage());
    const Phantom twin = make_phantom(ps, 3);
    CHECK(twin.series.storage() == ph.series.storage());
    CHECK(make_phantom(ps, 4).series.storage() != ph.series.storage());
  }
}

TEST_CASE("two uniform pools are annihilated by the product filter") {
  const Grid g{3, 3, 8, 10.0};
  const Phantom ph = make_phantom(uniform_spec(g, {30.0, 200.0}), 0);
  const double b1 = std::exp(-10.0 / 30.0), b2 = std::exp(-10.0 / 200.0);
  const double c[3] = {1.0, -(b1 + b2), b1 * b2};
  for (int n = 2; n < g.T; ++n) {
    const cx r = c[0] * ph.series(1, 1, n) + c[1] * ph.series(1, 1, n - 1) + c[2] * ph.series(1, 1, n - 2);
    CHECK(std::abs(r) < 1e-15);
  }
  // A two-tap filter cannot annihilate two distinct decays.
  const cx r2 = ph.series(0, 0, 2) - b1 * ph.series(0, 0, 1);
  CHECK(std::abs(r2) > 1e-3);
}

TEST_CASE("bandlimited decay maps have the declared spectral support") {
  for (double B : {1.0, 2.0, 2.5}) {
    PhantomSpec ps;
    ps.grid = Grid{16, 12, 3, 10.0};
    ps.kind = PhantomKind::bandlimited_exact;
    ps.bandwidth = B;
    const Phantom ph = make_phantom(ps, 1);
    const std::vector<double> beta = ph.maps.beta(0);
    ImageSeries b(Grid{16, 12, 2, 10.0});
    for (std::size_t i = 0; i < beta.size(); ++i) b.storage()[i] = beta[i];  // frame 0 only
    const KtVolume bh = dft2_forward(b);
    double inside = 0.0, outside = 0.0;
    for (int x = 0; x < 16; ++x)
      for (int y = 0; y < 12; ++y) {
        const int kx = centered_freq(x, 16), ky = centered_freq(y, 12);
        double& slot = std::abs(kx) <= B && std::abs(ky) <= B ? inside : outside;
        slot = std::max(slot, std::abs(bh(x, y, 0)));
      }
    CHECK(outside < 1e-12 * inside);
  }
}

TEST_CASE("phantom validation") {
  const Grid g{4, 4, 3, 10.0};
  CHECK_THROWS_AS(make_phantom(uniform_spec(g, {0.5}), 0), Error);
  CHECK_THROWS_AS(make_phantom(uniform_spec(g, {6000.0}), 0), Error);
  PhantomSpec ps;
  ps.grid = g;
  ps.L = 0;
  CHECK_THROWS_AS(ps.validate(), Error);
  const auto te = echo_times(Grid{2, 2, 4, 7.5}, 5.0);
  CHECK(te == std::vector<double>{5.0, 12.5, 20.0, 27.5});
}

TEST_CASE("coil sensitivities") {
  const Grid g{64, 64, 2, 10.0};
  const CoilSet one = make_coils(g, 1, 0);
  CHECK(one.is_identity());
  for (int C : {2, 4, 8}) {
    const CoilSet s = make_coils(g, C, 7);
    CHECK(s.count() == C);
    double worst = 0.0;
    for (std::size_t r = 0; r < g.frame_size(); ++r) {
      double sos = 0.0;
      for (const auto& m : s.maps) sos += std::norm(m[r]);
      worst = std::max(worst, std::abs(sos - 1.0));
    }
    CHECK(worst <= 1e-10);
  }
  const CoilSet four = make_coils(g, 4, 7);
  double grad = 0.0;
  for (const auto& m : four.maps)
    for (int x = 0; x + 1 < g.P; ++x)
      for (int y = 0; y + 1 < g.Q; ++y) {
        const double a = std::abs(m[std::size_t(x) * g.Q + y]);
        grad = std::max({grad, std::abs(std::abs(m[std::size_t(x + 1) * g.Q + y]) - a),
                         std::abs(std::abs(m[std::size_t(x) * g.Q + y + 1]) - a)});
      }
  CHECK(grad < 0.2);
  CHECK_THROWS_AS(make_coils(g, 0, 0), Error);
}

TEST_CASE("uniform random masks") {
  const Grid g{64, 64, 5, 10.0};
  MaskSpec ms;
  ms.fraction = 0.3;
  const SamplingMask m = make_mask(g, ms, 2);
  for (int t = 0; t < g.T; ++t) CHECK(m.count(t) == 1229);
  CHECK(!std::equal(m.frame(0).begin(), m.frame(0).end(), m.frame(1).begin()));
  ms.static_mask = true;
  const SamplingMask s = make_mask(g, ms, 2);
  CHECK(std::equal(s.frame(0).begin(), s.frame(0).end(), s.frame(4).begin()));
  ms.fraction = 1.0;
  const SamplingMask full = make_mask(g, ms, 2);
  CHECK(std::all_of(full.bits.begin(), full.bits.end(), [](auto b) { return b == 1; }));
  ms.fraction = 0.0;
  CHECK_THROWS_AS(make_mask(g, ms, 2), Error);
  ms.fraction = 1e-5;
  CHECK_THROWS_AS(make_mask(g, ms, 2), Error);
  ms.fraction = 0.3;
  ms.static_mask = false;
  CHECK(make_mask(g, ms, 2).bits == m.bits);
}

TEST_CASE("variable density Cartesian mask") {
  const Grid g{128, 128, 4, 10.0};
  MaskSpec ms;
  ms.kind = MaskKind::vd_cartesian;
  ms.acceleration = 12.0;
  const SamplingMask m = make_mask(g, ms, 5);
  CHECK(m.acceleration() >= 11.4);
  CHECK(m.acceleration() <= 12.6);
  for (int t = 0; t < g.T; ++t) {
    const double frame_acc = double(g.frame_size()) / double(m.count(t));
    CHECK(std::abs(frame_acc - 12.0) <= 0.6);
    for (int kx = -4; kx < 4; kx += 2)
      for (int ky = -4; ky < 4; ky += 2) CHECK(m.at((kx + g.P) % g.P, (ky + g.Q) % g.Q, t));
    for (int x = 1; x < g.P; x += 2)
      for (int y = 0; y < g.Q; ++y) CHECK_FALSE(m.at(x, y, t));
  }
  // Density falls off with |k|.
  std::size_t inner = 0, outer = 0, n_in = 0, n_out = 0;
  for (int x = 0; x < g.P; x += 2)
    for (int y = 0; y < g.Q; y += 2) {
      const int kx = centered_freq(x, g.P), ky = centered_freq(y, g.Q);
      const bool in = std::max(std::abs(kx), std::abs(ky)) < 32;
      (in ? n_in : n_out) += 1;
      (in ? inner : outer) += m.at(x, y, 0);
    }
  CHECK(double(inner) / double(n_in) > 2.0 * double(outer) / double(n_out));
  ms.acceleration = 2.0;
  CHECK_THROWS_AS(make_mask(g, ms, 5), Error);
}

TEST_CASE("forward model with a single unit coil") {
  const Grid g{8, 8, 3, 10.0};
  const KtVolume x = random_volume(g, 1);
  MaskSpec full;
  const SamplingMask all = make_mask(g, full, 0);
  const CoilSet one = make_coils(g, 1, 0);
  const CoilData b = forward(x, one, all);
  CHECK(b.values == x.storage());

  MaskSpec half;
  half.fraction = 0.5;
  const SamplingMask m = make_mask(g, half, 1);
  const KtVolume ax = normal(x, one, m);
  const KtVolume aax = normal(ax, one, m);
  CHECK(aax.storage() == ax.storage());
  for (std::size_t i = 0; i < x.storage().size(); ++i) CHECK(ax.storage()[i] == (m.bits[i] ? x.storage()[i] : cx(0.0)));
}

TEST_CASE("forward and adjoint are a dual pair") {
  for (int C : {1, 3, 4}) {
    for (double f : {0.4, 1.0}) {
      const Grid g{8, 8, 3, 10.0};
      const CoilSet coils = make_coils(g, C, 2);
      MaskSpec ms;
      ms.fraction = f;
      const SamplingMask m = make_mask(g, ms, 3);
      const KtVolume x = random_volume(g, 4);
      const CoilData y = random_coil_data(g, C, 5);
      const cx lhs = data_inner(forward(x, coils, m), y);
      const cx rhs = inner(x.values(), adjoint(y, coils, m).values());
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
    }
  }
  const Grid g{4, 4, 2, 10.0};
  CHECK_THROWS_AS(forward(KtVolume(g), make_coils(Grid{5, 4, 2, 10.0}, 1, 0), make_mask(g, MaskSpec{}, 0)), Error);
}

TEST_CASE("complex Gaussian noise on sampled entries") {
  const Grid g{64, 64, 25, 10.0};
  MaskSpec ms;
  ms.fraction = 0.5;
  const SamplingMask m = make_mask(g, ms, 1);
  const CoilData zero{g, 1, std::vector<cx>(g.size())};
  CHECK(add_noise(zero, m, 0.0, 3).values == zero.values);
  const double sigma = 0.37;
  const CoilData n = add_noise(zero, m, sigma, 3);
  CHECK(add_noise(zero, m, sigma, 3).values == n.values);
  double ss = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < n.values.size(); ++i) {
    if (!m.bits[i]) {
      CHECK(n.values[i] == cx(0.0));
      continue;
    }
    ss += n.values[i].real() * n.values[i].real() + n.values[i].imag() * n.values[i].imag();
    cnt += 2;
  }
  REQUIRE(cnt >= 100000);
  CHECK(std::abs(std::sqrt(ss / double(cnt)) - sigma) <= 0.02 * sigma);
  CHECK_THROWS_AS(add_noise(zero, m, -1.0, 3), Error);
}
