#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "exprec/grid.hpp"

namespace exprec {

// ---- phantoms --------------------------------------------------------------

enum class PhantomKind {
  uniform,            // constant maps from PhantomSpec::t2_ms / amplitude
  regions_smoothed,   // tissue-like regions, decay map smoothed to bandwidth B
  bandlimited_exact,  // decay maps are exact trigonometric polynomials of bandwidth B
};

struct PhantomSpec {
  Grid grid;
  int L = 1;
  PhantomKind kind = PhantomKind::regions_smoothed;
  double bandwidth = 4.0;
  std::vector<double> t2_ms;   // uniform kind, one per component
  std::vector<cx> amplitude;   // uniform kind, one per component

  void validate() const;
};

inline constexpr double kT2MinMs = 1.0;
inline constexpr double kT2MaxMs = 5000.0;

/// Per-component parameter maps, each a row-major P x Q array.
struct PhantomMaps {
  Grid grid;
  std::vector<std::vector<double>> t2_ms;
  std::vector<std::vector<cx>> amp;
  std::vector<std::uint8_t> support;

  int L() const { return int(t2_ms.size()); }
  /// beta_i(r) = exp(-dt / T2_i(r)).
  std::vector<double> beta(int i) const;
};

struct Phantom {
  ImageSeries series;
  PhantomMaps maps;
};

/// rho[r, n] = sum_i amp_i(r) * beta_i(r)^n.
ImageSeries synthesize(const PhantomMaps& maps);
/// Variant with explicit (possibly complex) decay maps.
ImageSeries synthesize(const Grid& grid, std::span<const std::vector<cx>> amp,
                       std::span<const std::vector<cx>> beta);

Phantom make_phantom(const PhantomSpec& spec, std::uint64_t seed);

/// TE_n = te0 + n * dt.
std::vector<double> echo_times(const Grid& grid, double te0_ms);

// ---- coils -----------------------------------------------------------------

struct CoilSet {
  int P = 0;
  int Q = 0;
  std::vector<std::vector<cx>> maps;  // C maps, row-major P x Q

  int count() const { return int(maps.size()); }
  /// True for a single all-ones map; the forward model then skips the FFTs.
  bool is_identity() const;
};

CoilSet make_coils(const Grid& grid, int C, std::uint64_t seed);

// ---- sampling --------------------------------------------------------------

enum class MaskKind { uniform_random, vd_cartesian };

struct MaskSpec {
  MaskKind kind = MaskKind::uniform_random;
  double fraction = 1.0;      // uniform_random
  double acceleration = 4.0;  // vd_cartesian, total including the 2x2 decimation
  int center = 8;             // vd_cartesian: fully sampled low-frequency block (samples per side)
  double power = 2.0;         // vd_cartesian density exponent
  bool static_mask = false;   // same pattern in every frame
};

struct SamplingMask {
  Grid grid;
  MaskKind kind = MaskKind::uniform_random;
  std::vector<std::uint8_t> bits;  // [T][P][Q]

  bool at(int x, int y, int t) const { return bits[(std::size_t(t) * grid.P + x) * grid.Q + y] != 0; }
  std::span<const std::uint8_t> frame(int t) const { return {bits.data() + t * grid.frame_size(), grid.frame_size()}; }
  std::size_t count(int t) const;
  double acceleration() const;
};

SamplingMask make_mask(const Grid& grid, const MaskSpec& spec, std::uint64_t seed);

/// Signed frequency index for a zero-at-origin axis of length n.
inline int centered_freq(int i, int n) { return i < (n + 1) / 2 ? i : i - n; }

// ---- forward model ---------------------------------------------------------

/// Multichannel k-t data, stored [C][T][P][Q].
struct CoilData {
  Grid grid;
  int C = 1;
  std::vector<cx> values;

  std::span<cx> frame(int c, int t) { return {values.data() + (std::size_t(c) * grid.T + t) * grid.frame_size(), grid.frame_size()}; }
  std::span<const cx> frame(int c, int t) const {
    return {values.data() + (std::size_t(c) * grid.T + t) * grid.frame_size(), grid.frame_size()};
  }
};

struct Measurements {
  CoilData b;
  SamplingMask mask;
  CoilSet coils;
  double noise_sigma = 0.0;
};

/// b_{c,t} = mask_t * DFT(S_c * IDFT(rho_hat_t)).
CoilData forward(const KtVolume& rho_hat, const CoilSet& coils, const SamplingMask& mask);
KtVolume adjoint(const CoilData& b, const CoilSet& coils, const SamplingMask& mask);
/// A^* A rho_hat.
KtVolume normal(const KtVolume& rho_hat, const CoilSet& coils, const SamplingMask& mask);

/// Adds i.i.d. complex Gaussian noise (sigma per real component) on sampled
/// entries only.
CoilData add_noise(const CoilData& b, const SamplingMask& mask, double sigma, std::uint64_t seed);

/// Mean magnitude of sampled entries; reference level for relative noise.
double mean_sampled_magnitude(const CoilData& b, const SamplingMask& mask);

}  // namespace exprec
