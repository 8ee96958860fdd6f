#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "exprec/simulate.hpp"

namespace exprec {

/// Mono-exponential fit result, row-major P x Q maps.
struct T2Map {
  int P = 0;
  int Q = 0;
  std::vector<double> t2_ms;
  std::vector<double> amplitude;
  std::vector<std::uint8_t> support;  // input support minus dropped pixels
  std::size_t dropped = 0;            // support pixels with a zero-magnitude echo
  std::size_t clamped = 0;            // fits outside [1, 5000] ms
};

/// Weighted log-linear fit of |s(TE)| = A exp(-TE / T2) per support pixel,
/// weights |s|^2. Off-support pixels get T2 = 0, amplitude 0.
T2Map fit_t2(const ImageSeries& series, std::span<const double> echo_times_ms,
             std::span<const std::uint8_t> support);

/// 10 log10(||ref||^2 / ||ref - rec||^2).
double snr_db(std::span<const cx> ref, std::span<const cx> rec);
/// ||ref - rec|| / ||ref||.
double nrmse(std::span<const cx> ref, std::span<const cx> rec);
/// Mean |fit - truth| over pixels that are on both supports.
double t2_mae(const T2Map& fit, std::span<const double> truth_ms, std::span<const std::uint8_t> support);

/// Zero-filled baseline: A^* b.
KtVolume recon_zerofill(const Measurements& meas);

struct KtLowRankResult {
  KtVolume rho_hat;
  std::vector<double> objective;  // after each iteration
};

/// Proximal gradient (unit step) on (1/2)||A x - b||^2 + mu ||C(x)||_*, where
/// C(x) is the PQ x T Casorati matrix of the image series.
KtLowRankResult recon_ktlowrank(const Measurements& meas, double mu, int iters);

/// Singular values of the Casorati matrix of an image series, descending.
std::vector<double> casorati_singular_values(const ImageSeries& rho);

struct MetricsRow {
  std::string label;
  double snr_db = 0.0;
  double nrmse = 0.0;
  double t2_mae_ms = 0.0;
  double wall_seconds = 0.0;
  std::string config_hash;
};

std::string metrics_csv(const std::vector<MetricsRow>& rows);

}  // namespace exprec
