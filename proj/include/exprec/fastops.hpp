#pragma once

// FFT-based kernels for the hybrid (circular in space, linear in time) lifted
// operator: convolution, frame-pair cross-correlations, Gram assembly, and the
// collapsed normal operator of the weighted least-squares step.

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "exprec/lifting.hpp"
#include "exprec/weights.hpp"

namespace exprec {

/// Hybrid convolution sum_l c[l] rho_hat[m - l] on the requested shift set.
/// Matches build_lifted(rho_hat, spec, hybrid, restriction).apply(c).
ShiftField hybrid_conv(const KtVolume& rho_hat, const FilterSpec& spec, const FilterKernel& c,
                       ShiftRestriction restriction = ShiftRestriction::full_circular);

/// g_ab[kappa] = sum_s rho_hat_a[s + kappa] conj(rho_hat_b[s]), circular in s,
/// as a row-major P x Q array.
std::vector<cx> cross_corr(const KtVolume& rho_hat, int a, int b);

/// Cross-correlations for frame pairs, each computed once from cached image
/// frames.
class CrossCorrCache {
public:
  explicit CrossCorrCache(const KtVolume& rho_hat);

  const std::vector<cx>& get(int a, int b);
  std::size_t computed() const { return pairs_.size(); }

private:
  Grid grid_;
  std::vector<std::vector<cx>> images_;
  std::map<std::pair<int, int>, std::vector<cx>> pairs_;
};

struct GramMatrix {
  ShiftSet rows;
  Eigen::MatrixXcd R;
};

inline constexpr std::size_t kGramMaxRows = 4096;

/// R = T(rho_hat) T(rho_hat)^* for the hybrid lifted matrix, rows restricted
/// per `restriction`. Built from k x k temporal blocks, each a sum of Nt
/// frame-pair circulants sampled at spatial shift differences.
GramMatrix assemble_gram(const KtVolume& rho_hat, const FilterSpec& spec,
                         ShiftRestriction restriction = ShiftRestriction::valid_linear);

/// Collapsed normal operator G = sum_i A_i^* A_i where A_i rho_hat = h^(i) T(rho_hat)
/// (hybrid lifting). `fields` holds m_{tau,tau'}(r) = sum_i conj(H_i,tau(r)) H_i,tau'(r)
/// with H_i,tau the unnormalized spatial DFT of slice tau of h^(i).
struct NormalMultipliers {
  Grid grid;
  int Nt = 1;
  int k = 1;
  std::vector<cx> fields;     // [(tau * k + tau2) * PQ + r]
  std::vector<cx> pixel_ops;  // per-pixel T x T operator, [r * T * T + s * T + s2]

  const cx* field(int tau, int tau2) const { return fields.data() + (std::size_t(tau) * k + tau2) * grid.frame_size(); }

  /// Fills pixel_ops from fields.
  void finalize();
};

NormalMultipliers build_normal_multipliers(const WeightSet& weights, const FilterSpec& spec);

/// G applied to an image-domain series (pointwise temporal mixing).
ImageSeries apply_normal_image(const NormalMultipliers& g, const ImageSeries& rho);
/// G applied in k-t space: F G F^H per frame.
KtVolume apply_normal(const NormalMultipliers& g, const KtVolume& rho_hat);
/// <rho_hat, G rho_hat> = sum_i ||h^(i) T(rho_hat)||^2.
double normal_quadratic(const NormalMultipliers& g, const KtVolume& rho_hat);

}  // namespace exprec
