#pragma once

// Explicit (dense) lifted multifold Toeplitz matrices. This is the reference
// implementation the FFT kernels in fastops are checked against, so it favours
// directness over speed.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "exprec/grid.hpp"

namespace exprec {

/// How spatial shifts are treated. `linear`: valid (non-wrapping) shifts and
/// lags on the filter support. `hybrid`: spatial index arithmetic modulo the
/// grid with the lag set spanning the whole circular grid; time stays linear.
enum class LiftMode { linear, hybrid };

/// Which spatial shifts form the rows in hybrid mode.
enum class ShiftRestriction { full_circular, valid_linear };

struct FilterSpec {
  int N1 = 1;
  int N2 = 1;
  int Nt = 1;
  Grid grid;

  void validate() const;

  int k() const { return grid.T - Nt + 1; }
  int M1() const { return grid.P - N1 + 1; }
  int M2() const { return grid.Q - N2 + 1; }
  std::size_t support_size() const { return std::size_t(N1) * N2 * Nt; }
};

/// Output positions (rows) of the lifted matrix: spatial positions
/// (offset1 + u, offset2 + v) for u < extent1, v < extent2 and frames
/// t0 + tau for tau < frames. Row index is (tau * extent1 + u) * extent2 + v.
struct ShiftSet {
  int offset1 = 0;
  int offset2 = 0;
  int extent1 = 0;
  int extent2 = 0;
  int t0 = 0;
  int frames = 0;

  std::size_t spatial_size() const { return std::size_t(extent1) * extent2; }
  std::size_t size() const { return spatial_size() * frames; }
  std::size_t index(int tau, int u, int v) const { return (std::size_t(tau) * extent1 + u) * extent2 + v; }

  bool operator==(const ShiftSet&) const = default;
};

ShiftSet shift_set(const FilterSpec& spec, ShiftRestriction restriction);

/// Lag set (columns): lags (l1, l2, lt) with l1 < extent1, l2 < extent2,
/// lt < Nt. Column index is (lt * extent1 + l1) * extent2 + l2.
struct LagSet {
  int extent1 = 0;
  int extent2 = 0;
  int Nt = 0;

  std::size_t size() const { return std::size_t(extent1) * extent2 * Nt; }
  std::size_t index(int lt, int l1, int l2) const { return (std::size_t(lt) * extent1 + l1) * extent2 + l2; }
};

LagSet lag_set(const FilterSpec& spec, LiftMode mode);

/// FIR filter on the support N1 x N2 x Nt, index (lt * N1 + l1) * N2 + l2.
struct FilterKernel {
  int N1 = 1;
  int N2 = 1;
  int Nt = 1;
  std::vector<cx> c;

  FilterKernel() = default;
  FilterKernel(int n1, int n2, int nt) : N1(n1), N2(n2), Nt(nt), c(std::size_t(n1) * n2 * nt) {}

  cx& operator()(int l1, int l2, int lt) { return c[(std::size_t(lt) * N1 + l1) * N2 + l2]; }
  const cx& operator()(int l1, int l2, int lt) const { return c[(std::size_t(lt) * N1 + l1) * N2 + l2]; }
};

/// Values indexed by a ShiftSet.
struct ShiftField {
  ShiftSet rows;
  std::vector<cx> values;
};

struct LiftedMatrix {
  LiftMode mode = LiftMode::linear;
  ShiftSet rows;
  LagSet cols;
  Grid grid;
  Eigen::MatrixXcd entries;

  /// Filter on the support embedded in this matrix's lag set (zero padded
  /// to the full lag grid in hybrid mode).
  Eigen::VectorXcd embed(const FilterKernel& c) const;
  ShiftField apply(const FilterKernel& c) const;
};

/// Entry [(m), (l)] = rho_hat[m - l]. Linear mode uses valid rows; hybrid
/// mode defaults to the full circular row set.
LiftedMatrix build_lifted(const KtVolume& rho_hat, const FilterSpec& spec, LiftMode mode);
LiftedMatrix build_lifted(const KtVolume& rho_hat, const FilterSpec& spec, LiftMode mode,
                          ShiftRestriction restriction);

/// Adjoint of rho_hat -> T(rho_hat) for the given matrix layout.
KtVolume apply_lifted_adjoint(const Grid& grid, const ShiftSet& rows, const LagSet& cols,
                              const Eigen::MatrixXcd& y);
KtVolume apply_lifted_adjoint(const LiftedMatrix& layout, const Eigen::MatrixXcd& y);

struct AnnihilationCertificate {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  /// Number of columns minus the numerical rank (sigma >= tol * sigma_max);
  /// for wide matrices the missing singular values count as zero.
  std::size_t nullity_est = 0;
  std::vector<double> singular_values;
};

inline constexpr std::size_t kOracleMaxEntries = 10'000'000;

AnnihilationCertificate annihilation_certificate(const KtVolume& rho_hat, const FilterSpec& spec,
                                                 LiftMode mode, double tol);

}  // namespace exprec
