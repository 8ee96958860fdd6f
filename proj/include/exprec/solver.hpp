#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exprec/fastops.hpp"
#include "exprec/simulate.hpp"
#include "exprec/weights.hpp"

namespace exprec {

/// (1/p) sum_j sigma_j^p.
double schatten_cost(std::span<const double> singular_values, double p);

/// Eigendecomposition of a Gram matrix with tiny negative eigenvalues clamped.
/// Throws Errc::not_psd if the most negative eigenvalue is below
/// -psd_tol * lambda_max, Errc::eigen_failure if the solver fails.
struct GramSpectrum {
  ShiftSet rows;
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXcd eigenvectors;

  double lambda_max() const { return eigenvalues.size() ? eigenvalues(eigenvalues.size() - 1) : 0.0; }
};

inline constexpr double kPsdTolerance = 1e-8;

GramSpectrum gram_spectrum(const GramMatrix& gram);

/// Filters h^(i) = (lambda_i + eps)^{p/4 - 1/2} u_i^*.
WeightSet weights_from_spectrum(const GramSpectrum& spectrum, double p, double eps);

/// Full weight update: Gram assembly, eigendecomposition, filters.
WeightSet weight_update(const KtVolume& rho_hat, const FilterSpec& spec, double p, double eps,
                        ShiftRestriction restriction = ShiftRestriction::valid_linear);

/// (1/p) sum_j (lambda_j + eps)^{p/2} over all eigenvalues of R.
double smoothed_schatten(const Eigen::VectorXd& eigenvalues, double p, double eps);

struct CgOptions {
  int max_iters = 200;
  double tol = 1e-8;
};

struct CgResult {
  KtVolume x;
  int iterations = 0;
  double rel_residual = 0.0;
};

/// Solves (G + lambda A^*A) x = lambda A^* b by conjugate gradients, warm
/// started from x0. This minimizes
///   (1/2) sum_i ||h^(i) T(x)||^2 + (lambda/2) ||A x - b||^2.
CgResult ls_update(const NormalMultipliers& g, const Measurements& meas, double lambda, const KtVolume& x0,
                   const CgOptions& opts);
CgResult ls_update(const WeightSet& weights, const FilterSpec& spec, const Measurements& meas, double lambda,
                   const KtVolume& x0, const CgOptions& opts);

struct SolverConfig {
  double p = 1.0;
  double lambda = 1.0;
  std::optional<double> eps0;     // default: lambda_max(R_0) / 100
  double eps_decay = 0.25;
  std::optional<double> eps_min;  // default: 1e-9 * lambda_max(R_0)
  int outer_iters = 30;
  CgOptions cg;
  double rel_tol = 1e-6;
  ShiftRestriction restriction = ShiftRestriction::valid_linear;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double eps = 0.0;
  double objective_start = 0.0;  // smoothed objective before the LS step, at this eps
  double objective = 0.0;        // after the LS step, at this eps
  double data_term = 0.0;
  double reg_term = 0.0;
  int cg_iters = 0;
  double cg_residual = 0.0;
  double seconds = 0.0;
};

struct SolveReport {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  double seconds = 0.0;

  std::string to_csv() const;
};

struct SolveResult {
  KtVolume rho_hat;
  SolveReport report;
};

/// (lambda/2) ||A x - b||^2.
double data_term(const KtVolume& x, const Measurements& meas, double lambda);

/// IRLS for the smoothed Schatten-p objective, started from the zero-filled
/// adjoint A^* b.
SolveResult irls_solve(const Measurements& meas, const FilterSpec& spec, const SolverConfig& cfg);

}  // namespace exprec
