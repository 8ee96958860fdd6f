#pragma once

#include <Eigen/Dense>

#include "exprec/lifting.hpp"

namespace exprec {

/// IRLS weight filters: row i of `filters` is h^(i), a filter over the
/// valid-shift set `rows`. Stacking the rows gives H^{1/2}, so
/// H = filters^* filters = (R + eps I)^{p/2 - 1}.
struct WeightSet {
  ShiftSet rows;
  Eigen::MatrixXcd filters;
  Eigen::VectorXd eigenvalues;  // of R, ascending, after PSD repair
  double eps = 0.0;
  double p = 1.0;

  Eigen::MatrixXcd weight_matrix() const { return filters.adjoint() * filters; }
};

}  // namespace exprec
