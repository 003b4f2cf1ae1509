#pragma once

#include <Eigen/Core>

namespace secfield::detail {

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // column j pairs with values[j]
};

/// Largest `count` eigenpairs of a dense symmetric matrix (LAPACK dsyevr).
/// Only the lower triangle of `matrix` is read; the buffer is destroyed.
SymmetricEigen top_eigenpairs(Eigen::MatrixXd&& matrix, Eigen::Index count);

/// All eigenpairs, descending.
SymmetricEigen all_eigenpairs(Eigen::MatrixXd matrix);

}  // namespace secfield::detail
