#include "linalg.hpp"

#include <lapacke.h>

#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "secfield/error.hpp"

namespace secfield::detail {

// Householder tridiagonalization in Eigen, MRRR on the tridiagonal matrix
// (dstemr), back-transformation of only the requested vectors.
SymmetricEigen top_eigenpairs(Eigen::MatrixXd&& matrix, Eigen::Index count) {
  const Eigen::Index n = matrix.rows();
  if (matrix.cols() != n) throw Error(ErrorKind::InvalidArgument, "matrix must be square");
  if (count < 1 || count > n)
    throw Error(ErrorKind::InvalidArgument, "requested eigenpair count out of range");

  Eigen::Tridiagonalization<Eigen::MatrixXd> tri(std::move(matrix));
  Eigen::VectorXd diag = tri.diagonal();
  Eigen::VectorXd sub(n);
  sub.head(n - 1) = tri.subDiagonal();
  sub[n - 1] = 0.0;

  const auto ln = static_cast<lapack_int>(n);
  const auto lcount = static_cast<lapack_int>(count);
  Eigen::VectorXd ascending(n);
  Eigen::MatrixXd z(n, count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  lapack_int found = 0;
  lapack_logical tryrac = 1;
  const lapack_int info =
      LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'I', ln, diag.data(), sub.data(), 0.0, 0.0,
                     ln - lcount + 1, ln, &found, ascending.data(), z.data(), ln, lcount,
                     support.data(), &tryrac);
  if (info != 0 || found != lcount)
    throw Error(ErrorKind::Numeric,
                "tridiagonal eigensolver failed (dstemr info=" + std::to_string(info) + ")");

  SymmetricEigen out;
  out.values.resize(count);
  out.vectors.resize(n, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    out.values[j] = ascending[count - 1 - j];
    out.vectors.col(j) = z.col(count - 1 - j);
  }
  out.vectors.applyOnTheLeft(tri.matrixQ());
  return out;
}

SymmetricEigen all_eigenpairs(Eigen::MatrixXd matrix) {
  const Eigen::Index n = matrix.rows();
  return top_eigenpairs(std::move(matrix), n);
}

}  // namespace secfield::detail
