#include "secfield/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "linalg.hpp"
#include "secfield/error.hpp"
#include "secfield/parallel.hpp"

namespace secfield {

namespace {

void require_points(const Eigen::MatrixXd& points, Eigen::Index min_rows) {
  if (points.rows() < min_rows)
    throw Error(ErrorKind::InvalidArgument,
                "need at least " + std::to_string(min_rows) + " sample points");
  if (points.cols() < 1) throw Error(ErrorKind::InvalidArgument, "points need d >= 1");
  if (!points.allFinite()) throw Error(ErrorKind::InvalidArgument, "points must be finite");
}

double squared_distance(const Eigen::MatrixXd& points, Eigen::Index i, Eigen::Index j) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    const double diff = points(i, k) - points(j, k);
    sum += diff * diff;
  }
  return sum;
}

// Dense symmetric kernel matrix; each unordered pair is evaluated once.
// Returns the first duplicate pair (row-major order) if any.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& points, double epsilon,
                              std::optional<std::pair<Eigen::Index, Eigen::Index>>* duplicate) {
  const Eigen::Index n = points.rows();
  const double inv_eps2 = 1.0 / (epsilon * epsilon);
  Eigen::MatrixXd k(n, n);
  std::vector<Eigen::Index> dup_of(static_cast<std::size_t>(n), -1);
  // Column-major storage: fill the lower triangle column by column.
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t col) {
    const auto j = static_cast<Eigen::Index>(col);
    k(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double d2 = squared_distance(points, i, j);
      if (d2 == 0.0 && dup_of[col] < 0) dup_of[col] = i;
      k(i, j) = std::exp(-d2 * inv_eps2);
    }
  });
  if (duplicate) {
    duplicate->reset();
    for (Eigen::Index j = 0; j < n; ++j)
      if (dup_of[static_cast<std::size_t>(j)] >= 0) {
        *duplicate = std::make_pair(j, dup_of[static_cast<std::size_t>(j)]);
        break;
      }
  }
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) k(j, i) = k(i, j);
  return k;
}

// Sequential row sums (fixed summation order).
Degrees degrees_from_kernel(const Eigen::MatrixXd& k) {
  const Eigen::Index n = k.rows();
  Degrees deg;
  deg.right.resize(n);
  deg.left.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) sum += k(j, i);
    deg.right[i] = sum * inv_n;
  }
  const Eigen::VectorXd inv_r = deg.right.cwiseInverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) sum += k(j, i) * inv_r[j];
    deg.left[i] = sum * inv_n;
  }
  return deg;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  }
  if (v[arg] < 0.0) v = -v;
}

}  // namespace

void KernelConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw Error(ErrorKind::Config, "kernel bandwidth epsilon must be positive and finite");
}

double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& y2, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw Error(ErrorKind::InvalidArgument, "epsilon must be positive and finite");
  if (y.size() != y2.size()) throw Error(ErrorKind::InvalidArgument, "dimension mismatch");
  if (!y.allFinite() || !y2.allFinite())
    throw Error(ErrorKind::InvalidArgument, "kernel arguments must be finite");
  return std::exp(-(y - y2).squaredNorm() / (epsilon * epsilon));
}

Degrees compute_degrees(const Eigen::MatrixXd& points, double epsilon) {
  KernelConfig{epsilon}.validate();
  require_points(points, 1);
  return degrees_from_kernel(kernel_matrix(points, epsilon, nullptr));
}

SymmetricMarkov build_symmetric_markov(const Eigen::MatrixXd& points, double epsilon) {
  KernelConfig{epsilon}.validate();
  require_points(points, 2);
  std::optional<std::pair<Eigen::Index, Eigen::Index>> duplicate;
  Eigen::MatrixXd k = kernel_matrix(points, epsilon, &duplicate);
  if (duplicate) throw DuplicatePointError(duplicate->first, duplicate->second);

  SymmetricMarkov out;
  out.degrees = degrees_from_kernel(k);
  const Eigen::Index n = points.rows();
  const Eigen::VectorXd& r = out.degrees.right;
  const Eigen::VectorXd& l = out.degrees.left;
  out.d_alpha = (l.array() / r.array()).sqrt();

  // P~_ij = (k_ij / N) / sqrt(l_i r_i r_j l_j), in place.
  const Eigen::VectorXd scale = (l.array() * r.array()).sqrt();
  const double inv_n = 1.0 / static_cast<double>(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t col) {
    const auto j = static_cast<Eigen::Index>(col);
    for (Eigen::Index i = j; i < n; ++i) k(i, j) = (k(i, j) * inv_n) / (scale[i] * scale[j]);
  });
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) k(j, i) = k(i, j);
  out.trace = k.diagonal().sum();
  out.p_tilde = std::move(k);
  return out;
}

MarkovSpectrum eigendecompose(Eigen::MatrixXd&& p_tilde, const Eigen::VectorXd& d_alpha,
                              Eigen::Index count) {
  const Eigen::Index n = p_tilde.rows();
  if (count < 1 || count > n)
    throw Error(ErrorKind::InvalidArgument, "eigenpair count must satisfy 1 <= M <= N");
  if (d_alpha.size() != n) throw Error(ErrorKind::InvalidArgument, "d_alpha size mismatch");

  detail::SymmetricEigen eig = detail::top_eigenpairs(std::move(p_tilde), count);

  MarkovSpectrum out;
  Eigen::Index kept = count;
  for (Eigen::Index j = 0; j < count; ++j) {
    if (!(eig.values[j] > kMarkovEigenvalueFloor)) {
      kept = j;
      out.warnings.push_back("Markov eigenvalue " + std::to_string(j) + " = " +
                             std::to_string(eig.values[j]) +
                             " at or below floor; truncated to M = " + std::to_string(j));
      break;
    }
  }
  if (kept == 0) throw Error(ErrorKind::Numeric, "no Markov eigenvalue above floor");

  Eigen::VectorXd e0 = eig.vectors.col(0);
  if (e0.sum() < 0.0) e0 = -e0;
  if ((e0.array() == 0.0).any())
    throw Error(ErrorKind::DegenerateInput, "top eigenvector has a zero entry");
  if (!(e0.array() > 0.0).all())
    out.warnings.push_back("top eigenvector is not of one sign; kernel may be reducible");
  if (std::abs(eig.values[0] - 1.0) > 1e-8)
    out.warnings.push_back("top Markov eigenvalue deviates from 1 by " +
                           std::to_string(eig.values[0] - 1.0));
  if (kept > 1 && eig.values[1] >= eig.values[0] - 1e-12)
    out.warnings.push_back("top Markov eigenvalue is not simple; epsilon may be too small");
  const double alignment = std::abs(e0.dot(d_alpha)) / d_alpha.norm();
  if (std::abs(alignment - 1.0) > 1e-6)
    out.warnings.push_back("top eigenvector is not parallel to d_alpha");

  out.eigenvalues = eig.values.head(kept);
  out.symmetric_vectors = eig.vectors.leftCols(kept);
  out.symmetric_vectors.col(0) = e0;
  out.ratio_vectors.resize(n, kept);
  for (Eigen::Index j = 0; j < kept; ++j) {
    out.ratio_vectors.col(j) = out.symmetric_vectors.col(j).array() / e0.array();
    fix_sign(out.ratio_vectors.col(j));
    if (out.ratio_vectors.col(j).dot(out.symmetric_vectors.col(j).cwiseQuotient(e0)) < 0.0)
      out.symmetric_vectors.col(j) *= -1.0;
  }
  return out;
}

double estimate_volume(double trace_p, double epsilon, int dim_manifold) {
  if (!(trace_p > 0.0)) throw Error(ErrorKind::InvalidArgument, "trace must be positive");
  if (dim_manifold < 0) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 0");
  return std::pow(std::numbers::pi * epsilon * epsilon, 0.5 * dim_manifold) * trace_p;
}

Eigen::VectorXd compute_weights(const Eigen::VectorXd& e0, double volume) {
  if ((e0.array() == 0.0).any())
    throw Error(ErrorKind::DegenerateInput, "weights need an entrywise nonzero e0");
  const Eigen::VectorXd sq = e0.array().square();
  return volume * sq / sq.sum();
}

DiffusionBasis fit_diffusion_basis(const Eigen::MatrixXd& points, const KernelConfig& kernel,
                                   int dim_manifold, Eigen::Index n_eigs) {
  kernel.validate();
  require_points(points, 2);
  if (dim_manifold < 1 || dim_manifold > points.cols())
    throw Error(ErrorKind::Config, "manifold dimension must satisfy 1 <= m <= d");
  if (n_eigs < 1 || n_eigs > points.rows())
    throw Error(ErrorKind::Config, "eigenpair count must satisfy 1 <= M <= N");

  SymmetricMarkov markov = build_symmetric_markov(points, kernel.epsilon);
  const double volume = estimate_volume(markov.trace, kernel.epsilon, dim_manifold);
  MarkovSpectrum spectrum = eigendecompose(std::move(markov.p_tilde), markov.d_alpha, n_eigs);

  DiffusionBasis basis;
  basis.epsilon = kernel.epsilon;
  basis.dim_manifold = dim_manifold;
  basis.volume = volume;
  basis.markov_eigenvalues = spectrum.eigenvalues;
  basis.weights = compute_weights(spectrum.symmetric_vectors.col(0), volume);
  basis.eigenvectors = std::move(spectrum.ratio_vectors);
  for (Eigen::Index j = 0; j < basis.eigenvectors.cols(); ++j) {
    const double norm = std::sqrt(basis.inner(basis.eigenvectors.col(j), basis.eigenvectors.col(j)));
    basis.eigenvectors.col(j) /= norm;
  }
  const double scale = 1.0 / (KernelConfig::c_constant * kernel.epsilon * kernel.epsilon);
  basis.laplace_eigenvalues =
      spectrum.eigenvalues.unaryExpr([&](double lam) {
        return lam >= 1.0 ? 0.0 : -std::log(lam) * scale;
      });
  // P is row-stochastic, so Lambda_0 = 1 exactly; only rounding moves it.
  basis.laplace_eigenvalues[0] = 0.0;
  basis.degrees_right = std::move(markov.degrees.right);
  basis.degrees_left = std::move(markov.degrees.left);
  basis.points = points;
  basis.warnings = std::move(spectrum.warnings);
  return basis;
}

namespace {

// Kernel weights relative to the nearest sample: k_n / k_min-distance.
// Returns the shift s = min_n |y - y_n|^2 / eps^2.
double relative_kernel_row(const DiffusionBasis& basis,
                           const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::VectorXd& row) {
  if (y.size() != basis.points.cols())
    throw Error(ErrorKind::InvalidArgument, "query dimension does not match the data");
  if (!y.allFinite()) throw Error(ErrorKind::InvalidArgument, "query point must be finite");
  const Eigen::Index n = basis.points.rows();
  const double inv_eps2 = 1.0 / (basis.epsilon * basis.epsilon);
  row.setZero(n);
  for (Eigen::Index k = 0; k < basis.points.cols(); ++k)
    row.array() += (basis.points.col(k).array() - y[k]).square();
  row *= inv_eps2;
  const double shift = row.minCoeff();
  if (!(shift <= kNystromMaxBandwidths * kNystromMaxBandwidths))
    throw Error(ErrorKind::OutOfRange,
                "query point lies more than " + std::to_string(kNystromMaxBandwidths) +
                    " bandwidths from every training sample");
  row = (-(row.array() - shift)).exp();
  return shift;
}

}  // namespace

double log_left_degree(const DiffusionBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& y) {
  Eigen::VectorXd row;
  const double shift = relative_kernel_row(basis, y, row);
  const double rel = (row.array() / basis.degrees_right.array()).sum() /
                     static_cast<double>(basis.n_samples());
  return std::log(rel) - shift;
}

Eigen::VectorXd nystrom_kernel_row(const DiffusionBasis& basis,
                                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  Eigen::VectorXd rho;
  relative_kernel_row(basis, y, rho);
  rho.array() /= basis.degrees_right.array();
  const double deg_l = rho.sum() / static_cast<double>(basis.n_samples());
  rho /= deg_l;
  return rho;
}

Eigen::VectorXd nystrom_extend(const DiffusionBasis& basis,
                               const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Index j_max) {
  if (j_max < 0 || j_max > basis.n_eigs())
    throw Error(ErrorKind::InvalidArgument, "j_max exceeds the number of eigenpairs");
  const Eigen::VectorXd rho = nystrom_kernel_row(basis, y);
  Eigen::VectorXd out = basis.eigenvectors.leftCols(j_max).transpose() * rho;
  out.array() /= static_cast<double>(basis.n_samples()) * basis.markov_eigenvalues.head(j_max).array();
  return out;
}

}  // namespace secfield
