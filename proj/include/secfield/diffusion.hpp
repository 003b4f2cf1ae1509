#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace secfield {

/// Gaussian kernel bandwidth. Laplace eigenvalues use c = 1/4, i.e.
/// lambda = -log(Lambda) / (c eps^2).
struct KernelConfig {
  double epsilon = 0.2;
  static constexpr double c_constant = 0.25;

  void validate() const;
};

/// exp(-|y - y2|^2 / eps^2).
double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& y2, double epsilon);

struct Degrees {
  Eigen::VectorXd right;  // r_n = (1/N) sum_m k(y_n, y_m)
  Eigen::VectorXd left;   // l_n = (1/N) sum_m k(y_n, y_m) / r_m
};

Degrees compute_degrees(const Eigen::MatrixXd& points, double epsilon);

/// Symmetric conjugate P~ = D P D^{-1} of the diffusion Markov matrix.
struct SymmetricMarkov {
  Eigen::MatrixXd p_tilde;
  Eigen::VectorXd d_alpha;  // sqrt(l / r)
  double trace = 0.0;
  Degrees degrees;
};

/// Throws DuplicatePointError if two samples coincide.
SymmetricMarkov build_symmetric_markov(const Eigen::MatrixXd& points, double epsilon);

/// Eigenvectors of P before weighting: v_j = e_j ./ e_0, sign-fixed.
struct MarkovSpectrum {
  Eigen::VectorXd eigenvalues;        // Lambda_j, descending, all > floor
  Eigen::MatrixXd symmetric_vectors;  // e_j, unit Euclidean norm
  Eigen::MatrixXd ratio_vectors;      // e_j ./ e_0
  std::vector<std::string> warnings;
};

inline constexpr double kMarkovEigenvalueFloor = 1e-14;

/// Top-M eigenpairs of the dense symmetric P~. Consumes the matrix buffer.
/// Eigenvalues at or below kMarkovEigenvalueFloor truncate the result and
/// add a warning.
MarkovSpectrum eigendecompose(Eigen::MatrixXd&& p_tilde, const Eigen::VectorXd& d_alpha,
                              Eigen::Index count);

/// Heat-trace estimate (pi eps^2)^{m/2} tr P.
double estimate_volume(double trace_p, double epsilon, int dim_manifold);

/// w = V e0^2 / |e0^2|_1; sum(w) == V.
Eigen::VectorXd compute_weights(const Eigen::VectorXd& e0, double volume);

/// Everything the diffusion-maps stage produces, plus the training points
/// and right degrees needed for out-of-sample extension.
///
/// Inner products are u^T diag(weights) v with no extra 1/N factor.
struct DiffusionBasis {
  double epsilon = 0.0;
  int dim_manifold = 1;
  Eigen::VectorXd markov_eigenvalues;   // Lambda_j in (0, 1], descending
  Eigen::VectorXd laplace_eigenvalues;  // lambda_j = -4 log(Lambda_j) / eps^2
  Eigen::MatrixXd eigenvectors;         // N x M, column j = phi_j at samples
  Eigen::VectorXd weights;
  double volume = 0.0;
  Eigen::VectorXd degrees_right;
  Eigen::VectorXd degrees_left;
  Eigen::MatrixXd points;  // N x d
  std::vector<std::string> warnings;

  Eigen::Index n_eigs() const { return eigenvectors.cols(); }
  Eigen::Index n_samples() const { return eigenvectors.rows(); }
  int dim_ambient() const { return static_cast<int>(points.cols()); }

  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return (u.array() * weights.array() * v.array()).sum();
  }
};

/// Runs the full diffusion-maps pipeline for `n_eigs` eigenpairs.
DiffusionBasis fit_diffusion_basis(const Eigen::MatrixXd& points, const KernelConfig& kernel,
                                   int dim_manifold, Eigen::Index n_eigs);

/// Out-of-sample values phi_j(y), j < j_max. Reproduces the stored
/// eigenvectors at training points. Kernel weights are evaluated relative to
/// the nearest sample, so points many bandwidths away from the data still
/// give finite values; an OutOfRange error is raised only when y lies more
/// than kNystromMaxBandwidths bandwidths from every sample.
Eigen::VectorXd nystrom_extend(const DiffusionBasis& basis,
                               const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Index j_max);

inline constexpr double kNystromMaxBandwidths = 1e3;

/// rho(y)_n = k(y, y_n) / (deg_l(y) r_n); phi_j(y) = rho . phi_j / (N Lambda_j).
Eigen::VectorXd nystrom_kernel_row(const DiffusionBasis& basis,
                                   const Eigen::Ref<const Eigen::VectorXd>& y);

/// Log of the left degree function at an arbitrary point.
double log_left_degree(const DiffusionBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace secfield
