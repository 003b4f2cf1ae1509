#pragma once

#include <Eigen/Core>

#include "secfield/diffusion.hpp"
#include "secfield/tensor.hpp"

namespace secfield {

/// Truncation parameters of the frame regression.
///
/// J        number of gradient fields grad(phi_j), j = 1..J
/// L        function index range of the frame elements phi_i grad(phi_j)
/// L1, L2   truncations of the embedding / output expansions
/// L_D      truncation of the c.g contraction defining d
/// eta      spectral floor for the Gram pseudoinverse
struct ResolutionParams {
  int J = 10;
  int L = 20;
  int L1 = 20;
  int L2 = 40;
  int L_D = 40;
  double eta = 0.01;

  static ResolutionParams circle_defaults() { return {10, 20, 20, 40, 40, 0.01}; }
  static ResolutionParams torus_defaults() { return {20, 120, 120, 280, 280, 0.05}; }

  /// Eigenpairs needed: max(L, L1, L2, L_D, J + 1).
  Eigen::Index required_eigs() const;

  /// Throws Config on violated constraints. The Gram matrix reads d_{ijlk}
  /// with l <= J in the L1 slot and k < L in the L2 slot, so J < L1 and
  /// L <= L2 are required. When available_eigs >= 0 it must cover
  /// required_eigs().
  void validate(Eigen::Index available_eigs = -1) const;

  bool operator==(const ResolutionParams&) const = default;
};

/// d_{ijkl} = <phi_l, phi_i grad(phi_j) . grad(phi_k)>, stored for
/// i < L, 1 <= j <= J, k < L1, l < L2.
class FrameCoefficients {
 public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  FrameCoefficients() = default;
  FrameCoefficients(Eigen::Index L, Eigen::Index J, Eigen::Index L1, Eigen::Index L2)
      : data_({L, J, L1, L2}) {}

  Eigen::Index L() const { return data_.extent(0); }
  Eigen::Index J() const { return data_.extent(1); }
  Eigen::Index L1() const { return data_.extent(2); }
  Eigen::Index L2() const { return data_.extent(3); }

  /// j is the gradient index, 1 <= j <= J. Throws InvalidArgument when out of
  /// range (j = 0 would be the gradient of the constant eigenfunction).
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) const;

  /// (L J) x (L1 L2) matrix with row i J + (j - 1) and column k L2 + l.
  Eigen::Map<const RowMatrix> matrix() const {
    return {data_.data(), L() * J(), L1() * L2()};
  }
  Eigen::Map<RowMatrix> matrix() { return {data_.data(), L() * J(), L1() * L2()}; }

  const Tensor4& raw() const { return data_; }

 private:
  Tensor4 data_;
};

/// c_{ijp} = sum_n phi_p phi_i phi_j w_n for i < i_max, j < j_max, p < p_max.
/// Exactly symmetric in (i, j).
Tensor3 compute_c(const DiffusionBasis& basis, Eigen::Index i_max, Eigen::Index j_max,
                  Eigen::Index p_max);

/// g_{pjk} = (lambda_j + lambda_k - lambda_p) c_{jkp} / 2 for p < p_max,
/// 0 <= j <= j_max, k < k_max. Extents are (p_max, j_max + 1, k_max).
Tensor3 compute_g(const Tensor3& c, const Eigen::VectorXd& laplace_eigenvalues,
                  Eigen::Index p_max, Eigen::Index j_max, Eigen::Index k_max);

/// d_{ijkl} = sum_{p < L_D} c_{ilp} g_{pjk}.
FrameCoefficients compute_d(const Tensor3& c, const Tensor3& g, const ResolutionParams& params);

struct GramMatrix {
  Eigen::MatrixXd matrix;    // symmetrized
  double asymmetry = 0.0;    // max |G - G^T| before symmetrization
};

/// G_{(i,j),(k,l)} = d_{ijlk}; row i J + (j - 1), column k J + (l - 1).
GramMatrix build_gram(const FrameCoefficients& d, const ResolutionParams& params);

/// Rows F_k = sum_n y_n phi_k(x_n) w_n, k < L1.
Eigen::MatrixXd compute_F_coeffs(const DiffusionBasis& basis, const Eigen::MatrixXd& points,
                                 Eigen::Index L1);

/// v_hat_{kl} = F_k . sum_n v_n phi_l(x_n) w_n, flattened as k L2 + l.
Eigen::VectorXd compute_v_hat(const DiffusionBasis& basis, const Eigen::MatrixXd& arrows,
                              const Eigen::MatrixXd& F_coeffs, Eigen::Index L1, Eigen::Index L2);

struct SecTensors {
  ResolutionParams params;
  Tensor3 c;  // (max(L1, L2), max(L1, L2), L_D)
  Tensor3 g;  // (L_D, J + 1, L1)
  FrameCoefficients d;
  Eigen::MatrixXd gram;
  double gram_asymmetry = 0.0;
  Eigen::MatrixXd F_coeffs;  // L1 x d
  Eigen::VectorXd v_hat;     // L1 L2
};

SecTensors build_sec_tensors(const DiffusionBasis& basis, const Eigen::MatrixXd& points,
                             const Eigen::MatrixXd& arrows, const ResolutionParams& params);

struct FrameSolution {
  ResolutionParams params;
  Eigen::MatrixXd b;                 // L x J, column j - 1 holds gradient index j
  Eigen::Index gram_rank = 0;
  Eigen::VectorXd gram_spectrum;     // retained eigenvalues (> eta), descending
  Eigen::VectorXd gram_eigenvalues;  // full spectrum, descending
};

/// b = G_eta^+ D v_hat. Throws Config("eta too large") if no Gram eigenvalue
/// exceeds eta.
FrameSolution solve_b(const Eigen::MatrixXd& gram, const FrameCoefficients& d,
                      const Eigen::VectorXd& v_hat, const ResolutionParams& params);

}  // namespace secfield
