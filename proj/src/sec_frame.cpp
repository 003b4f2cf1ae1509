#include "secfield/sec_frame.hpp"

#include <algorithm>
#include <string>

#include "linalg.hpp"
#include "secfield/error.hpp"
#include "secfield/parallel.hpp"

namespace secfield {

namespace {

using RowMatrix = FrameCoefficients::RowMatrix;

void config_error(const std::string& what) { throw Error(ErrorKind::Config, what); }

}  // namespace

Eigen::Index ResolutionParams::required_eigs() const {
  return std::max({L, L1, L2, L_D, J + 1});
}

void ResolutionParams::validate(Eigen::Index available_eigs) const {
  if (J < 1 || L < 1 || L1 < 1 || L2 < 1 || L_D < 1)
    config_error("resolution parameters J, L, L1, L2, L_D must be >= 1");
  if (!(eta > 0.0)) config_error("eta must be positive");
  if (J + 1 > L1) config_error("J < L1 is required (Gram entries read d_{ijlk} with l <= J)");
  if (L > L2) config_error("L <= L2 is required (Gram entries read d_{ijlk} with k < L)");
  if (available_eigs >= 0 && required_eigs() > available_eigs)
    config_error("resolution needs " + std::to_string(required_eigs()) +
                 " eigenpairs but only " + std::to_string(available_eigs) + " are available");
}

double FrameCoefficients::operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k,
                                     Eigen::Index l) const {
  if (i < 0 || i >= L() || j < 1 || j > J() || k < 0 || k >= L1() || l < 0 || l >= L2())
    throw Error(ErrorKind::InvalidArgument, "d index out of range (gradient index j is 1..J)");
  return data_(i, j - 1, k, l);
}

Tensor3 compute_c(const DiffusionBasis& basis, Eigen::Index i_max, Eigen::Index j_max,
                  Eigen::Index p_max) {
  const Eigen::Index n_fn = std::max(i_max, j_max);
  if (i_max < 1 || j_max < 1 || p_max < 1 || n_fn > basis.n_eigs() || p_max > basis.n_eigs())
    throw Error(ErrorKind::InvalidArgument, "c index bounds exceed available eigenpairs");

  const auto phi = basis.eigenvectors.leftCols(n_fn);
  Tensor3 c({i_max, j_max, p_max});
  parallel_for(static_cast<std::size_t>(p_max), [&](std::size_t pp) {
    const auto p = static_cast<Eigen::Index>(pp);
    const Eigen::VectorXd wp = basis.weights.cwiseProduct(basis.eigenvectors.col(p));
    const Eigen::MatrixXd weighted = phi.array().colwise() * wp.array();
    const Eigen::MatrixXd s = phi.transpose() * weighted;
    // Upper triangle only, mirrored, so c_ijp == c_jip bitwise.
    for (Eigen::Index i = 0; i < i_max; ++i)
      for (Eigen::Index j = 0; j < j_max; ++j)
        c(i, j, p) = i <= j ? s(i, j) : s(j, i);
  });
  return c;
}

Tensor3 compute_g(const Tensor3& c, const Eigen::VectorXd& laplace, Eigen::Index p_max,
                  Eigen::Index j_max, Eigen::Index k_max) {
  if (p_max < 1 || j_max < 0 || k_max < 1 || j_max + 1 > c.extent(0) ||
      k_max > c.extent(1) || p_max > c.extent(2) ||
      std::max({p_max, j_max + 1, k_max}) > laplace.size())
    throw Error(ErrorKind::InvalidArgument, "g index bounds exceed c extents");
  Tensor3 g({p_max, j_max + 1, k_max});
  for (Eigen::Index p = 0; p < p_max; ++p)
    for (Eigen::Index j = 0; j <= j_max; ++j)
      for (Eigen::Index k = 0; k < k_max; ++k)
        g(p, j, k) = 0.5 * (laplace[j] + laplace[k] - laplace[p]) * c(j, k, p);
  return g;
}

FrameCoefficients compute_d(const Tensor3& c, const Tensor3& g, const ResolutionParams& params) {
  const Eigen::Index L = params.L, J = params.J, L1 = params.L1, L2 = params.L2,
                     LD = params.L_D;
  if (c.extent(0) < L || c.extent(1) < L2 || c.extent(2) < LD)
    throw Error(ErrorKind::InvalidArgument, "c does not cover i < L, l < L2, p < L_D");
  if (g.extent(0) < LD || g.extent(1) < J + 1 || g.extent(2) < L1)
    throw Error(ErrorKind::InvalidArgument, "g does not cover p < L_D, j <= J, k < L1");

  // gmat(p, (j-1) L1 + k) = g_{pjk}
  Eigen::MatrixXd gmat(LD, J * L1);
  for (Eigen::Index p = 0; p < LD; ++p)
    for (Eigen::Index j = 1; j <= J; ++j)
      for (Eigen::Index k = 0; k < L1; ++k) gmat(p, (j - 1) * L1 + k) = g(p, j, k);
  const Eigen::MatrixXd gmat_t = gmat.transpose();

  FrameCoefficients d(L, J, L1, L2);
  double* out = d.matrix().data();
  const Eigen::Index slab = J * L1 * L2;
  parallel_for(static_cast<std::size_t>(L), [&](std::size_t ii) {
    const auto i = static_cast<Eigen::Index>(ii);
    Eigen::Map<const RowMatrix> ci(c.data() + i * c.extent(1) * c.extent(2), c.extent(1),
                                   c.extent(2));
    // slab(i)((j-1) L1 + k, l) = sum_p g_{pjk} c_{ilp}
    Eigen::Map<RowMatrix> di(out + i * slab, J * L1, L2);
    di.noalias() = gmat_t * ci.topLeftCorner(L2, LD).transpose();
  });
  return d;
}

GramMatrix build_gram(const FrameCoefficients& d, const ResolutionParams& params) {
  const Eigen::Index L = params.L, J = params.J;
  if (d.L() < L || d.J() < J || d.L1() < J + 1 || d.L2() < L)
    throw Error(ErrorKind::Config, "d tensor does not cover the Gram index pattern");
  GramMatrix out;
  const Eigen::Index n = L * J;
  out.matrix.resize(n, n);
  const Tensor4& raw = d.raw();
  for (Eigen::Index i = 0; i < L; ++i)
    for (Eigen::Index j = 1; j <= J; ++j)
      for (Eigen::Index k = 0; k < L; ++k)
        for (Eigen::Index l = 1; l <= J; ++l)
          out.matrix(i * J + j - 1, k * J + l - 1) = raw(i, j - 1, l, k);
  out.asymmetry = (out.matrix - out.matrix.transpose()).cwiseAbs().maxCoeff();
  out.matrix = (0.5 * (out.matrix + out.matrix.transpose())).eval();
  return out;
}

Eigen::MatrixXd compute_F_coeffs(const DiffusionBasis& basis, const Eigen::MatrixXd& points,
                                 Eigen::Index L1) {
  if (L1 < 1 || L1 > basis.n_eigs())
    throw Error(ErrorKind::InvalidArgument, "L1 exceeds available eigenpairs");
  if (points.rows() != basis.n_samples())
    throw Error(ErrorKind::InvalidArgument, "points do not match the basis samples");
  const Eigen::MatrixXd weighted = points.array().colwise() * basis.weights.array();
  return basis.eigenvectors.leftCols(L1).transpose() * weighted;
}

Eigen::VectorXd compute_v_hat(const DiffusionBasis& basis, const Eigen::MatrixXd& arrows,
                              const Eigen::MatrixXd& F_coeffs, Eigen::Index L1, Eigen::Index L2) {
  if (L2 < 1 || L2 > basis.n_eigs() || L1 < 1 || L1 > F_coeffs.rows())
    throw Error(ErrorKind::InvalidArgument, "v_hat bounds exceed available coefficients");
  if (arrows.rows() != basis.n_samples() || arrows.cols() != F_coeffs.cols())
    throw Error(ErrorKind::InvalidArgument, "arrow shape mismatch");
  const Eigen::MatrixXd weighted = arrows.array().colwise() * basis.weights.array();
  const Eigen::MatrixXd projected = basis.eigenvectors.leftCols(L2).transpose() * weighted;
  const RowMatrix vhat = F_coeffs.topRows(L1) * projected.transpose();
  return Eigen::Map<const Eigen::VectorXd>(vhat.data(), vhat.size());
}

SecTensors build_sec_tensors(const DiffusionBasis& basis, const Eigen::MatrixXd& points,
                             const Eigen::MatrixXd& arrows, const ResolutionParams& params) {
  params.validate(basis.n_eigs());
  SecTensors t;
  t.params = params;
  const Eigen::Index n_fn = std::max(params.L1, params.L2);
  t.c = compute_c(basis, n_fn, n_fn, params.L_D);
  t.g = compute_g(t.c, basis.laplace_eigenvalues, params.L_D, params.J, params.L1);
  t.d = compute_d(t.c, t.g, params);
  GramMatrix gram = build_gram(t.d, params);
  t.gram = std::move(gram.matrix);
  t.gram_asymmetry = gram.asymmetry;
  t.F_coeffs = compute_F_coeffs(basis, points, params.L1);
  t.v_hat = compute_v_hat(basis, arrows, t.F_coeffs, params.L1, params.L2);
  return t;
}

FrameSolution solve_b(const Eigen::MatrixXd& gram, const FrameCoefficients& d,
                      const Eigen::VectorXd& v_hat, const ResolutionParams& params) {
  params.validate();
  const Eigen::Index n = static_cast<Eigen::Index>(params.L) * params.J;
  if (gram.rows() != n || gram.cols() != n)
    throw Error(ErrorKind::Config, "Gram matrix size does not match L J");
  if (d.L() != params.L || d.J() != params.J || d.L1() != params.L1 || d.L2() != params.L2)
    throw Error(ErrorKind::Config, "d tensor shape does not match the resolution parameters");
  if (v_hat.size() != static_cast<Eigen::Index>(params.L1) * params.L2)
    throw Error(ErrorKind::Config, "v_hat length does not match L1 L2");

  detail::SymmetricEigen eig = detail::all_eigenpairs(gram);
  Eigen::Index rank = 0;
  while (rank < n && eig.values[rank] > params.eta) ++rank;
  if (rank == 0)
    throw Error(ErrorKind::Config, "eta too large: no Gram eigenvalue exceeds eta = " +
                                       std::to_string(params.eta));

  const Eigen::VectorXd rhs = d.matrix() * v_hat;
  const auto u = eig.vectors.leftCols(rank);
  const Eigen::VectorXd coeffs =
      (u.transpose() * rhs).cwiseQuotient(eig.values.head(rank));
  const Eigen::VectorXd b_flat = u * coeffs;

  FrameSolution sol;
  sol.params = params;
  sol.b.resize(params.L, params.J);
  for (Eigen::Index i = 0; i < params.L; ++i)
    for (Eigen::Index j = 0; j < params.J; ++j) sol.b(i, j) = b_flat[i * params.J + j];
  sol.gram_rank = rank;
  sol.gram_spectrum = eig.values.head(rank);
  sol.gram_eigenvalues = eig.values;
  return sol;
}

}  // namespace secfield
