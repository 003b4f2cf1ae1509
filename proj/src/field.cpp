#include "secfield/field.hpp"

#include <charconv>
#include <cmath>

#include "secfield/error.hpp"
#include "secfield/io.hpp"

namespace secfield {

ReconstructedField::ReconstructedField(std::shared_ptr<const DiffusionBasis> basis,
                                       Eigen::MatrixXd eval_matrix, ResolutionParams params)
    : basis_(std::move(basis)), eval_matrix_(std::move(eval_matrix)), params_(params) {
  if (!basis_) throw Error(ErrorKind::InvalidArgument, "field needs a diffusion basis");
  if (eval_matrix_.cols() != params_.L2 || eval_matrix_.rows() != basis_->dim_ambient())
    throw Error(ErrorKind::Config, "evaluation matrix must be d x L2");
  if (params_.L2 > basis_->n_eigs())
    throw Error(ErrorKind::Config, "basis has fewer than L2 eigenpairs");
  if (!eval_matrix_.allFinite())
    throw Error(ErrorKind::Numeric, "evaluation matrix has non-finite entries");
  const double n = static_cast<double>(basis_->n_samples());
  const Eigen::VectorXd inv_scale =
      (n * basis_->markov_eigenvalues.head(params_.L2).array()).inverse();
  sample_weights_ =
      basis_->eigenvectors.leftCols(params_.L2) * inv_scale.asDiagonal() * eval_matrix_.transpose();
}

Eigen::VectorXd ReconstructedField::evaluate(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return sample_weights_.transpose() * nystrom_kernel_row(*basis_, y);
}

Eigen::VectorXd ReconstructedField::evaluate_spectral(
    const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return eval_matrix_ * nystrom_extend(*basis_, y, params_.L2);
}

Eigen::MatrixXd ReconstructedField::evaluate_many(const Eigen::MatrixXd& points) const {
  Eigen::MatrixXd out(points.rows(), dim());
  for (Eigen::Index n = 0; n < points.rows(); ++n)
    out.row(n) = evaluate(points.row(n).transpose()).transpose();
  return out;
}

ReconstructedField assemble_field(std::shared_ptr<const DiffusionBasis> basis,
                                  const SecTensors& tensors, const FrameSolution& solution) {
  const ResolutionParams& p = solution.params;
  if (!(tensors.params == p))
    throw Error(ErrorKind::Config, "tensors and solution were built with different parameters");
  if (solution.b.rows() != p.L || solution.b.cols() != p.J)
    throw Error(ErrorKind::Config, "b must be L x J");
  if (tensors.F_coeffs.rows() != p.L1)
    throw Error(ErrorKind::Config, "F coefficients must have L1 rows");

  // W_{kl} = sum_{ij} b_ij d_ijkl, then A = F^T W.
  Eigen::VectorXd b_flat(static_cast<Eigen::Index>(p.L) * p.J);
  for (Eigen::Index i = 0; i < p.L; ++i)
    for (Eigen::Index j = 0; j < p.J; ++j) b_flat[i * p.J + j] = solution.b(i, j);
  const Eigen::RowVectorXd w_flat = b_flat.transpose() * tensors.d.matrix();
  const Eigen::Map<const FrameCoefficients::RowMatrix> w(w_flat.data(), p.L1, p.L2);
  Eigen::MatrixXd a = tensors.F_coeffs.transpose() * w;
  return ReconstructedField(std::move(basis), std::move(a), p);
}

FieldMetrics compute_metrics(const Eigen::MatrixXd& predicted, const TrainingSet& training,
                             const std::optional<Eigen::MatrixXd>& normals) {
  if (predicted.rows() != training.size() || predicted.cols() != training.dim_ambient())
    throw Error(ErrorKind::InvalidArgument, "prediction shape does not match training set");
  const double total = training.arrows.squaredNorm();
  if (!(total > 0.0))
    throw Error(ErrorKind::UndefinedMetric, "R^2 undefined: all true arrows are zero");
  const Eigen::MatrixXd residual = training.arrows - predicted;
  FieldMetrics m;
  m.r_squared = 1.0 - residual.squaredNorm() / total;
  m.max_pointwise_error = residual.rowwise().norm().maxCoeff();
  if (normals) {
    if (normals->rows() != training.size() || normals->cols() != training.dim_ambient())
      throw Error(ErrorKind::InvalidArgument, "normals shape does not match training set");
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index n = 0; n < predicted.rows(); ++n) {
      const double mag = predicted.row(n).norm();
      if (mag < 1e-8) continue;
      sum += std::abs(predicted.row(n).dot(normals->row(n))) / mag;
      ++count;
    }
    m.mean_tangency_defect = count > 0 ? sum / static_cast<double>(count) : 0.0;
  }
  return m;
}

FieldMetrics compute_metrics(const ReconstructedField& field, const TrainingSet& training,
                             const std::optional<Eigen::MatrixXd>& normals) {
  return compute_metrics(field.evaluate_many(training.points), training, normals);
}

void write_quiver_csv(const std::filesystem::path& path, const Eigen::MatrixXd& points,
                      const Eigen::MatrixXd& predicted,
                      const std::optional<Eigen::MatrixXd>& truth) {
  const Eigen::Index d = points.cols();
  if (predicted.rows() != points.rows() || predicted.cols() != d ||
      (truth && (truth->rows() != points.rows() || truth->cols() != d)))
    throw Error(ErrorKind::InvalidArgument, "quiver columns have mismatched shapes");
  std::string out;
  for (Eigen::Index k = 0; k < d; ++k) out += (k ? ",y_" : "y_") + std::to_string(k + 1);
  for (Eigen::Index k = 0; k < d; ++k) out += ",vhat_" + std::to_string(k + 1);
  if (truth)
    for (Eigen::Index k = 0; k < d; ++k) out += ",vtrue_" + std::to_string(k + 1);
  out += '\n';
  char buf[32];
  auto put = [&](double v) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, end);
  };
  for (Eigen::Index n = 0; n < points.rows(); ++n) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (k) out += ',';
      put(points(n, k));
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      out += ',';
      put(predicted(n, k));
    }
    if (truth)
      for (Eigen::Index k = 0; k < d; ++k) {
        out += ',';
        put((*truth)(n, k));
      }
    out += '\n';
  }
  write_file_atomic(path, out);
}

Eigen::MatrixXd box_grid(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                         const Eigen::VectorXi& resolution) {
  const Eigen::Index d = lower.size();
  if (upper.size() != d || resolution.size() != d || d < 1)
    throw Error(ErrorKind::InvalidArgument, "grid bounds and resolution must match in size");
  Eigen::Index total = 1;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (resolution[k] < 1) throw Error(ErrorKind::InvalidArgument, "grid resolution must be >= 1");
    if (!(upper[k] >= lower[k])) throw Error(ErrorKind::InvalidArgument, "grid upper < lower");
    total *= resolution[k];
  }
  Eigen::MatrixXd grid(total, d);
  for (Eigen::Index row = 0; row < total; ++row) {
    Eigen::Index rem = row;
    for (Eigen::Index k = d - 1; k >= 0; --k) {
      const Eigen::Index idx = rem % resolution[k];
      rem /= resolution[k];
      grid(row, k) = resolution[k] == 1
                         ? lower[k]
                         : lower[k] + (upper[k] - lower[k]) * static_cast<double>(idx) /
                                          static_cast<double>(resolution[k] - 1);
    }
  }
  return grid;
}

}  // namespace secfield
