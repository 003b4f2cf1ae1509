#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include <Eigen/Core>

#include "secfield/datasets.hpp"
#include "secfield/diffusion.hpp"
#include "secfield/sec_frame.hpp"

namespace secfield {

/// The learned pushforward field y -> A phi(y), with phi(y) the Nystrom
/// values of the leading L2 eigenfunctions. Immutable; evaluate() is safe to
/// call concurrently.
class ReconstructedField {
 public:
  ReconstructedField(std::shared_ptr<const DiffusionBasis> basis, Eigen::MatrixXd eval_matrix,
                     ResolutionParams params);

  /// Defined on all of R^d, not only on the sampled manifold.
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  /// Same value computed as A . phi(y) from explicit Nystrom eigenfunctions.
  Eigen::VectorXd evaluate_spectral(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  /// Rows are evaluate(points.row(n)).
  Eigen::MatrixXd evaluate_many(const Eigen::MatrixXd& points) const;

  const DiffusionBasis& basis() const { return *basis_; }
  std::shared_ptr<const DiffusionBasis> shared_basis() const { return basis_; }
  const Eigen::MatrixXd& eval_matrix() const { return eval_matrix_; }
  const ResolutionParams& params() const { return params_; }
  int dim() const { return static_cast<int>(eval_matrix_.rows()); }

 private:
  std::shared_ptr<const DiffusionBasis> basis_;
  Eigen::MatrixXd eval_matrix_;  // d x L2
  ResolutionParams params_;
  // N x d: phi_l(x_n) / (N Lambda_l) contracted with A, so evaluation is one
  // kernel row times this matrix.
  Eigen::MatrixXd sample_weights_;
};

/// A_{:,l} = sum_{i<L, 1<=j<=J, k<L1} d_ijkl b_ij F_k.
ReconstructedField assemble_field(std::shared_ptr<const DiffusionBasis> basis,
                                  const SecTensors& tensors, const FrameSolution& solution);

struct FieldMetrics {
  double r_squared = 0.0;
  double max_pointwise_error = 0.0;
  std::optional<double> mean_tangency_defect;
};

/// r_squared = 1 - sum |v_n - V(y_n)|^2 / sum |v_n|^2. Throws
/// UndefinedMetric when every true arrow is zero.
FieldMetrics compute_metrics(const ReconstructedField& field, const TrainingSet& training,
                             const std::optional<Eigen::MatrixXd>& normals = std::nullopt);

/// Same metrics for precomputed predictions (rows aligned with training).
FieldMetrics compute_metrics(const Eigen::MatrixXd& predicted, const TrainingSet& training,
                             const std::optional<Eigen::MatrixXd>& normals = std::nullopt);

/// Quiver CSV: header `y_1..y_d,vhat_1..vhat_d[,vtrue_1..vtrue_d]`.
void write_quiver_csv(const std::filesystem::path& path, const Eigen::MatrixXd& points,
                      const Eigen::MatrixXd& predicted,
                      const std::optional<Eigen::MatrixXd>& truth = std::nullopt);

/// Regular grid over a box; lower/upper/resolution have one entry per axis.
/// Row ordering: the last axis varies fastest.
Eigen::MatrixXd box_grid(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                         const Eigen::VectorXi& resolution);

}  // namespace secfield
