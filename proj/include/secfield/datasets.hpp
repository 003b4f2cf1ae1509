#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Core>

namespace secfield {

/// Embedded point samples y_n together with pushforward arrows v_n.
struct TrainingSet {
  int dim_manifold = 1;
  Eigen::MatrixXd points;  // N x d
  Eigen::MatrixXd arrows;  // N x d

  Eigen::Index size() const { return points.rows(); }
  int dim_ambient() const { return static_cast<int>(points.cols()); }

  /// Throws InvalidArgument when shapes, finiteness or m <= d are violated.
  void validate() const;
};

enum class CircleField { UniformRotation, ConnectingArc, VariableSpeed };

/// V = h(theta) d/dtheta on S^1 under the standard embedding in R^2.
struct CircleSystem {
  CircleField kind = CircleField::UniformRotation;
  double c = 0.0;

  /// c = 1.5 for the connecting arc, 0.5 for the variable-speed rotation.
  static CircleSystem standard(CircleField kind);

  void validate() const;
  double speed(double theta) const;
  Eigen::Vector2d embed(double theta) const;
  Eigen::Vector2d pushforward(double theta) const;
};

enum class TorusField { RationalRotation, IrrationalRotation, Stepanoff };

/// V = h1 d/dtheta1 + h2 d/dtheta2 on T^2 embedded in R^3 with latitude
/// radius a and meridian radius b.
struct TorusSystem {
  TorusField kind = TorusField::RationalRotation;
  double a = 5.0 / 3.0;
  double b = 3.0 / 5.0;
  double alpha = 4.47213595499957939282;  // sqrt(20)

  static TorusSystem standard(TorusField kind);

  void validate() const;
  Eigen::Vector2d speeds(double theta1, double theta2) const;
  Eigen::Vector3d embed(double theta1, double theta2) const;
  Eigen::Vector3d pushforward(double theta1, double theta2) const;
  Eigen::Vector3d outward_normal(double theta1, double theta2) const;
  /// Euclidean distance from y to the embedded surface.
  double surface_distance(const Eigen::Vector3d& y) const;
};

/// Uniform grid theta_k = 2 pi k / n, k < n.
TrainingSet generate_circle(const CircleSystem& system, int n);

/// Uniform periodic n1 x n2 grid; row index = i1 * n2 + i2.
TrainingSet generate_torus(const TorusSystem& system, int n1, int n2);

/// Unit normals n(y_n) for every row of a generated torus set.
Eigen::MatrixXd torus_normals(const TorusSystem& system, int n1, int n2);

/// Unit normals for a generated circle set (radial direction).
Eigen::MatrixXd circle_normals(const Eigen::MatrixXd& points);

struct AnalyticEigenpair {
  double eigenvalue;
  double value;
};

/// Closed-form Laplace-Beltrami eigenpairs of the unit circle, orthonormal
/// in L^2(dtheta). Spectrum with multiplicity: 0, 1, 1, 4, 4, 9, 9, ...
AnalyticEigenpair circle_analytic_basis(int j, double theta);

/// Distance from y in R^2 to the unit circle.
double circle_distance(const Eigen::Vector2d& y);

// Training-set CSV: header `# sec-field v1, d=<d>, m=<m>, N=<N>` followed by N
// rows of 2d values (point coordinates, then arrow coordinates).
void write_training_set(const TrainingSet& set, const std::filesystem::path& path);
TrainingSet read_training_set(const std::filesystem::path& path);

std::string format_training_set(const TrainingSet& set);
TrainingSet parse_training_set(const std::string& text);

}  // namespace secfield
