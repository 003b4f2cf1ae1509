#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include <Eigen/Core>

#include "secfield/datasets.hpp"
#include "secfield/field.hpp"

namespace secfield {

using VectorFieldFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Trajectory sampled at t_k = k dt; when t_end is not a multiple of dt a
/// final shorter step lands exactly on t_end.
struct Orbit {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;  // T x d
};

inline constexpr double kDivergenceNorm = 1e6;

/// Classical fixed-step RK4. Throws DivergenceError when |y| exceeds
/// kDivergenceNorm.
Orbit integrate(const VectorFieldFn& field, const Eigen::VectorXd& y0, double dt, double t_end);

/// Reference trajectory F(Phi^t(theta0)) integrated in angle coordinates.
Orbit true_orbit(const CircleSystem& system, double theta0, double dt, double t_end);
Orbit true_orbit(const TorusSystem& system, const Eigen::Vector2d& theta0, double dt, double t_end);

struct OrbitComparison {
  Eigen::VectorXd times;
  Eigen::VectorXd error_series;     // |a(t) - b(t)|
  double max_error = 0.0;
  Eigen::VectorXd manifold_defect;  // distance of b(t) to the manifold, when known

  /// Max error over t <= t_star.
  double max_error_until(double t_star) const;
};

using ManifoldDistanceFn = std::function<double(const Eigen::VectorXd&)>;

/// Throws InvalidArgument unless both orbits share one time grid.
OrbitComparison compare_orbits(const Orbit& a, const Orbit& b,
                               const ManifoldDistanceFn& manifold_distance = {});

struct NewtonResult {
  Eigen::VectorXd point;
  double residual = 0.0;
  int iterations = 0;
};

inline constexpr double kMaxJacobianCondition = 1e12;

/// Newton iteration on V(y) = 0 with a central-difference Jacobian
/// (step 1e-5 max(1, |y|)). Throws SingularJacobian when cond(J) > 1e12 and
/// NonConvergenceError (carrying the best iterate) after max_iter steps.
NewtonResult newton_fixed_point(const VectorFieldFn& field, const Eigen::VectorXd& y_init,
                                double tol, int max_iter);
NewtonResult newton_fixed_point(const ReconstructedField& field, const Eigen::VectorXd& y_init,
                                double tol, int max_iter);

// CSV: `t,y_1..y_d`; comparison adds `err,manifold_defect` (states of b).
void write_orbit_csv(const std::filesystem::path& path, const Orbit& orbit);
Orbit read_orbit_csv(const std::filesystem::path& path);
void write_comparison_csv(const std::filesystem::path& path, const Orbit& b,
                          const OrbitComparison& comparison);

}  // namespace secfield
