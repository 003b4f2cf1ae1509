#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "secfield/datasets.hpp"
#include "secfield/diffusion.hpp"
#include "secfield/dynamics.hpp"
#include "secfield/sec_frame.hpp"

namespace secfield {

/// A builtin benchmark system named `circle:uniform|arc|variable` or
/// `torus:rational|irrational|stepanoff`.
struct SystemSpec {
  std::string name;
  std::optional<CircleSystem> circle;
  std::optional<TorusSystem> torus;

  int dim_manifold() const { return circle ? 1 : 2; }
  int dim_ambient() const { return circle ? 2 : 3; }
};

/// Throws InvalidArgument listing the valid names.
SystemSpec parse_system(const std::string& name);
const std::vector<std::string>& system_names();

/// Circle systems use n; torus systems use n1 x n2.
TrainingSet generate_system(const SystemSpec& spec, int n, int n1, int n2);

/// Embeds angle coordinates (1 for the circle, 2 for the torus).
Eigen::VectorXd embed_angles(const SystemSpec& spec, const Eigen::VectorXd& angles);

/// Standard embedding of ambient dimension d (unit circle for d = 2,
/// the a = 5/3, b = 3/5 torus for d = 3). Throws InvalidArgument otherwise.
SystemSpec embedding_for_dimension(int d);

/// Unit normals of the embedded manifold at arbitrary points near it.
Eigen::MatrixXd manifold_normals(const SystemSpec& spec, const Eigen::MatrixXd& points);
ManifoldDistanceFn manifold_distance(const SystemSpec& spec);

/// Angle-coordinate orbit of the true system mapped through the embedding.
Orbit true_system_orbit(const SystemSpec& spec, const Eigen::VectorXd& angles, double dt,
                        double t_end);

/// Default bandwidth and resolution by manifold dimension (circle / torus
/// benchmark values).
KernelConfig default_kernel(int dim_manifold);
ResolutionParams default_resolution(int dim_manifold);

enum class Scale { Desk, Full };

/// A named reproduction experiment.
struct Preset {
  std::string id;
  std::string system;
  double reference_r_squared;  // published value at full scale
  std::vector<double> fixed_point_inits;  // angles; empty when none
  std::vector<double> fixed_point_targets;
};

const std::vector<Preset>& presets();
/// Throws InvalidArgument listing the known ids.
const Preset& find_preset(const std::string& id);

inline constexpr int kDeskTorusGrid = 60;
inline constexpr int kFullTorusGrid = 150;
inline constexpr double kFullTorusEpsilon = 0.0966;

struct PresetSetup {
  SystemSpec system;
  int n = 0, n1 = 0, n2 = 0;
  KernelConfig kernel;
  ResolutionParams params;
  double threshold = 0.0;
  Eigen::VectorXd orbit_start;  // angles
  double dt = 1e-3;
  double t_end = 0.0;
  double tracking_window = 0.0;  // orbit error is gated on t <= tracking_window
};

/// Circle presets ignore the scale. Desk-scale torus runs use a 60 x 60 grid
/// with the bandwidth scaled by the grid-spacing ratio 150 / 60.
PresetSetup preset_setup(const Preset& preset, Scale scale);

struct FixedPointOutcome {
  double init_angle = 0.0;
  double target_angle = 0.0;
  std::optional<double> angle;
  double residual = 0.0;
  int iterations = 0;
  std::string error;
};

struct PresetOutcome {
  std::string id;
  Scale scale = Scale::Desk;
  PresetSetup setup;
  double r_squared = 0.0;
  double max_pointwise_error = 0.0;
  std::optional<double> mean_tangency_defect;
  double volume = 0.0;
  double exact_volume = 0.0;
  Eigen::Index gram_rank = 0;
  Eigen::VectorXd laplace_eigenvalues;
  double orbit_error_in_window = 0.0;
  double orbit_max_error = 0.0;
  double orbit_max_manifold_defect = 0.0;
  double orbit_min_radius = 0.0, orbit_max_radius = 0.0;  // circle only
  std::string orbit_error;  // non-empty when the model orbit diverged
  std::vector<FixedPointOutcome> fixed_points;
  double seconds_laplacian = 0.0, seconds_coefficients = 0.0, seconds_regression = 0.0;
  std::vector<std::string> warnings;

  bool passed() const { return r_squared >= setup.threshold; }
};

/// Runs a preset end to end. When `out_dir` is set, writes the training set,
/// model, metrics, quiver, orbit and comparison files there.
/// Large coefficient tensors are left out of the model file.
PresetOutcome run_preset(const Preset& preset, Scale scale,
                         const std::optional<std::filesystem::path>& out_dir);

/// Markdown report; the first line carries the only timestamp.
std::string format_report(const PresetOutcome& outcome, const std::string& timestamp);

}  // namespace secfield
