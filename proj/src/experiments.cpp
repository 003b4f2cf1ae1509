#include "secfield/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "secfield/error.hpp"
#include "secfield/field.hpp"
#include "secfield/io.hpp"
#include "secfield/pipeline.hpp"
#include "secfield/serialization.hpp"

namespace secfield {

namespace {

constexpr double kPi = std::numbers::pi;

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  return a < 0.0 ? a + 2.0 * kPi : a;
}

}  // namespace

const std::vector<std::string>& system_names() {
  static const std::vector<std::string> names{
      "circle:uniform", "circle:arc",        "circle:variable",
      "torus:rational", "torus:irrational", "torus:stepanoff"};
  return names;
}

SystemSpec parse_system(const std::string& name) {
  SystemSpec s;
  s.name = name;
  if (name == "circle:uniform")
    s.circle = CircleSystem::standard(CircleField::UniformRotation);
  else if (name == "circle:arc")
    s.circle = CircleSystem::standard(CircleField::ConnectingArc);
  else if (name == "circle:variable")
    s.circle = CircleSystem::standard(CircleField::VariableSpeed);
  else if (name == "torus:rational")
    s.torus = TorusSystem::standard(TorusField::RationalRotation);
  else if (name == "torus:irrational")
    s.torus = TorusSystem::standard(TorusField::IrrationalRotation);
  else if (name == "torus:stepanoff")
    s.torus = TorusSystem::standard(TorusField::Stepanoff);
  else
    throw Error(ErrorKind::InvalidArgument,
                "unknown system '" + name + "' (expected one of: " + join(system_names()) + ")");
  return s;
}

TrainingSet generate_system(const SystemSpec& spec, int n, int n1, int n2) {
  if (spec.circle) return generate_circle(*spec.circle, n);
  return generate_torus(*spec.torus, n1, n2);
}

Eigen::VectorXd embed_angles(const SystemSpec& spec, const Eigen::VectorXd& angles) {
  if (angles.size() != spec.dim_manifold())
    throw Error(ErrorKind::InvalidArgument,
                spec.name + " takes " + std::to_string(spec.dim_manifold()) + " angle(s)");
  if (spec.circle) return spec.circle->embed(angles[0]);
  return spec.torus->embed(angles[0], angles[1]);
}

SystemSpec embedding_for_dimension(int d) {
  if (d == 2) return parse_system("circle:uniform");
  if (d == 3) return parse_system("torus:rational");
  throw Error(ErrorKind::InvalidArgument,
              "angle coordinates need a 2-d (circle) or 3-d (torus) model");
}

Eigen::MatrixXd manifold_normals(const SystemSpec& spec, const Eigen::MatrixXd& points) {
  if (points.cols() != spec.dim_ambient())
    throw Error(ErrorKind::InvalidArgument, "points do not match the system's ambient dimension");
  if (spec.circle) return circle_normals(points);
  Eigen::MatrixXd normals(points.rows(), 3);
  for (Eigen::Index n = 0; n < points.rows(); ++n) {
    const double theta1 = std::atan2(points(n, 1), points(n, 0));
    const double rho = std::hypot(points(n, 0), points(n, 1));
    const double theta2 = std::atan2(points(n, 2), rho - spec.torus->a);
    normals.row(n) = spec.torus->outward_normal(theta1, theta2).transpose();
  }
  return normals;
}

ManifoldDistanceFn manifold_distance(const SystemSpec& spec) {
  if (spec.circle)
    return [](const Eigen::VectorXd& y) { return circle_distance(Eigen::Vector2d(y[0], y[1])); };
  const TorusSystem torus = *spec.torus;
  return [torus](const Eigen::VectorXd& y) {
    return torus.surface_distance(Eigen::Vector3d(y[0], y[1], y[2]));
  };
}

Orbit true_system_orbit(const SystemSpec& spec, const Eigen::VectorXd& angles, double dt,
                        double t_end) {
  if (angles.size() != spec.dim_manifold())
    throw Error(ErrorKind::InvalidArgument,
                spec.name + " takes " + std::to_string(spec.dim_manifold()) + " angle(s)");
  if (spec.circle) return true_orbit(*spec.circle, angles[0], dt, t_end);
  return true_orbit(*spec.torus, Eigen::Vector2d(angles[0], angles[1]), dt, t_end);
}

KernelConfig default_kernel(int dim_manifold) {
  return KernelConfig{dim_manifold == 1 ? 0.2 : kFullTorusEpsilon};
}

ResolutionParams default_resolution(int dim_manifold) {
  return dim_manifold == 1 ? ResolutionParams::circle_defaults()
                           : ResolutionParams::torus_defaults();
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list{
      {"circle-v1", "circle:uniform", 0.999731, {}, {}},
      {"circle-v2", "circle:arc", 0.999220, {2.2, 4.1},
       {std::acos(-2.0 / 3.0), 2.0 * kPi - std::acos(-2.0 / 3.0)}},
      {"circle-v3", "circle:variable", 0.999632, {}, {}},
      {"torus-v1", "torus:rational", 0.999975, {}, {}},
      {"torus-v2", "torus:irrational", 0.999945, {}, {}},
      {"torus-v3", "torus:stepanoff", 0.999855, {}, {}},
  };
  return list;
}

const Preset& find_preset(const std::string& id) {
  for (const auto& p : presets())
    if (p.id == id) return p;
  std::vector<std::string> ids;
  for (const auto& p : presets()) ids.push_back(p.id);
  throw Error(ErrorKind::InvalidArgument,
              "unknown preset '" + id + "' (expected one of: " + join(ids) + ")");
}

PresetSetup preset_setup(const Preset& preset, Scale scale) {
  PresetSetup s;
  s.system = parse_system(preset.system);
  s.params = default_resolution(s.system.dim_manifold());
  s.dt = 1e-3;
  if (s.system.circle) {
    s.n = 800;
    s.kernel = default_kernel(1);
    s.threshold = 0.995;
    s.orbit_start = Eigen::VectorXd::Zero(1);
    s.t_end = 20.0;
    s.tracking_window = 20.0;
  } else {
    const int grid = scale == Scale::Full ? kFullTorusGrid : kDeskTorusGrid;
    s.n1 = s.n2 = grid;
    s.kernel = KernelConfig{kFullTorusEpsilon * static_cast<double>(kFullTorusGrid) / grid};
    s.threshold = 0.99;
    s.orbit_start = Eigen::Vector2d(kPi + 0.3, kPi + 0.5);
    s.t_end = 10.0;
    s.tracking_window = 1.5;
  }
  return s;
}

PresetOutcome run_preset(const Preset& preset, Scale scale,
                         const std::optional<std::filesystem::path>& out_dir) {
  PresetOutcome o;
  o.id = preset.id;
  o.scale = scale;
  o.setup = preset_setup(preset, scale);
  const PresetSetup& s = o.setup;
  if (out_dir) std::filesystem::create_directories(*out_dir);

  const TrainingSet training = generate_system(s.system, s.n, s.n1, s.n2);
  FitResult fit = secfield::fit(training, s.kernel, s.params);
  const Eigen::MatrixXd predicted = fit.field.evaluate_many(training.points);
  const FieldMetrics metrics =
      compute_metrics(predicted, training, manifold_normals(s.system, training.points));
  o.r_squared = metrics.r_squared;
  o.max_pointwise_error = metrics.max_pointwise_error;
  o.mean_tangency_defect = metrics.mean_tangency_defect;
  o.volume = fit.basis->volume;
  o.exact_volume = s.system.circle ? 2.0 * kPi
                                   : 4.0 * kPi * kPi * s.system.torus->a * s.system.torus->b;
  o.gram_rank = fit.solution.gram_rank;
  o.laplace_eigenvalues = fit.basis->laplace_eigenvalues;
  o.seconds_laplacian = fit.timings.laplacian;
  o.seconds_coefficients = fit.timings.coefficients;
  o.seconds_regression = fit.timings.regression;
  o.warnings = fit.basis->warnings;

  const Orbit truth = true_system_orbit(s.system, s.orbit_start, s.dt, s.t_end);
  std::optional<Orbit> model_orbit;
  std::optional<OrbitComparison> comparison;
  try {
    model_orbit = integrate([&](const Eigen::VectorXd& y) { return fit.field.evaluate(y); },
                            truth.states.row(0).transpose(), s.dt, s.t_end);
    comparison = compare_orbits(truth, *model_orbit, manifold_distance(s.system));
    o.orbit_error_in_window = comparison->max_error_until(s.tracking_window);
    o.orbit_max_error = comparison->max_error;
    o.orbit_max_manifold_defect = comparison->manifold_defect.maxCoeff();
    if (s.system.circle) {
      const Eigen::VectorXd radius = model_orbit->states.rowwise().norm();
      o.orbit_min_radius = radius.minCoeff();
      o.orbit_max_radius = radius.maxCoeff();
    }
  } catch (const Error& e) {
    o.orbit_error = e.what();
  }

  for (std::size_t k = 0; k < preset.fixed_point_inits.size(); ++k) {
    FixedPointOutcome fp;
    fp.init_angle = preset.fixed_point_inits[k];
    fp.target_angle = preset.fixed_point_targets[k];
    try {
      const NewtonResult r =
          newton_fixed_point(fit.field, embed_angles(s.system, Eigen::VectorXd::Constant(1, fp.init_angle)),
                             1e-10, 50);
      fp.angle = wrap_angle(std::atan2(r.point[1], r.point[0]));
      fp.residual = r.residual;
      fp.iterations = r.iterations;
    } catch (const Error& e) {
      fp.error = e.what();
    }
    o.fixed_points.push_back(fp);
  }

  if (out_dir) {
    const auto& dir = *out_dir;
    write_training_set(training, dir / "training.csv");
    write_model(make_model_document(fit), dir / "model.json");
    write_quiver_csv(dir / "quiver_training.csv", training.points, predicted, training.arrows);
    if (s.system.circle) {
      const Eigen::MatrixXd grid = box_grid(Eigen::Vector2d(-5, -5), Eigen::Vector2d(5, 5),
                                            Eigen::Vector2i(21, 21));
      write_quiver_csv(dir / "quiver_box.csv", grid, fit.field.evaluate_many(grid));
    }
    write_orbit_csv(dir / "true_orbit.csv", truth);
    if (model_orbit) {
      write_orbit_csv(dir / "model_orbit.csv", *model_orbit);
      write_comparison_csv(dir / "comparison.csv", *model_orbit, *comparison);
    }
    nlohmann::json metrics_json{{"r_squared", o.r_squared},
                                {"max_pointwise_error", o.max_pointwise_error},
                                {"gram_rank", o.gram_rank},
                                {"volume", o.volume},
                                {"eigenvalues_laplace", to_json(o.laplace_eigenvalues)}};
    if (o.mean_tangency_defect) metrics_json["mean_tangency_defect"] = *o.mean_tangency_defect;
    write_file_atomic(dir / "metrics.json", metrics_json.dump(2) + "\n");
  }
  return o;
}

std::string format_report(const PresetOutcome& o, const std::string& timestamp) {
  const PresetSetup& s = o.setup;
  const Preset& preset = find_preset(o.id);
  std::ostringstream r;
  r << "<!-- generated " << (timestamp.empty() ? "(no timestamp)" : timestamp) << " -->\n";
  r << "# " << o.id << " (" << s.system.name << ")\n\n";
  if (s.system.circle) {
    r << "N = " << s.n << " samples on the unit circle, epsilon = " << fmt("%g", s.kernel.epsilon)
      << ".\n\n";
  } else {
    r << "Grid " << s.n1 << " x " << s.n2 << ", epsilon = " << fmt("%.6g", s.kernel.epsilon);
    if (o.scale == Scale::Desk)
      r << " (desk scale: 0.0966 x 150/" << s.n1
        << ", bandwidth scaled with the grid spacing; the reference R^2 was obtained at 150 x 150)";
    r << ".\n\n";
  }
  const ResolutionParams& p = s.params;
  r << "Resolution: J = " << p.J << ", L = " << p.L << ", L1 = " << p.L1 << ", L2 = " << p.L2
    << ", L_D = " << p.L_D << ", eta = " << fmt("%g", p.eta) << ".\n\n";

  r << "| quantity | achieved | reference | pass criterion | status |\n";
  r << "|---|---|---|---|---|\n";
  r << "| R^2 | " << fmt("%.6f", o.r_squared) << " | " << fmt("%.6f", preset.reference_r_squared)
    << " | >= " << fmt("%g", s.threshold) << " | " << (o.passed() ? "pass" : "FAIL") << " |\n";
  r << "| volume | " << fmt("%.5f", o.volume) << " | " << fmt("%.5f", o.exact_volume)
    << " | analytic | |\n";
  r << "| max pointwise error | " << fmt("%.3e", o.max_pointwise_error) << " | | | |\n";
  if (o.mean_tangency_defect)
    r << "| mean tangency defect | " << fmt("%.3e", *o.mean_tangency_defect) << " | | | |\n";
  r << "| Gram rank | " << o.gram_rank << " | | of " << p.L * p.J << " | |\n";
  for (const auto& fp : o.fixed_points) {
    r << "| fixed point from " << fmt("%g", fp.init_angle) << " rad | ";
    if (fp.angle)
      r << fmt("%.4f", *fp.angle) << " rad (|V| = " << fmt("%.1e", fp.residual) << ")";
    else
      r << "failed: " << fp.error;
    r << " | " << fmt("%.4f", fp.target_angle) << " rad | within 0.05 | "
      << (fp.angle && std::abs(*fp.angle - fp.target_angle) < 0.05 ? "pass" : "FAIL") << " |\n";
  }
  if (o.orbit_error.empty()) {
    r << "| orbit error, t <= " << fmt("%g", s.tracking_window) << " | "
      << fmt("%.3e", o.orbit_error_in_window) << " | | | |\n";
    r << "| orbit error, t <= " << fmt("%g", s.t_end) << " | " << fmt("%.3e", o.orbit_max_error)
      << " | | | |\n";
    r << "| orbit distance to manifold | " << fmt("%.3e", o.orbit_max_manifold_defect)
      << " | | | |\n";
  } else {
    r << "| model orbit | " << o.orbit_error << " | | | |\n";
  }

  r << "\nLeading Laplace eigenvalues:";
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(11, o.laplace_eigenvalues.size()); ++k)
    r << " " << fmt("%.4f", o.laplace_eigenvalues[k]);
  r << "\n\nStage times (s): eigendecomposition " << fmt("%.2f", o.seconds_laplacian)
    << ", coefficients " << fmt("%.2f", o.seconds_coefficients) << ", regression "
    << fmt("%.2f", o.seconds_regression) << ".\n";
  if (!o.warnings.empty()) {
    r << "\nWarnings:\n";
    for (const auto& w : o.warnings) r << "- " << w << "\n";
  }
  r << "\nArtifacts: training.csv, model.json, metrics.json, quiver_training.csv"
    << (s.system.circle ? ", quiver_box.csv" : "") << ", true_orbit.csv"
    << (o.orbit_error.empty() ? ", model_orbit.csv, comparison.csv" : "") << ".\n";
  return r.str();
}

}  // namespace secfield
