#include "secfield/dynamics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/SVD>

#include "secfield/error.hpp"
#include "secfield/io.hpp"

namespace secfield {

namespace {

// Sample times k dt, plus t_end itself when it is not on the grid.
Eigen::VectorXd time_grid(double dt, double t_end) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "dt must be > 0");
  if (!(t_end >= dt) || !std::isfinite(t_end))
    throw Error(ErrorKind::InvalidArgument, "t_end must be >= dt");
  const auto steps = static_cast<Eigen::Index>(std::floor(t_end / dt + 1e-9));
  const bool partial = t_end - static_cast<double>(steps) * dt > 1e-9 * dt;
  Eigen::VectorXd times(steps + 1 + (partial ? 1 : 0));
  for (Eigen::Index k = 0; k <= steps; ++k) times[k] = static_cast<double>(k) * dt;
  if (partial) times[steps + 1] = t_end;
  return times;
}

// Step from times[k - 1] to times[k]: dt on the grid, the remainder at the end.
double step_size(const Eigen::VectorXd& times, Eigen::Index k, double dt) {
  return k + 1 == times.size() && times[k] - times[k - 1] < dt * (1.0 - 1e-9)
             ? times[k] - times[k - 1]
             : dt;
}

template <typename Vec, typename F>
Vec rk4_step(const F& f, const Vec& y, double dt) {
  const Vec k1 = f(y);
  const Vec k2 = f(y + 0.5 * dt * k1);
  const Vec k3 = f(y + 0.5 * dt * k2);
  const Vec k4 = f(y + dt * k3);
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

}  // namespace

Orbit integrate(const VectorFieldFn& field, const Eigen::VectorXd& y0, double dt, double t_end) {
  Orbit orbit;
  orbit.times = time_grid(dt, t_end);
  if (y0.size() < 1 || !y0.allFinite())
    throw Error(ErrorKind::InvalidArgument, "initial condition must be finite");
  orbit.states.resize(orbit.times.size(), y0.size());
  Eigen::VectorXd y = y0;
  orbit.states.row(0) = y.transpose();
  for (Eigen::Index k = 1; k < orbit.times.size(); ++k) {
    y = rk4_step<Eigen::VectorXd>(field, y, step_size(orbit.times, k, dt));
    const double t = orbit.times[k];
    if (!y.allFinite() || y.norm() > kDivergenceNorm)
      throw DivergenceError(t, "orbit diverged at t = " + std::to_string(t));
    orbit.states.row(k) = y.transpose();
  }
  return orbit;
}

Orbit true_orbit(const CircleSystem& system, double theta0, double dt, double t_end) {
  system.validate();
  const Eigen::VectorXd times = time_grid(dt, t_end);
  const auto f = [&](const Eigen::Matrix<double, 1, 1>& th) {
    return Eigen::Matrix<double, 1, 1>(system.speed(th[0]));
  };
  Orbit orbit;
  orbit.times = times;
  orbit.states.resize(times.size(), 2);
  Eigen::Matrix<double, 1, 1> theta(theta0);
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    if (k > 0) theta = rk4_step(f, theta, step_size(times, k, dt));
    orbit.states.row(k) = system.embed(theta[0]).transpose();
  }
  return orbit;
}

Orbit true_orbit(const TorusSystem& system, const Eigen::Vector2d& theta0, double dt,
                 double t_end) {
  system.validate();
  const Eigen::VectorXd times = time_grid(dt, t_end);
  const auto f = [&](const Eigen::Vector2d& th) { return system.speeds(th[0], th[1]); };
  Orbit orbit;
  orbit.times = times;
  orbit.states.resize(times.size(), 3);
  Eigen::Vector2d theta = theta0;
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    if (k > 0) theta = rk4_step(f, theta, step_size(times, k, dt));
    orbit.states.row(k) = system.embed(theta[0], theta[1]).transpose();
  }
  return orbit;
}

double OrbitComparison::max_error_until(double t_star) const {
  double m = 0.0;
  for (Eigen::Index k = 0; k < times.size() && times[k] <= t_star + 1e-12; ++k)
    m = std::max(m, error_series[k]);
  return m;
}

OrbitComparison compare_orbits(const Orbit& a, const Orbit& b,
                               const ManifoldDistanceFn& manifold_distance) {
  if (a.times.size() != b.times.size() || a.states.cols() != b.states.cols() ||
      a.states.rows() != b.states.rows())
    throw Error(ErrorKind::InvalidArgument, "orbits have different shapes");
  for (Eigen::Index k = 0; k < a.times.size(); ++k)
    if (std::abs(a.times[k] - b.times[k]) > 1e-9 * std::max(1.0, std::abs(a.times[k])))
      throw Error(ErrorKind::InvalidArgument, "orbits are sampled on different time grids");
  OrbitComparison c;
  c.times = a.times;
  c.error_series = (a.states - b.states).rowwise().norm();
  c.max_error = c.error_series.size() ? c.error_series.maxCoeff() : 0.0;
  if (manifold_distance) {
    c.manifold_defect.resize(b.states.rows());
    for (Eigen::Index k = 0; k < b.states.rows(); ++k)
      c.manifold_defect[k] = manifold_distance(b.states.row(k).transpose());
  }
  return c;
}

NewtonResult newton_fixed_point(const VectorFieldFn& field, const Eigen::VectorXd& y_init,
                                double tol, int max_iter) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
  if (max_iter < 0) throw Error(ErrorKind::InvalidArgument, "max_iter must be >= 0");
  if (!y_init.allFinite()) throw Error(ErrorKind::InvalidArgument, "initial guess must be finite");

  const Eigen::Index d = y_init.size();
  Eigen::VectorXd y = y_init;
  Eigen::VectorXd value = field(y);
  Eigen::VectorXd best = y;
  double best_res = value.norm();
  for (int iter = 0;; ++iter) {
    const double res = value.norm();
    if (res < best_res) {
      best_res = res;
      best = y;
    }
    if (res < tol) return {y, res, iter};
    if (iter >= max_iter)
      throw NonConvergenceError(best, best_res,
                                "Newton did not converge in " + std::to_string(max_iter) +
                                    " iterations (best residual " + std::to_string(best_res) + ")");

    const double h = 1e-5 * std::max(1.0, y.norm());
    Eigen::MatrixXd jac(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      Eigen::VectorXd yp = y, ym = y;
      yp[k] += h;
      ym[k] -= h;
      jac.col(k) = (field(yp) - field(ym)) / (2.0 * h);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cond = sv[d - 1] > 0.0 ? sv[0] / sv[d - 1] : INFINITY;
    if (!(cond <= kMaxJacobianCondition))
      throw Error(ErrorKind::SingularJacobian,
                  "Jacobian is singular (condition number " + std::to_string(cond) + ")");
    y -= svd.solve(value);
    if (!y.allFinite()) throw Error(ErrorKind::Numeric, "Newton iterate became non-finite");
    value = field(y);
  }
}

NewtonResult newton_fixed_point(const ReconstructedField& field, const Eigen::VectorXd& y_init,
                                double tol, int max_iter) {
  return newton_fixed_point([&](const Eigen::VectorXd& y) { return field.evaluate(y); }, y_init,
                            tol, max_iter);
}

void write_orbit_csv(const std::filesystem::path& path, const Orbit& orbit) {
  std::string out = "t";
  for (Eigen::Index k = 0; k < orbit.states.cols(); ++k) out += ",y_" + std::to_string(k + 1);
  out += '\n';
  for (Eigen::Index r = 0; r < orbit.states.rows(); ++r) {
    append_double(out, orbit.times[r]);
    for (Eigen::Index k = 0; k < orbit.states.cols(); ++k) {
      out += ',';
      append_double(out, orbit.states(r, k));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

Orbit read_orbit_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(f, line)) throw ParseError(1, "empty orbit file");
  if (line.rfind("t,", 0) != 0) throw ParseError(1, "orbit header must start with 't,'");
  Eigen::Index cols = 0;
  {
    std::size_t pos = 0;
    while ((pos = line.find(",y_", pos)) != std::string::npos) {
      ++cols;
      ++pos;
    }
  }
  if (cols < 1) throw ParseError(1, "orbit header has no state columns");
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    Eigen::Index count = 0;
    while (p < end) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || (count <= cols && !std::isfinite(v)))
        throw ParseError(line_no, "bad numeric value");
      values.push_back(v);
      ++count;
      p = next;
      if (p < end) {
        if (*p != ',') throw ParseError(line_no, "unexpected character");
        ++p;
      }
    }
    if (count < cols + 1) throw ParseError(line_no, "too few columns");
    // Extra columns (err, manifold_defect) are ignored.
    values.resize(values.size() - static_cast<std::size_t>(count - cols - 1));
    ++rows;
  }
  Orbit orbit;
  orbit.times.resize(rows);
  orbit.states.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r * (cols + 1));
    orbit.times[r] = values[base];
    for (Eigen::Index k = 0; k < cols; ++k) orbit.states(r, k) = values[base + 1 + k];
  }
  return orbit;
}

void write_comparison_csv(const std::filesystem::path& path, const Orbit& b,
                          const OrbitComparison& comparison) {
  const bool has_defect = comparison.manifold_defect.size() == b.states.rows();
  std::string out = "t";
  for (Eigen::Index k = 0; k < b.states.cols(); ++k) out += ",y_" + std::to_string(k + 1);
  out += ",err,manifold_defect\n";
  for (Eigen::Index r = 0; r < b.states.rows(); ++r) {
    append_double(out, b.times[r]);
    for (Eigen::Index k = 0; k < b.states.cols(); ++k) {
      out += ',';
      append_double(out, b.states(r, k));
    }
    out += ',';
    append_double(out, comparison.error_series[r]);
    out += ',';
    if (has_defect)
      append_double(out, comparison.manifold_defect[r]);
    else
      out += "nan";
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace secfield
