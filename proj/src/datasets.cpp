#include "secfield/datasets.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

#include "secfield/error.hpp"
#include "secfield/io.hpp"

namespace secfield {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

}  // namespace

void TrainingSet::validate() const {
  require(points.rows() >= 1, "training set needs at least one sample");
  require(points.rows() == arrows.rows() && points.cols() == arrows.cols(),
          "points and arrows must have identical shapes");
  require(points.cols() >= 1, "ambient dimension must be positive");
  require(dim_manifold >= 1 && dim_manifold <= points.cols(),
          "manifold dimension must satisfy 1 <= m <= d");
  require(points.allFinite() && arrows.allFinite(),
          "training set contains non-finite entries");
}

CircleSystem CircleSystem::standard(CircleField kind) {
  switch (kind) {
    case CircleField::UniformRotation: return {kind, 0.0};
    case CircleField::ConnectingArc: return {kind, 1.5};
    case CircleField::VariableSpeed: return {kind, 0.5};
  }
  return {};
}

void CircleSystem::validate() const {
  require(std::isfinite(c), "circle parameter c must be finite");
  if (kind == CircleField::ConnectingArc)
    require(c > 1.0, "connecting arc requires c > 1");
}

double CircleSystem::speed(double theta) const {
  switch (kind) {
    case CircleField::UniformRotation: return 1.0;
    case CircleField::ConnectingArc: return 1.0 + c * std::cos(theta);
    case CircleField::VariableSpeed: return std::exp(c * std::cos(theta));
  }
  return 0.0;
}

Eigen::Vector2d CircleSystem::embed(double theta) const {
  return {std::cos(theta), std::sin(theta)};
}

Eigen::Vector2d CircleSystem::pushforward(double theta) const {
  return speed(theta) * Eigen::Vector2d(-std::sin(theta), std::cos(theta));
}

TorusSystem TorusSystem::standard(TorusField kind) {
  TorusSystem s;
  s.kind = kind;
  return s;
}

void TorusSystem::validate() const {
  require(std::isfinite(a) && std::isfinite(b) && std::isfinite(alpha),
          "torus parameters must be finite");
  require(a > b && b > 0.0, "torus radii must satisfy a > b > 0");
  if (kind != TorusField::RationalRotation)
    require(alpha != 0.0, "alpha must be nonzero");
}

Eigen::Vector2d TorusSystem::speeds(double theta1, double theta2) const {
  switch (kind) {
    case TorusField::RationalRotation: return {1.0, 1.0};
    case TorusField::IrrationalRotation: return {1.0, alpha};
    case TorusField::Stepanoff: {
      const double h2 = alpha * (1.0 - std::cos(theta1 - theta2));
      const double h1 = h2 + (1.0 - alpha) * (1.0 - std::cos(theta2));
      return {h1, h2};
    }
  }
  return {0.0, 0.0};
}

Eigen::Vector3d TorusSystem::embed(double theta1, double theta2) const {
  const double rho = a + b * std::cos(theta2);
  return {rho * std::cos(theta1), rho * std::sin(theta1), b * std::sin(theta2)};
}

Eigen::Vector3d TorusSystem::pushforward(double theta1, double theta2) const {
  const Eigen::Vector2d h = speeds(theta1, theta2);
  const double rho = a + b * std::cos(theta2);
  const double c1 = std::cos(theta1), s1 = std::sin(theta1);
  const double c2 = std::cos(theta2), s2 = std::sin(theta2);
  const Eigen::Vector3d d_theta1(-rho * s1, rho * c1, 0.0);
  const Eigen::Vector3d d_theta2(-b * s2 * c1, -b * s2 * s1, b * c2);
  return h[0] * d_theta1 + h[1] * d_theta2;
}

Eigen::Vector3d TorusSystem::outward_normal(double theta1, double theta2) const {
  return {std::cos(theta2) * std::cos(theta1), std::cos(theta2) * std::sin(theta1),
          std::sin(theta2)};
}

double TorusSystem::surface_distance(const Eigen::Vector3d& y) const {
  const double rho = std::hypot(y[0], y[1]);
  return std::abs(std::hypot(rho - a, y[2]) - b);
}

TrainingSet generate_circle(const CircleSystem& system, int n) {
  if (n < 3) throw Error(ErrorKind::InvalidArgument, "circle needs n >= 3");
  system.validate();
  TrainingSet set;
  set.dim_manifold = 1;
  set.points.resize(n, 2);
  set.arrows.resize(n, 2);
  for (int k = 0; k < n; ++k) {
    const double theta = kTwoPi * k / n;
    set.points.row(k) = system.embed(theta).transpose();
    set.arrows.row(k) = system.pushforward(theta).transpose();
  }
  return set;
}

TrainingSet generate_torus(const TorusSystem& system, int n1, int n2) {
  if (n1 < 3 || n2 < 3)
    throw Error(ErrorKind::InvalidArgument, "torus needs n1, n2 >= 3");
  system.validate();
  TrainingSet set;
  set.dim_manifold = 2;
  const Eigen::Index n = static_cast<Eigen::Index>(n1) * n2;
  set.points.resize(n, 3);
  set.arrows.resize(n, 3);
  for (int i = 0; i < n1; ++i) {
    const double t1 = kTwoPi * i / n1;
    for (int j = 0; j < n2; ++j) {
      const double t2 = kTwoPi * j / n2;
      const Eigen::Index row = static_cast<Eigen::Index>(i) * n2 + j;
      set.points.row(row) = system.embed(t1, t2).transpose();
      set.arrows.row(row) = system.pushforward(t1, t2).transpose();
    }
  }
  return set;
}

Eigen::MatrixXd torus_normals(const TorusSystem& system, int n1, int n2) {
  Eigen::MatrixXd normals(static_cast<Eigen::Index>(n1) * n2, 3);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      normals.row(static_cast<Eigen::Index>(i) * n2 + j) =
          system.outward_normal(kTwoPi * i / n1, kTwoPi * j / n2).transpose();
  return normals;
}

Eigen::MatrixXd circle_normals(const Eigen::MatrixXd& points) {
  return points.rowwise().normalized();
}

AnalyticEigenpair circle_analytic_basis(int j, double theta) {
  if (j < 0) throw Error(ErrorKind::InvalidArgument, "eigenfunction index must be >= 0");
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  if (j == 0) return {0.0, 1.0 / std::sqrt(kTwoPi)};
  if (j % 2 == 1) {
    const double freq = (j + 1) / 2;
    return {freq * freq, std::sin(freq * theta) * inv_sqrt_pi};
  }
  const double freq = j / 2;
  return {freq * freq, std::cos(freq * theta) * inv_sqrt_pi};
}

double circle_distance(const Eigen::Vector2d& y) { return std::abs(y.norm() - 1.0); }

// ---------------------------------------------------------------------------
// CSV format

namespace {

void append_double(std::string& out, double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, end);
}

}  // namespace

std::string format_training_set(const TrainingSet& set) {
  set.validate();
  std::string out = "# sec-field v1, d=" + std::to_string(set.dim_ambient()) +
                    ", m=" + std::to_string(set.dim_manifold) +
                    ", N=" + std::to_string(set.size()) + "\n";
  out.reserve(out.size() + static_cast<std::size_t>(set.size()) * set.dim_ambient() * 48);
  for (Eigen::Index n = 0; n < set.size(); ++n) {
    for (int k = 0; k < set.dim_ambient(); ++k) {
      if (k > 0) out += ',';
      append_double(out, set.points(n, k));
    }
    for (int k = 0; k < set.dim_ambient(); ++k) {
      out += ',';
      append_double(out, set.arrows(n, k));
    }
    out += '\n';
  }
  return out;
}

TrainingSet parse_training_set(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty training-set file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  static const std::regex header_re(
      R"(^#\s*sec-field\s+v1\s*,\s*d\s*=\s*(\d+)\s*,\s*m\s*=\s*(\d+)\s*,\s*N\s*=\s*(\d+)\s*$)");
  std::smatch match;
  if (!std::regex_match(line, match, header_re))
    throw ParseError(line_no, "malformed header, expected '# sec-field v1, d=<d>, m=<m>, N=<N>'");
  const long d = std::stol(match[1]);
  const long m = std::stol(match[2]);
  const long n = std::stol(match[3]);
  if (d < 1) throw ParseError(line_no, "d must be positive");
  if (m < 1 || m > d) throw ParseError(line_no, "m must satisfy 1 <= m <= d");
  if (n < 1) throw ParseError(line_no, "N must be at least 1");

  TrainingSet set;
  set.dim_manifold = static_cast<int>(m);
  set.points.resize(n, d);
  set.arrows.resize(n, d);

  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row >= n) throw ParseError(line_no, "more data rows than declared N");
    const char* p = line.data();
    const char* end = line.data() + line.size();
    long col = 0;
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double value = 0.0;
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc())
        throw ParseError(line_no, "expected a decimal value in column " + std::to_string(col + 1));
      if (!std::isfinite(value))
        throw ParseError(line_no, "non-finite value in column " + std::to_string(col + 1));
      if (col >= 2 * d)
        throw ParseError(line_no, "row has more than 2d = " + std::to_string(2 * d) + " columns");
      if (col < d)
        set.points(row, col) = value;
      else
        set.arrows(row, col - d) = value;
      ++col;
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      if (*p != ',') throw ParseError(line_no, "unexpected character in row");
      ++p;
    }
    if (col != 2 * d)
      throw ParseError(line_no, "row has " + std::to_string(col) + " columns, expected " +
                                    std::to_string(2 * d));
    ++row;
  }
  if (row != n)
    throw ParseError(line_no, "declared N=" + std::to_string(n) + " but found " +
                                  std::to_string(row) + " rows");
  return set;
}

void write_training_set(const TrainingSet& set, const std::filesystem::path& path) {
  write_file_atomic(path, format_training_set(set));
}

TrainingSet read_training_set(const std::filesystem::path& path) {
  return parse_training_set(read_file(path));
}

}  // namespace secfield
