#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "oracles.hpp"
#include "secfield/datasets.hpp"
#include "secfield/error.hpp"

using namespace secfield;

namespace {

constexpr double kPi = std::numbers::pi;
using testing::kind_of;

}  // namespace

TEST_SUITE("datasets") {

TEST_CASE("uniform rotation at theta = 0") {
  const auto set = generate_circle(CircleSystem::standard(CircleField::UniformRotation), 800);
  CHECK(set.size() == 800);
  CHECK(set.dim_manifold == 1);
  CHECK(set.dim_ambient() == 2);
  CHECK(set.points(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(set.points(0, 1)) < 1e-15);
  CHECK(std::abs(set.arrows(0, 0)) < 1e-15);
  CHECK(set.arrows(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("connecting arc speed at theta = pi") {
  const auto sys = CircleSystem::standard(CircleField::ConnectingArc);
  CHECK(sys.c == 1.5);
  CHECK(sys.pushforward(kPi).norm() == doctest::Approx(0.5).epsilon(1e-14));
  // theta = pi is grid point n / 2 for even n.
  const auto set = generate_circle(sys, 800);
  CHECK(set.arrows.row(400).norm() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("variable speed maximum is e^c") {
  const auto sys = CircleSystem::standard(CircleField::VariableSpeed);
  CHECK(sys.c == 0.5);
  CHECK(sys.pushforward(0.0).norm() == doctest::Approx(1.6487212707001282).epsilon(1e-14));
}

TEST_CASE("circle sizes below three are rejected") {
  CHECK(kind_of([] { generate_circle(CircleSystem{}, 2); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] {
          generate_circle(CircleSystem{CircleField::ConnectingArc, 0.8}, 10);
        }) == ErrorKind::InvalidArgument);
}

TEST_CASE("circle sets lie on the unit circle with tangent arrows") {
  for (auto kind : {CircleField::UniformRotation, CircleField::ConnectingArc,
                    CircleField::VariableSpeed}) {
    const auto set = generate_circle(CircleSystem::standard(kind), 317);
    for (Eigen::Index n = 0; n < set.size(); ++n) {
      CHECK(std::abs(set.points.row(n).norm() - 1.0) < 1e-15);
      CHECK(std::abs(set.points.row(n).dot(set.arrows.row(n))) < 1e-14);
    }
  }
}

TEST_CASE("connecting arc zeros only near arccos(-1/c)") {
  const auto sys = CircleSystem::standard(CircleField::ConnectingArc);
  const int n = 600;
  const auto set = generate_circle(sys, n);
  const double z1 = std::acos(-1.0 / sys.c);
  const double z2 = 2.0 * kPi - z1;
  CHECK(sys.pushforward(z1).norm() < 1e-12);
  CHECK(sys.pushforward(z2).norm() < 1e-12);
  const double spacing = 2.0 * kPi / n;
  for (int k = 0; k < n; ++k) {
    const double theta = spacing * k;
    if (set.arrows.row(k).norm() < 1e-12)
      CHECK(std::min(std::abs(theta - z1), std::abs(theta - z2)) < spacing);
  }
}

TEST_CASE("Stepanoff field vanishes at the origin") {
  const auto sys = TorusSystem::standard(TorusField::Stepanoff);
  CHECK(sys.pushforward(0.0, 0.0).norm() == 0.0);
  const auto set = generate_torus(sys, 10, 10);
  CHECK(set.arrows.row(0).norm() == 0.0);
}

TEST_CASE("rational rotation arrow at the origin matches the embedding derivative") {
  const auto sys = TorusSystem::standard(TorusField::RationalRotation);
  const Eigen::Vector3d v = sys.pushforward(0.0, 0.0);
  const Eigen::Vector3d fd = oracle::torus_pushforward_fd(sys.a, sys.b, 1.0, 1.0, 0.0, 0.0);
  CHECK((v - fd).norm() < 1e-8);
  CHECK(std::abs(v[0]) < 1e-15);
  CHECK(v[1] == doctest::Approx(34.0 / 15.0).epsilon(1e-15));
  CHECK(v[2] == doctest::Approx(3.0 / 5.0).epsilon(1e-15));
}

TEST_CASE("torus pushforward matches finite differences for every field") {
  for (auto kind : {TorusField::RationalRotation, TorusField::IrrationalRotation,
                    TorusField::Stepanoff}) {
    const auto sys = TorusSystem::standard(kind);
    for (double t1 : {0.0, 0.7, 2.9, 5.1})
      for (double t2 : {0.0, 1.3, 3.4, 4.6}) {
        const Eigen::Vector2d h = sys.speeds(t1, t2);
        const Eigen::Vector3d fd = oracle::torus_pushforward_fd(sys.a, sys.b, h[0], h[1], t1, t2);
        CHECK((sys.pushforward(t1, t2) - fd).norm() < 1e-7 * (1.0 + fd.norm()));
      }
  }
}

TEST_CASE("torus sets lie on the surface with tangent arrows") {
  for (auto kind : {TorusField::RationalRotation, TorusField::IrrationalRotation,
                    TorusField::Stepanoff}) {
    const auto sys = TorusSystem::standard(kind);
    const auto set = generate_torus(sys, 23, 17);
    CHECK(set.size() == 23 * 17);
    CHECK(set.dim_manifold == 2);
    const Eigen::MatrixXd normals = torus_normals(sys, 23, 17);
    for (Eigen::Index n = 0; n < set.size(); ++n) {
      const double rho = set.points.row(n).head<2>().norm();
      const double implicit = (rho - sys.a) * (rho - sys.a) + set.points(n, 2) * set.points(n, 2);
      CHECK(std::abs(implicit - sys.b * sys.b) < 1e-14);
      CHECK(std::abs(set.arrows.row(n).dot(normals.row(n))) < 1e-13 * (1.0 + set.arrows.row(n).norm()));
    }
  }
}

TEST_CASE("torus grid row ordering and size checks") {
  const auto sys = TorusSystem::standard(TorusField::RationalRotation);
  const auto set = generate_torus(sys, 6, 5);
  const Eigen::Vector3d y = sys.embed(2.0 * kPi * 2 / 6, 2.0 * kPi * 3 / 5);
  CHECK((set.points.row(2 * 5 + 3).transpose() - y).norm() < 1e-15);
  CHECK(kind_of([&] { generate_torus(sys, 2, 5); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { generate_torus(TorusSystem{TorusField::RationalRotation, 0.5, 0.6}, 5, 5); }) ==
        ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { generate_torus(TorusSystem{TorusField::Stepanoff, 5.0 / 3, 0.6, 0.0}, 5, 5); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("surface distance") {
  const auto sys = TorusSystem::standard(TorusField::RationalRotation);
  CHECK(sys.surface_distance(sys.embed(1.0, 2.0)) < 1e-15);
  const Eigen::Vector3d off = sys.embed(1.0, 2.0) + 0.25 * sys.outward_normal(1.0, 2.0);
  CHECK(sys.surface_distance(off) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(circle_distance(Eigen::Vector2d(0.0, 1.5)) == doctest::Approx(0.5));
}

TEST_CASE("analytic circle eigenpairs") {
  const auto p0 = circle_analytic_basis(0, 1.234);
  CHECK(p0.eigenvalue == 0.0);
  CHECK(p0.value == doctest::Approx(0.3989422804014327).epsilon(1e-15));
  const auto p1 = circle_analytic_basis(1, kPi / 2);
  CHECK(p1.eigenvalue == 1.0);
  CHECK(p1.value == doctest::Approx(0.5641895835477563).epsilon(1e-15));
  const auto p4 = circle_analytic_basis(4, 0.0);
  CHECK(p4.eigenvalue == 4.0);
  CHECK(p4.value == doctest::Approx(0.5641895835477563).epsilon(1e-15));
  const double expected[] = {0, 1, 1, 4, 4, 9, 9, 16, 16, 25, 25};
  for (int j = 0; j < 11; ++j) CHECK(circle_analytic_basis(j, 0.3).eigenvalue == expected[j]);
  CHECK(kind_of([] { circle_analytic_basis(-1, 0.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("analytic circle eigenfunctions are orthonormal under grid quadrature") {
  const int n = 256;
  Eigen::MatrixXd phi(n, n / 4);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n / 4; ++j) phi(k, j) = circle_analytic_basis(j, 2.0 * kPi * k / n).value;
  const Eigen::MatrixXd gram = (2.0 * kPi / n) * phi.transpose() * phi;
  CHECK((gram - Eigen::MatrixXd::Identity(n / 4, n / 4)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("training-set CSV round trip is bit exact") {
  auto set = generate_torus(TorusSystem::standard(TorusField::Stepanoff), 7, 9);
  set.points(3, 1) = 1e-300;
  set.arrows(5, 2) = -0.1 + 1e-17;
  const auto dir = oracle::scratch_dir("csv");
  write_training_set(set, dir / "set.csv");
  const auto back = read_training_set(dir / "set.csv");
  CHECK(back.dim_manifold == 2);
  CHECK(back.points.rows() == set.points.rows());
  CHECK((back.points.array() == set.points.array()).all());
  CHECK((back.arrows.array() == set.arrows.array()).all());
  CHECK(!std::filesystem::exists(dir / "set.csv.tmp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("training-set parse errors carry line numbers") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_training_set(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("") == 1);
  CHECK(line_of("d=2\n1,2,3,4\n") == 1);
  CHECK(line_of("# sec-field v1, d=2, m=1, N=2\n1,0,0,1\n1,0,0\n") == 3);
  CHECK(line_of("# sec-field v1, d=2, m=1, N=1\n1,0,nan,1\n") == 2);
  CHECK(line_of("# sec-field v1, d=2, m=1, N=1\n1,0,inf,1\n") == 2);
  CHECK(line_of("# sec-field v1, d=2, m=1, N=2\n1,0,0,1\n") == 2);
  CHECK(line_of("# sec-field v1, d=2, m=1, N=1\n1,0,0,1,5\n") == 2);
  CHECK(line_of("# sec-field v1, d=2, m=3, N=1\n1,0,0,1\n") == 1);
  const auto ok = parse_training_set("# sec-field v1, d=2, m=1, N=1\n1,0,0,1\n");
  CHECK(ok.size() == 1);
  CHECK(kind_of([] { read_training_set("/nonexistent/secfield/set.csv"); }) == ErrorKind::Io);
}

TEST_CASE("training-set validation") {
  TrainingSet set;
  set.dim_manifold = 1;
  set.points = Eigen::MatrixXd::Zero(3, 2);
  set.arrows = Eigen::MatrixXd::Zero(3, 1);
  CHECK(kind_of([&] { set.validate(); }) == ErrorKind::InvalidArgument);
  set.arrows = Eigen::MatrixXd::Zero(3, 2);
  set.validate();
  set.points(1, 1) = std::nan("");
  CHECK(kind_of([&] { set.validate(); }) == ErrorKind::InvalidArgument);
  set.points(1, 1) = 0.0;
  set.dim_manifold = 3;
  CHECK(kind_of([&] { set.validate(); }) == ErrorKind::InvalidArgument);
}

}  // TEST_SUITE
