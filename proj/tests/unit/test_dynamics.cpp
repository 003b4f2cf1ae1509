#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "oracles.hpp"
#include "secfield/dynamics.hpp"
#include "secfield/io.hpp"

using namespace secfield;
using testing::circle_fit;
using testing::kind_of;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd rotation(const Eigen::VectorXd& y) { return Eigen::Vector2d(-y[1], y[0]); }

double angle_of(const Eigen::VectorXd& y) {
  const double a = std::atan2(y[1], y[0]);
  return a < 0.0 ? a + 2.0 * kPi : a;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("zero field gives a constant orbit") {
  const Eigen::Vector3d y0(0.5, -2.0, 1.0);
  const Orbit o = integrate([](const Eigen::VectorXd& y) { return Eigen::VectorXd::Zero(y.size()); },
                            y0, 0.01, 1.0);
  CHECK(o.times.size() == 101);
  for (Eigen::Index k = 0; k < o.times.size(); ++k) CHECK((o.states.row(k).transpose() - y0).norm() == 0.0);
}

TEST_CASE("time grid") {
  const Orbit o = integrate(rotation, Eigen::Vector2d(1, 0), 1e-3, 20.0);
  CHECK(o.times.size() == 20001);
  CHECK(o.times[0] == 0.0);
  CHECK(o.times[20000] == doctest::Approx(20.0).epsilon(1e-15));
  for (Eigen::Index k = 1; k < o.times.size(); ++k) CHECK(o.times[k] > o.times[k - 1]);
  CHECK(kind_of([] { integrate(rotation, Eigen::Vector2d(1, 0), 0.0, 1.0); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { integrate(rotation, Eigen::Vector2d(1, 0), 0.1, 0.05); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { integrate(rotation, Eigen::Vector2d(NAN, 0), 0.1, 1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("uniform rotation over one period") {
  const Orbit o = integrate(rotation, Eigen::Vector2d(1, 0), 1e-3, 2.0 * kPi);
  // 6283 steps of dt, then one shorter step ending exactly at 2 pi.
  CHECK(o.times.size() == 6285);
  CHECK(o.times[6283] == 6283 * 1e-3);
  CHECK(o.times[6284] == 2.0 * kPi);
  CHECK((o.states.bottomRows(1).transpose() - Eigen::Vector2d(1, 0)).norm() < 1e-6);
  for (Eigen::Index k = 0; k < o.times.size(); k += 500)
    CHECK((o.states.row(k).transpose() - Eigen::Vector2d(std::cos(o.times[k]), std::sin(o.times[k]))).norm() < 1e-10);
}

TEST_CASE("RK4 convergence order") {
  const double c = 0.5;
  const auto f = [c](const Eigen::VectorXd& th) {
    return Eigen::VectorXd::Constant(1, std::exp(c * std::cos(th[0])));
  };
  const Eigen::VectorXd th0 = Eigen::VectorXd::Constant(1, 0.3);
  const double reference = integrate(f, th0, 1e-4, 1.0).states(10000, 0);
  const double e1 = std::abs(integrate(f, th0, 0.1, 1.0).states(10, 0) - reference);
  const double e2 = std::abs(integrate(f, th0, 0.05, 1.0).states(20, 0) - reference);
  const double ratio = e1 / e2;
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("time reversal returns to the start") {
  const auto sys = CircleSystem::standard(CircleField::VariableSpeed);
  const auto f = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return sys.pushforward(angle_of(y));
  };
  const auto g = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return -f(y); };
  const Eigen::Vector2d y0(1.0, 0.0);
  const double dt = 0.05, t_end = 3.0;
  const Orbit fwd = integrate(f, y0, dt, t_end);
  const Orbit exact = true_orbit(sys, 0.0, 1e-4, t_end);
  const double forward_error =
      (fwd.states.bottomRows(1) - exact.states.bottomRows(1)).norm();
  const Orbit back = integrate(g, fwd.states.bottomRows(1).transpose(), dt, t_end);
  const double roundtrip = (back.states.bottomRows(1).transpose() - y0).norm();
  CHECK(forward_error > 0.0);
  CHECK(roundtrip <= 10.0 * forward_error);
}

TEST_CASE("divergence is reported with its time") {
  const auto blowup = [](const Eigen::VectorXd& y) -> Eigen::VectorXd { return y.array().square(); };
  try {
    integrate(blowup, Eigen::VectorXd::Constant(1, 1.0), 1e-3, 2.0);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.kind() == ErrorKind::Divergence);
    CHECK(e.time() > 0.99);
    CHECK(e.time() < 1.01);
  }
}

TEST_CASE("true circle orbits") {
  const auto uniform = CircleSystem::standard(CircleField::UniformRotation);
  const Orbit o = true_orbit(uniform, 0.0, 1e-3, 20.0);
  for (Eigen::Index k = 0; k < o.times.size(); k += 997)
    CHECK((o.states.row(k).transpose() - Eigen::Vector2d(std::cos(o.times[k]), std::sin(o.times[k]))).norm() < 1e-10);

  const auto arc = CircleSystem::standard(CircleField::ConnectingArc);
  const Orbit rest = true_orbit(arc, 2.30, 1e-3, 10.0);
  const Eigen::Vector2d anchor = arc.embed(2.30);
  CHECK((rest.states.rowwise() - anchor.transpose()).rowwise().norm().maxCoeff() < 1e-3);
}

TEST_CASE("true Stepanoff orbit stays on the torus") {
  const auto sys = TorusSystem::standard(TorusField::Stepanoff);
  const Orbit o = true_orbit(sys, Eigen::Vector2d(kPi + 0.3, kPi + 0.5), 1e-3, 10.0);
  CHECK(o.states.cols() == 3);
  CHECK((o.states.row(0).transpose() - sys.embed(kPi + 0.3, kPi + 0.5)).norm() == 0.0);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < o.times.size(); ++k)
    worst = std::max(worst, sys.surface_distance(o.states.row(k).transpose()));
  CHECK(worst < 1e-6);
}

TEST_CASE("orbit comparison") {
  const Orbit a = true_orbit(CircleSystem{}, 0.0, 1e-2, 5.0);
  const auto same = compare_orbits(a, a);
  CHECK(same.error_series.cwiseAbs().maxCoeff() == 0.0);
  CHECK(same.max_error == 0.0);
  CHECK(same.manifold_defect.size() == 0);

  const Orbit b = integrate(rotation, Eigen::Vector2d(1.1, 0.0), 1e-2, 5.0);
  const auto cmp = compare_orbits(a, b, [](const Eigen::VectorXd& y) {
    return circle_distance(y.head<2>());
  });
  CHECK(cmp.error_series[0] == doctest::Approx(0.1));
  CHECK(cmp.manifold_defect.size() == a.times.size());
  CHECK(cmp.manifold_defect.maxCoeff() == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(cmp.max_error_until(1.0) <= cmp.max_error);

  const Orbit coarse = true_orbit(CircleSystem{}, 0.0, 2e-2, 5.0);
  CHECK(kind_of([&] { compare_orbits(a, coarse); }) == ErrorKind::InvalidArgument);
  Orbit shifted = a;
  shifted.times.array() += 1e-3;
  CHECK(kind_of([&] { compare_orbits(a, shifted); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("reconstructed uniform rotation orbit") {
  const auto& fitted = circle_fit(CircleField::UniformRotation);
  const auto f = [&](const Eigen::VectorXd& y) { return fitted.field.evaluate(y); };
  const Orbit model = integrate(f, Eigen::Vector2d(1, 0), 1e-3, 20.0);
  const Eigen::VectorXd radius = model.states.rowwise().norm();
  CHECK(radius.minCoeff() >= 0.95);
  CHECK(radius.maxCoeff() <= 1.05);

  // The diffusion-maps eigenvalues carry a relative bias of eps^2 / 4 from
  // the chord metric of the embedded circle, and the reconstructed speed
  // inherits it. The phase error after time t is then (eps^2 / 4) t.
  const double bias = 0.2 * 0.2 / 4.0;
  CHECK(fitted.basis->laplace_eigenvalues[1] == doctest::Approx(1.0 + bias).epsilon(2e-3));
  const Orbit truth = true_orbit(CircleSystem{}, 0.0, 1e-3, 20.0);
  const auto cmp = compare_orbits(truth, model);
  for (double t : {2.0 * kPi, 20.0}) {
    const auto k = static_cast<Eigen::Index>(std::lround(t / 1e-3));
    const double predicted = 2.0 * std::sin(bias * cmp.times[k] / 2.0);
    CHECK(cmp.error_series[k] == doctest::Approx(predicted).epsilon(0.05));
  }

  // Short-time growth is bounded by a linear envelope.
  double slope = 0.0;
  for (Eigen::Index k = 1; k <= 1000; ++k) slope = std::max(slope, cmp.error_series[k] / cmp.times[k]);
  CHECK(std::isfinite(slope));
  CHECK(slope < 2.0 * bias);
}

TEST_CASE("Newton fixed points of the connecting arc") {
  const double z1 = std::acos(-2.0 / 3.0);
  const double z2 = 2.0 * kPi - z1;
  CHECK(z1 == doctest::Approx(2.300523983021863).epsilon(1e-15));
  CHECK(z2 == doctest::Approx(3.982661324157723).epsilon(1e-15));

  const auto arc = CircleSystem::standard(CircleField::ConnectingArc);
  const auto exact = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    // Extension of the arc field to the plane, attracting onto the circle.
    const Eigen::Vector2d u(-y[1], y[0]);
    return (1.0 + arc.c * y[0] / y.norm()) * u + (1.0 - y.norm()) * y;
  };
  const auto r = newton_fixed_point(exact, arc.embed(2.2), 1e-12, 50);
  CHECK(angle_of(r.point) == doctest::Approx(z1).epsilon(1e-8));
  CHECK(r.residual < 1e-12);

  const auto& fitted = circle_fit(CircleField::ConnectingArc);
  for (auto [init, target] : {std::pair{2.2, z1}, std::pair{4.1, z2}}) {
    const auto res = newton_fixed_point(fitted.field, arc.embed(init), 1e-10, 50);
    CHECK(std::abs(angle_of(res.point) - target) < 0.05);
    CHECK(fitted.field.evaluate(res.point).norm() < 1e-8);
    CHECK(res.iterations <= 50);
  }
}

TEST_CASE("Newton failure modes") {
  const auto flat = [](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return Eigen::Vector2d(y[0] + y[1] + 1.0, y[0] + y[1] - 1.0);
  };
  CHECK(kind_of([&] { newton_fixed_point(flat, Eigen::Vector2d(0, 0), 1e-8, 10); }) ==
        ErrorKind::SingularJacobian);

  const auto rootless = [](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return Eigen::Vector2d(std::exp(y[0]), y[1]);
  };
  try {
    newton_fixed_point(rootless, Eigen::Vector2d(1.0, 0.5), 1e-8, 5);
    FAIL("expected non-convergence");
  } catch (const NonConvergenceError& e) {
    CHECK(e.kind() == ErrorKind::NonConvergence);
    CHECK(e.best_iterate().size() == 2);
    CHECK(e.residual() == doctest::Approx(rootless(e.best_iterate()).norm()));
    CHECK(e.residual() < std::exp(1.0));
  }
  CHECK(kind_of([&] { newton_fixed_point(flat, Eigen::Vector2d(0, 0), 0.0, 10); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("orbit CSV round trip is bit exact") {
  const Orbit o = true_orbit(TorusSystem::standard(TorusField::Stepanoff),
                             Eigen::Vector2d(kPi + 0.3, kPi + 0.5), 1e-3, 0.5);
  const auto dir = oracle::scratch_dir("orbit");
  write_orbit_csv(dir / "o.csv", o);
  CHECK(read_file(dir / "o.csv").rfind("t,y_1,y_2,y_3\n", 0) == 0);
  const Orbit back = read_orbit_csv(dir / "o.csv");
  CHECK((back.times.array() == o.times.array()).all());
  CHECK((back.states.array() == o.states.array()).all());

  const auto cmp = compare_orbits(o, o, [](const Eigen::VectorXd&) { return 0.0; });
  write_comparison_csv(dir / "c.csv", o, cmp);
  const std::string text = read_file(dir / "c.csv");
  CHECK(text.rfind("t,y_1,y_2,y_3,err,manifold_defect\n", 0) == 0);
  CHECK(kind_of([&] { read_orbit_csv(dir / "missing.csv"); }) == ErrorKind::Io);
  write_file_atomic(dir / "bad.csv", "t,y_1\n0,1\n0.1\n");
  CHECK(kind_of([&] { read_orbit_csv(dir / "bad.csv"); }) == ErrorKind::Parse);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
