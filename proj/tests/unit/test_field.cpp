#include <doctest.h>

#include <cmath>
#include <numbers>
#include <thread>

#include "helpers.hpp"
#include "oracles.hpp"
#include "secfield/field.hpp"
#include "secfield/io.hpp"
#include "secfield/pipeline.hpp"

using namespace secfield;
using testing::circle_fit;
using testing::circle_set;
using testing::kind_of;

namespace {

constexpr double kPi = std::numbers::pi;

constexpr CircleField kCircleFields[] = {CircleField::UniformRotation, CircleField::ConnectingArc,
                                         CircleField::VariableSpeed};

}  // namespace

TEST_SUITE("field") {

TEST_CASE("zero and scaled frame coefficients") {
  const auto& fitted = circle_fit(CircleField::UniformRotation);
  FrameSolution zero = fitted.solution;
  zero.b.setZero();
  const auto null_field = assemble_field(fitted.basis, fitted.tensors, zero);
  CHECK(null_field.eval_matrix().cwiseAbs().maxCoeff() == 0.0);
  CHECK(null_field.evaluate(Eigen::Vector2d(0.3, 0.9)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(null_field.evaluate(Eigen::Vector2d(-4.0, 4.5)).cwiseAbs().maxCoeff() == 0.0);

  FrameSolution scaled = fitted.solution;
  scaled.b *= 2.5;
  const auto big = assemble_field(fitted.basis, fitted.tensors, scaled);
  for (double t : {0.0, 1.0, 2.5, 4.0}) {
    const Eigen::Vector2d y(1.1 * std::cos(t), 1.1 * std::sin(t));
    CHECK((big.evaluate(y) - 2.5 * fitted.field.evaluate(y)).norm() < 1e-12);
  }
}

TEST_CASE("assembly rejects inconsistent inputs") {
  const auto& fitted = circle_fit(CircleField::UniformRotation);
  FrameSolution other = fitted.solution;
  other.params.eta = 0.5;
  CHECK(kind_of([&] { assemble_field(fitted.basis, fitted.tensors, other); }) == ErrorKind::Config);
  FrameSolution shape = fitted.solution;
  shape.b = Eigen::MatrixXd::Zero(3, 3);
  CHECK(kind_of([&] { assemble_field(fitted.basis, fitted.tensors, shape); }) == ErrorKind::Config);
  CHECK(kind_of([&] {
          ReconstructedField(fitted.basis, Eigen::MatrixXd::Zero(2, 41), ResolutionParams{10, 20, 20, 41, 40, 0.01});
        }) == ErrorKind::Config);
}

TEST_CASE("evaluation agrees with the explicit spectral sum") {
  const auto& fitted = circle_fit(CircleField::ConnectingArc);
  const auto& field = fitted.field;
  const auto& basis = *fitted.basis;
  for (Eigen::Index n : {0, 123, 456, 799}) {
    const Eigen::VectorXd y = basis.points.row(n).transpose();
    const Eigen::VectorXd stored =
        field.eval_matrix() * basis.eigenvectors.row(n).head(40).transpose();
    CHECK((field.evaluate(y) - stored).norm() < 1e-6);
    CHECK((field.evaluate(y) - field.evaluate_spectral(y)).norm() < 1e-10);
  }
  for (const Eigen::Vector2d y : {Eigen::Vector2d(0.2, 0.1), Eigen::Vector2d(-1.7, 0.4)})
    CHECK((field.evaluate(y) - field.evaluate_spectral(y)).norm() < 1e-10);
}

TEST_CASE("circle reconstruction quality") {
  const double thresholds[] = {0.999, 0.995, 0.999};
  for (int s = 0; s < 3; ++s) {
    const auto kind = kCircleFields[s];
    const auto& fitted = circle_fit(kind);
    const auto& set = circle_set(kind);
    CHECK(fitted.metrics.r_squared >= thresholds[s]);
    CHECK(fitted.metrics.r_squared <= 1.0);
    const auto with_normals = compute_metrics(fitted.field, set, circle_normals(set.points));
    REQUIRE(with_normals.mean_tangency_defect.has_value());
    CHECK(*with_normals.mean_tangency_defect < 0.03);
    CHECK(with_normals.r_squared == fitted.metrics.r_squared);
  }
}

TEST_CASE("uniform rotation is reproduced at every sample") {
  const auto& fitted = circle_fit(CircleField::UniformRotation);
  const auto& set = circle_set(CircleField::UniformRotation);
  const Eigen::MatrixXd pred = fitted.field.evaluate_many(set.points);
  const Eigen::VectorXd rel =
      (pred - set.arrows).rowwise().norm().cwiseQuotient(set.arrows.rowwise().norm());
  CHECK(rel.maxCoeff() < 0.03);
}

TEST_CASE("off-manifold arrows keep the angular direction") {
  const auto& fitted = circle_fit(CircleField::UniformRotation);
  const auto sys = CircleSystem::standard(CircleField::UniformRotation);
  double worst = 0.0;
  for (int k = 0; k < 72; ++k) {
    const double t = 2.0 * kPi * (k + 0.5) / 72;
    const Eigen::VectorXd v = fitted.field.evaluate(Eigen::Vector2d(1.5 * std::cos(t), 1.5 * std::sin(t)));
    REQUIRE(v.allFinite());
    const Eigen::Vector2d ref = sys.pushforward(t);
    const double cosang = v.dot(ref) / (v.norm() * ref.norm());
    worst = std::max(worst, std::acos(std::clamp(cosang, -1.0, 1.0)));
  }
  CHECK(worst < 15.0 * kPi / 180.0);
}

TEST_CASE("box evaluation stays finite") {
  const auto& fitted = circle_fit(CircleField::ConnectingArc);
  const Eigen::MatrixXd grid =
      box_grid(Eigen::Vector2d(-5, -5), Eigen::Vector2d(5, 5), Eigen::Vector2i(21, 21));
  CHECK(grid.rows() == 441);
  CHECK(fitted.field.evaluate_many(grid).allFinite());
  CHECK(kind_of([&] { fitted.field.evaluate(Eigen::Vector2d(1e5, 0.0)); }) == ErrorKind::OutOfRange);
}

TEST_CASE("evaluation is locally Lipschitz") {
  const auto& fitted = circle_fit(CircleField::VariableSpeed);
  const double h = 1e-6;
  for (double r : {0.5, 1.0, 2.0})
    for (double t : {0.1, 1.7, 3.3, 5.0}) {
      const Eigen::Vector2d y(r * std::cos(t), r * std::sin(t));
      const Eigen::Vector2d dir(std::cos(0.3 + t), std::sin(0.3 + t));
      const double diff = (fitted.field.evaluate(y + h * dir) - fitted.field.evaluate(y)).norm();
      const double K = diff / h;
      CHECK(std::isfinite(K));
      CHECK(K < 1e3);
    }
}

TEST_CASE("metrics for perfect and null predictions") {
  const auto& set = circle_set(CircleField::ConnectingArc);
  const auto perfect = compute_metrics(set.arrows, set);
  CHECK(perfect.r_squared == 1.0);
  CHECK(perfect.max_pointwise_error == 0.0);
  CHECK(!perfect.mean_tangency_defect.has_value());
  const auto null = compute_metrics(Eigen::MatrixXd::Zero(800, 2), set);
  CHECK(null.r_squared == 0.0);
  CHECK(null.max_pointwise_error == doctest::Approx(set.arrows.rowwise().norm().maxCoeff()));
  TrainingSet still = set;
  still.arrows.setZero();
  CHECK(kind_of([&] { compute_metrics(still.arrows, still); }) == ErrorKind::UndefinedMetric);
  CHECK(kind_of([&] { compute_metrics(Eigen::MatrixXd::Zero(3, 2), set); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("concurrent evaluation matches serial evaluation") {
  const auto& fitted = circle_fit(CircleField::VariableSpeed);
  const Eigen::MatrixXd grid =
      box_grid(Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2), Eigen::Vector2i(30, 30));
  const Eigen::MatrixXd serial = fitted.field.evaluate_many(grid);
  Eigen::MatrixXd parallel(grid.rows(), 2);
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w)
    workers.emplace_back([&, w] {
      for (Eigen::Index n = w; n < grid.rows(); n += 4)
        parallel.row(n) = fitted.field.evaluate(grid.row(n).transpose()).transpose();
    });
  for (auto& t : workers) t.join();
  CHECK((serial.array() == parallel.array()).all());
}

TEST_CASE("box grid ordering") {
  const Eigen::MatrixXd g =
      box_grid(Eigen::Vector2d(0, 10), Eigen::Vector2d(1, 12), Eigen::Vector2i(2, 3));
  Eigen::MatrixXd expected(6, 2);
  expected << 0, 10, 0, 11, 0, 12, 1, 10, 1, 11, 1, 12;
  CHECK((g.array() == expected.array()).all());
  CHECK(box_grid(Eigen::Vector2d(2, 3), Eigen::Vector2d(5, 3), Eigen::Vector2i(1, 1)).rows() == 1);
  CHECK(kind_of([] { box_grid(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, -1), Eigen::Vector2i(2, 2)); }) ==
        ErrorKind::InvalidArgument);
  CHECK(kind_of([] { box_grid(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), Eigen::Vector2i(0, 2)); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("quiver CSV layout") {
  Eigen::MatrixXd pts(2, 2), pred(2, 2), truth(2, 2);
  pts << 1, 0, 0, 1;
  pred << 0, 1, -1, 0.5;
  truth << 0, 1, -1, 0;
  const auto dir = oracle::scratch_dir("quiver");
  write_quiver_csv(dir / "q.csv", pts, pred, truth);
  CHECK(read_file(dir / "q.csv") ==
        "y_1,y_2,vhat_1,vhat_2,vtrue_1,vtrue_2\n1,0,0,1,0,1\n0,1,-1,0.5,-1,0\n");
  write_quiver_csv(dir / "p.csv", pts, pred);
  CHECK(read_file(dir / "p.csv") == "y_1,y_2,vhat_1,vhat_2\n1,0,0,1\n0,1,-1,0.5\n");
  CHECK(kind_of([&] { write_quiver_csv(dir / "bad.csv", pts, Eigen::MatrixXd::Zero(1, 2)); }) ==
        ErrorKind::InvalidArgument);
  CHECK(!std::filesystem::exists(dir / "bad.csv"));
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
