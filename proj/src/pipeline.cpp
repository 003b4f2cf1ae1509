#include "secfield/pipeline.hpp"

#include <chrono>

#include "secfield/error.hpp"

namespace secfield {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::shared_ptr<const DiffusionBasis> fit_basis(const TrainingSet& training,
                                                const KernelConfig& kernel,
                                                const ResolutionParams& params) {
  training.validate();
  kernel.validate();
  params.validate();
  if (params.required_eigs() > training.size())
    throw Error(ErrorKind::Config, "resolution needs more eigenpairs than there are samples");
  auto basis = std::make_shared<DiffusionBasis>(fit_diffusion_basis(
      training.points, kernel, training.dim_manifold, params.required_eigs()));
  // The eigenvalue floor may have truncated M.
  params.validate(basis->n_eigs());
  return basis;
}

FitResult fit_with_basis(std::shared_ptr<const DiffusionBasis> basis, const TrainingSet& training,
                         const ResolutionParams& params) {
  training.validate();
  if (!basis || basis->n_samples() != training.size() ||
      basis->dim_ambient() != training.dim_ambient())
    throw Error(ErrorKind::Config, "basis does not match the training set");
  params.validate(basis->n_eigs());

  StageTimings timings;
  auto start = std::chrono::steady_clock::now();
  SecTensors tensors = build_sec_tensors(*basis, training.points, training.arrows, params);
  timings.coefficients = seconds_since(start);

  start = std::chrono::steady_clock::now();
  FrameSolution solution = solve_b(tensors.gram, tensors.d, tensors.v_hat, params);
  ReconstructedField field = assemble_field(basis, tensors, solution);
  timings.regression = seconds_since(start);

  FieldMetrics metrics = compute_metrics(field, training);
  return FitResult{std::move(basis), std::move(tensors), std::move(solution), std::move(field),
                   metrics, timings};
}

FitResult fit(const TrainingSet& training, const KernelConfig& kernel,
              const ResolutionParams& params) {
  const auto start = std::chrono::steady_clock::now();
  auto basis = fit_basis(training, kernel, params);
  const double laplacian = seconds_since(start);
  FitResult result = fit_with_basis(std::move(basis), training, params);
  result.timings.laplacian = laplacian;
  return result;
}

}  // namespace secfield
