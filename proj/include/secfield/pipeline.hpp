#pragma once

#include <memory>

#include "secfield/datasets.hpp"
#include "secfield/diffusion.hpp"
#include "secfield/field.hpp"
#include "secfield/sec_frame.hpp"

namespace secfield {

/// Wall-clock seconds per training stage: Laplacian eigendecomposition,
/// SEC coefficients, regression.
struct StageTimings {
  double laplacian = 0.0;
  double coefficients = 0.0;
  double regression = 0.0;
};

struct FitResult {
  std::shared_ptr<const DiffusionBasis> basis;
  SecTensors tensors;
  FrameSolution solution;
  ReconstructedField field;
  FieldMetrics metrics;
  StageTimings timings;
};

/// diffusion -> sec_frame -> field on one training set.
FitResult fit(const TrainingSet& training, const KernelConfig& kernel,
              const ResolutionParams& params);

/// Reuses a basis computed on the same points (e.g. several vector fields
/// sampled on one grid).
FitResult fit_with_basis(std::shared_ptr<const DiffusionBasis> basis, const TrainingSet& training,
                         const ResolutionParams& params);

/// Diffusion basis with enough eigenpairs for params.
std::shared_ptr<const DiffusionBasis> fit_basis(const TrainingSet& training,
                                                const KernelConfig& kernel,
                                                const ResolutionParams& params);

}  // namespace secfield
