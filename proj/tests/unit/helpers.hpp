#pragma once

#include <doctest.h>

#include <functional>
#include <memory>

#include "secfield/datasets.hpp"
#include "secfield/error.hpp"
#include "secfield/pipeline.hpp"

namespace secfield::testing {

/// Kind of the Error thrown by fn; fails the test when nothing is thrown.
inline ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Numeric;
}

/// Circle fits at the benchmark parameters, computed once per process.
inline const FitResult& circle_fit(CircleField kind) {
  static std::unique_ptr<FitResult> cache[3];
  auto& slot = cache[static_cast<int>(kind)];
  if (!slot) {
    const auto set = generate_circle(CircleSystem::standard(kind), 800);
    slot = std::make_unique<FitResult>(
        fit(set, KernelConfig{0.2}, ResolutionParams::circle_defaults()));
  }
  return *slot;
}

inline const TrainingSet& circle_set(CircleField kind) {
  static std::unique_ptr<TrainingSet> cache[3];
  auto& slot = cache[static_cast<int>(kind)];
  if (!slot) slot = std::make_unique<TrainingSet>(generate_circle(CircleSystem::standard(kind), 800));
  return *slot;
}

}  // namespace secfield::testing
