#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "echognn/gradcheck.hpp"

namespace echognn {

struct GradSuiteEntry {
  std::string label;
  GradCheckReport report;
};

struct GradSuiteResult {
  std::vector<GradSuiteEntry> entries;

  bool passed() const;
  double worst() const;  // largest relative error over every entry
};

/// Denominator floor used by the suites. Relative error below it is measured
/// against the floor, so a gradient of 1e-9 is not judged on round-off alone.
inline constexpr double kGradSuiteFloor = 1e-3;

/// Every registered op kind, `instances` random cases each, 64-bit. The
/// checked scalar is sum(op(inputs) * R) for a fixed random R, and inputs
/// stay clear of the points where an op is not smooth.
GradSuiteResult op_gradient_suite(std::uint64_t seed, std::size_t instances = 3,
                                  double tolerance = 1e-6);

/// Each layer and model stage at small shapes, including gradients with
/// respect to the stage input.
GradSuiteResult module_gradient_suite(std::uint64_t seed, double tolerance = 1e-6);

/// The tiny preset end to end: one clip in eval mode, two clips in train
/// mode (MAE + cross-entropy), and the pretraining loss.
GradSuiteResult model_gradient_suite(std::uint64_t seed, double tolerance = 1e-4);

}  // namespace echognn
