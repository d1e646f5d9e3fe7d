#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "echognn/autograd.hpp"

namespace echognn {

struct ParamGradError {
  std::string name;
  std::size_t checked = 0;     // entries compared
  std::size_t one_sided = 0;   // of those, compared on one side of a kink
  std::size_t skipped = 0;     // kinks within eps on both sides
  double max_rel_error = 0;
  double max_abs_error = 0;
};

struct GradCheckReport {
  std::vector<ParamGradError> params;
  double max_rel_error = 0;
  double tolerance = 0;
  bool passed() const { return max_rel_error < tolerance; }
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-6;
  /// Denominator floor: rel = |a-n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  /// Compare at most this many randomly chosen entries per parameter.
  std::optional<std::size_t> max_entries;
  std::uint64_t seed = 0;
};

/// Compares analytic gradients of the scalar `f` with the fourth-order central
/// difference (8 (f(p+e) - f(p-e)) - (f(p+2e) - f(p-2e))) / (12 e) for every
/// entry of every param. `f` must be deterministic and rebuild its graph on
/// every call. Batch norm over a handful of samples is stiff enough that the
/// plain two-point difference misses 1e-6 at e = 1e-5.
///
/// When a step moves some elu/abs input across its kink (see ops::KinkTrace)
/// within e, the entry is compared with the second-order one-sided difference
/// on the side that stays smooth; if both sides cross, it is skipped. A kink
/// between e and 2e falls back to the two-point central difference.
template <typename Real>
GradCheckReport finite_difference_check(const std::function<Var<Real>()>& f,
                                        std::vector<Var<Real>> params,
                                        const std::vector<std::string>& names = {},
                                        const GradCheckOptions& options = {});

}  // namespace echognn
