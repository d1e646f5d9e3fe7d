#include "echognn/gradcheck.hpp"

#include "echognn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace echognn {

template <typename Real>
GradCheckReport finite_difference_check(const std::function<Var<Real>()>& f,
                                        std::vector<Var<Real>> params,
                                        const std::vector<std::string>& names,
                                        const GradCheckOptions& options) {
  ops::KinkTrace trace;
  zero_grad<Real>(params);
  Var<Real> loss = f();
  const std::uint64_t smooth = trace.signature();
  const double centre = double(loss.value().item());
  backward(loss);
  // Value at `at`, or NaN when it lies on another piece than the centre.
  auto eval = [&](Tensor<Real>& value, std::size_t i, Real at) {
    value[i] = at;
    trace.reset();
    const double y = double(f().value().item());
    return trace.signature() == smooth ? y : std::nan("");
  };
  std::vector<Tensor<Real>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.grad());

  GradCheckReport report;
  report.tolerance = options.tolerance;
  std::mt19937_64 rng(options.seed);
  const Real eps = Real(options.eps);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<Real>& value = params[k].mutable_value();
    std::vector<std::size_t> entries(value.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (options.max_entries && entries.size() > *options.max_entries) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(*options.max_entries);
      std::sort(entries.begin(), entries.end());
    }
    ParamGradError err;
    err.name = k < names.size() ? names[k] : "param" + std::to_string(k);
    for (std::size_t i : entries) {
      const Real saved = value[i];
      const double up = eval(value, i, saved + eps);
      const double down = eval(value, i, saved - eps);
      const double h = double(eps);
      double numeric;
      bool one_sided = true;
      if (!std::isnan(up) && !std::isnan(down)) {
        one_sided = false;
        const double up2 = eval(value, i, saved + 2 * eps);
        const double down2 = eval(value, i, saved - 2 * eps);
        numeric = std::isnan(up2) || std::isnan(down2)
                      ? (up - down) / (2.0 * h)
                      : (8.0 * (up - down) - (up2 - down2)) / (12.0 * h);
      } else if (!std::isnan(up)) {
        numeric = (-3.0 * centre + 4.0 * up - eval(value, i, saved + 2 * eps)) / (2.0 * h);
      } else if (!std::isnan(down)) {
        numeric = (3.0 * centre - 4.0 * down + eval(value, i, saved - 2 * eps)) / (2.0 * h);
      } else {
        numeric = std::nan("");
      }
      value[i] = saved;
      if (std::isnan(numeric)) {  // includes a far side that crossed another kink
        ++err.skipped;
        continue;
      }
      err.one_sided += one_sided;
      const double a = double(analytic[k][i]);
      const double abs_err = std::abs(a - numeric);
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      err.max_abs_error = std::max(err.max_abs_error, abs_err);
      err.max_rel_error = std::max(err.max_rel_error, abs_err / denom);
      ++err.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, err.max_rel_error);
    report.params.push_back(std::move(err));
  }
  return report;
}

template GradCheckReport finite_difference_check<float>(const std::function<Var<float>()>&,
                                                        std::vector<Var<float>>,
                                                        const std::vector<std::string>&,
                                                        const GradCheckOptions&);
template GradCheckReport finite_difference_check<double>(const std::function<Var<double>()>&,
                                                         std::vector<Var<double>>,
                                                         const std::vector<std::string>&,
                                                         const GradCheckOptions&);

}  // namespace echognn
