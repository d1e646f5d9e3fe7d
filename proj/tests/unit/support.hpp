#pragma once

// Random inputs and independent reference implementations for the tests.
// The oracles use plain loops on std::vector and never call library ops.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "echognn/tensor.hpp"

namespace testing_support {

using echognn::Shape;
using echognn::Tensor;
using Rng = std::mt19937_64;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(std::filesystem::temp_directory_path() /
              ("echognn_" + tag + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline Tensor<double> rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(std::move(shape));
  for (auto& x : t.storage()) x = u(rng);
  return t;
}

inline std::size_t rand_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Direct cross-correlation: x[N,C,T,H,W], w[O,C,kt,kh,kw], zero padding.
inline Tensor<double> naive_conv3d(const Tensor<double>& x, const Tensor<double>& w,
                                   const std::vector<double>& bias, std::size_t st,
                                   std::size_t sh, std::size_t sw, std::size_t pt,
                                   std::size_t ph, std::size_t pw) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  const std::size_t N = xs[0], C = xs[1], T = xs[2], H = xs[3], W = xs[4];
  const std::size_t O = ws[0], KT = ws[2], KH = ws[3], KW = ws[4];
  const std::size_t To = (T + 2 * pt - KT) / st + 1;
  const std::size_t Ho = (H + 2 * ph - KH) / sh + 1;
  const std::size_t Wo = (W + 2 * pw - KW) / sw + 1;
  Tensor<double> out({N, O, To, Ho, Wo});
  auto X = [&](std::size_t n, std::size_t c, long t, long h, long ww) -> double {
    if (t < 0 || h < 0 || ww < 0 || t >= long(T) || h >= long(H) || ww >= long(W)) return 0.0;
    return x[(((n * C + c) * T + t) * H + h) * W + ww];
  };
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t t = 0; t < To; ++t)
        for (std::size_t h = 0; h < Ho; ++h)
          for (std::size_t q = 0; q < Wo; ++q) {
            double acc = bias.empty() ? 0.0 : bias[o];
            for (std::size_t c = 0; c < C; ++c)
              for (std::size_t a = 0; a < KT; ++a)
                for (std::size_t b = 0; b < KH; ++b)
                  for (std::size_t e = 0; e < KW; ++e)
                    acc += w[(((o * C + c) * KT + a) * KH + b) * KW + e] *
                           X(n, c, long(t * st + a) - long(pt), long(h * sh + b) - long(ph),
                             long(q * sw + e) - long(pw));
            out[(((n * O + o) * To + t) * Ho + h) * Wo + q] = acc;
          }
  return out;
}

using Matrix = std::vector<std::vector<double>>;

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

/// D^-1/2 ((A + A^T)/2 + I) D^-1/2 with D the row sums of the bracket.
inline Matrix symmetric_propagation(const Matrix& a) {
  const std::size_t n = a.size();
  Matrix m(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i][j] = 0.5 * (a[i][j] + a[j][i]) + (i == j);
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i] += m[i][j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i][j] /= std::sqrt(d[i] * d[j]);
  return m;
}

/// Row-normalized (A^T + I).
inline Matrix directed_propagation(const Matrix& a) {
  const std::size_t n = a.size();
  Matrix m(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += m[i][j] = a[j][i] + (i == j);
    for (std::size_t j = 0; j < n; ++j) m[i][j] /= row;
  }
  return m;
}

inline double elu(double x, double alpha = 1.0) { return x > 0 ? x : alpha * (std::exp(x) - 1); }

/// Mean over rows of logsumexp(z) - z[label].
inline double cross_entropy(const std::vector<std::vector<double>>& z,
                            const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double m = z[i][0];
    for (double v : z[i]) m = std::max(m, v);
    double s = 0.0;
    for (double v : z[i]) s += std::exp(v - m);
    total += m + std::log(s) - z[i][labels[i]];
  }
  return total / double(z.size());
}

}  // namespace testing_support
