#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "echognn/cli.hpp"
#include "echognn/gradsuite.hpp"
#include "echognn/sampling.hpp"

namespace echognn::cli {
namespace {

using T = Tensor<double>;
using V = Var<double>;

T uniform(Shape shape, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  T t(std::move(shape));
  for (auto& x : t.storage()) x = u(rng);
  return t;
}

struct Tally {
  std::ostream& out;
  bool ok = true;

  void line(const std::string& name, bool pass, const std::string& detail) {
    out << (pass ? "PASS " : "FAIL ") << name << "  " << detail << "\n" << std::flush;
    ok = ok && pass;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

void gradients(Tally& t, std::uint64_t seed) {
  for (const auto& [name, r] :
       {std::pair{"op gradients", op_gradient_suite(seed, 3)},
        std::pair{"module gradients", module_gradient_suite(seed)},
        std::pair{"model gradients", model_gradient_suite(seed)}}) {
    std::string failed;
    for (const auto& e : r.entries)
      if (!e.report.passed()) failed += " " + e.label;
    t.line(name, r.passed(),
           std::to_string(r.entries.size()) + " cases, worst rel " + fmt(r.worst()) + failed);
  }
}

// Relabels the frames of one clip by a random permutation and checks that the
// graph follows the relabeling and the EF prediction ignores it.
void invariants(Tally& t, std::uint64_t seed, std::size_t instances) {
  Rng rng(seed);
  const ModelConfig cfg = ModelConfig::tiny();
  const std::size_t n = cfg.frames, d = cfg.embedding_dim;
  double equi = 0.0, invar = 0.0, scale = 0.0;
  bool bounded = true, diagonal = true;
  for (std::size_t it = 0; it < instances; ++it) {
    EchoGnn<double> model(cfg, seed + it);
    model.set_training(it % 2 == 0);
    model.regressor.set_training(false);  // single clip: no batch statistics
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    const T h = uniform({n, d}, rng, -1, 1);
    T hp({n, d});
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < d; ++c) hp[j * d + c] = h[perm[j] * d + c];
    const auto g = model.attention.forward(V(h), 1, n);
    const auto gp = model.attention.forward(V(hp), 1, n);
    const T& a = g.adjacency.value();
    const T& w = g.node_weights.value();
    for (std::size_t j = 0; j < n; ++j) {
      equi = std::max(equi, std::abs(gp.node_weights.value()[j] - w[perm[j]]));
      bounded = bounded && w[j] > 0.0 && w[j] < 1.0;
      diagonal = diagonal && a[j * n + j] == 0.0;
      for (std::size_t k = 0; k < n; ++k)
        equi = std::max(equi, std::abs(gp.adjacency.value()[j * n + k] -
                                       a[perm[j] * n + perm[k]]));
    }

    const double ef = model.regressor.forward(V(h), g.adjacency, g.node_weights).ef.value()[0];
    const double efp =
        model.regressor.forward(V(hp), gp.adjacency, gp.node_weights).ef.value()[0];
    invar = std::max(invar, std::abs(ef - efp));

    const T hf = uniform({1, n, 3}, rng, -1, 1);
    const T wr = uniform({1, n}, rng, 0.05, 0.95);
    T ws = wr;
    const double c = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
    for (auto& x : ws.storage()) x *= c;
    const T r1 = weighted_readout(V(hf), V(wr)).value();
    const T r2 = weighted_readout(V(hf), V(ws)).value();
    for (std::size_t i = 0; i < r1.size(); ++i) scale = std::max(scale, std::abs(r1[i] - r2[i]));
  }
  const std::string n_str = std::to_string(instances) + " instances";
  t.line("attention permutation equivariance", equi < 1e-5, n_str + ", max diff " + fmt(equi));
  t.line("prediction permutation invariance", invar < 1e-5, n_str + ", max diff " + fmt(invar));
  t.line("readout scale invariance", scale < 1e-6, n_str + ", max diff " + fmt(scale));
  t.line("node weights in (0,1)", bounded, n_str);
  t.line("adjacency diagonal zero", diagonal, n_str);
}

void protocol(Tally& t) {
  using S = std::vector<std::size_t>;
  const bool starts = test_clip_starts(150, 64) == S{0, 64, 86} &&
                      test_clip_starts(128, 64) == S{0, 64} && test_clip_starts(30, 64) == S{0};
  t.line("test clip starts", starts, "150->{0,64,86}, 128->{0,64}, 30->{0}");
  const CropWindow z = zoom_window(112, 112);
  t.line("zoom window", z == CropWindow{0, 90, 20, 72}, "112x112 -> rows [0,90) cols [20,92)");
  const bool bins = ef_to_class(30.0) == 0 && ef_to_class(30.0001) == 1 &&
                    ef_to_class(40.0) == 1 && ef_to_class(55.0) == 2 && ef_to_class(56.0) == 3;
  t.line("EF class bins", bins, "30|30.0001|40|55|56 -> 0|1|1|2|3");
}

}  // namespace

bool selftest(std::ostream& out, std::uint64_t seed) {
  Tally t{out};
  gradients(t, seed);
  invariants(t, seed, 20);
  protocol(t);
  out << (t.ok ? "selftest passed\n" : "selftest FAILED\n");
  return t.ok;
}

}  // namespace echognn::cli
