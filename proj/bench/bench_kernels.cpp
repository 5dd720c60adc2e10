// Times the OpenMP kernels against their serial reference implementations.
#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>
#include <vector>

#include <omp.h>

#include "spect/field.hpp"
#include "spect/geometry.hpp"
#include "spect/mlp.hpp"
#include "spect/optim.hpp"
#include "spect/phantom.hpp"
#include "spect/projector.hpp"

using namespace spect;

namespace {

template <typename Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto const t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double ref, double fast) {
  std::printf("%-28s reference %9.4f s   openmp %9.4f s   speedup %6.2fx\n", name, ref, fast, ref / fast);
}

}  // namespace

int main(int argc, char** argv) {
  int const n = argc > 1 ? std::atoi(argv[1]) : 32;
  int const n_views = argc > 2 ? std::atoi(argv[2]) : 24;
  std::printf("threads: %d, grid %d^3, %d views\n", omp_get_max_threads(), n, n_views);

  double const pitch = 4.8 * 128 / n;
  ScanGeometry const g = make_geometry(n_views, EllipticalOrbit{200, 160, 0}, n, n, pitch, 1);
  Phantom const ph = build_phantom(PhantomSpec::standard(), {n, n, n}, {pitch, pitch, pitch});
  SystemModel model;
  model.geometry = g;
  model.mu_map = ph.mu_map;
  ImageVolume const& x = ph.activity;
  std::vector<int> views(n_views);
  std::iota(views.begin(), views.end(), 0);

  Projector const proj(model);
  ProjectionStack p;
  double const f_ref = best_of(2, [&] { p = reference::forward_project(x, model, views); });
  double const f_fast = best_of(3, [&] { p = proj.forward(x, views); });
  report("projector forward", f_ref, f_fast);
  double const b_ref = best_of(2, [&] { reference::back_project(p, model, views); });
  double const b_fast = best_of(3, [&] { proj.back(p, views); });
  report("projector back", b_ref, b_fast);

  Mlp<float> net({5, 128, 128, 128, 128, 128, 3}, Activation::Relu);
  net.initialize(1);
  int const batch = 8192;
  Mlp<float>::Matrix X = Mlp<float>::Matrix::Random(5, batch);
  Mlp<float>::Matrix Y = Mlp<float>::Matrix::Random(3, batch);
  double const m_ref = best_of(1, [&] {
    std::vector<float> grad(net.n_parameters(), 0.0f);
    for (int c = 0; c < batch; ++c) {
      std::vector<float> in(X.col(c).data(), X.col(c).data() + 5);
      auto out = reference::mlp_forward<float>(net, in);
      for (int k = 0; k < 3; ++k) out[k] = huber_derivative(out[k] - Y(k, c), 1.0f) / (3.0f * batch);
      auto const gk = reference::mlp_backward<float>(net, in, out);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += gk[i];
    }
  });
  double const m_fast = best_of(3, [&] { huber_batch_gradient<float>(net, X, Y, 1.0f); });
  report("mlp huber gradient (8192)", m_ref, m_fast);
  return 0;
}
