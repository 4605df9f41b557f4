// Times the serial reference trial loop against the OpenMP variant on the
// same workload and checks the outputs are bit-identical.
//
//   bench_trials [n_trials] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qcm/ensemble.hpp"

using namespace qcm;

namespace {

Scene bench_scene() {
  Scene s;
  s.emitter1 = Emitter{-0.6300, -0.1276, 1.0};
  s.emitter2 = Emitter{0.5146, -0.5573, 0.3617};
  s.alpha = 0.3617;
  return s;
}

bool identical(const TrialEnsemble& a, const TrialEnsemble& b) {
  if (a.fits.size() != b.fits.size()) return false;
  for (std::size_t i = 0; i < a.fits.size(); ++i) {
    if (std::memcmp(&a.fits[i].params, &b.fits[i].params,
                    sizeof a.fits[i].params) != 0 ||
        a.fits[i].chi2 != b.fits[i].chi2 ||
        a.fits[i].converged != b.fits[i].converged) {
      return false;
    }
  }
  return true;
}

template <typename F>
double time_best(int repeats, const F& run) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    run();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const int n_trials = argc > 1 ? std::atoi(argv[1]) : 128;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  if (n_trials < 1 || repeats < 1) {
    std::fprintf(stderr, "usage: bench_trials [n_trials] [repeats]\n");
    return 2;
  }

  const Scene scene = bench_scene();
  const DetectorLayout layout = default_layout();
  const PsfModel psf{1.0};
  FitConfig cfg;
  const double eta = 0.05;
  const std::uint64_t seed = 97;

  TrialEnsemble serial, parallel;
  const double t_serial = time_best(repeats, [&] {
    serial = run_trials_serial(scene, eta, n_trials, layout, psf, cfg, seed);
  });
  const double t_parallel = time_best(repeats, [&] {
    parallel = run_trials(scene, eta, n_trials, layout, psf, cfg, seed);
  });

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif

  std::printf("trials=%d starts=%d repeats=%d threads=%d\n", n_trials,
              cfg.n_starts, repeats, threads);
  std::printf("serial   %.3f s  (%.2f ms/trial)\n", t_serial,
              1e3 * t_serial / n_trials);
  std::printf("parallel %.3f s  (%.2f ms/trial)\n", t_parallel,
              1e3 * t_parallel / n_trials);
  std::printf("speedup  %.2fx\n", t_serial / t_parallel);
  if (!identical(serial, parallel)) {
    std::printf("MISMATCH: serial and parallel ensembles differ\n");
    return 1;
  }
  std::printf("outputs bit-identical\n");
  return 0;
}
