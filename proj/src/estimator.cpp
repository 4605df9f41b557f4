#include "qcm/estimator.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>

namespace qcm {

namespace {

constexpr int kDim = 5;
using Point = std::array<double, kDim>;

Point to_point(const TrialParams& p) {
  return {p.x1, p.y1, p.x2, p.y2, p.alpha};
}

TrialParams to_params(const Point& v) {
  return {v[0], v[1], v[2], v[3], v[4]};
}

struct Objective {
  const MeasurementSet* measured;
  const DetectorLayout* layout;
  const PsfModel* psf;

  double operator()(const Point& v) const {
    return chi_squared(to_params(v), *measured, *layout, *psf);
  }
};

struct NmOutcome {
  Point best;
  double fbest;
  int iterations;
  bool converged;
};

// Standard Nelder-Mead (reflect 1, expand 2, contract 0.5, shrink 0.5).
// Converged when the simplex inf-norm diameter and the function spread both
// drop below their tolerances, fminsearch style.
NmOutcome nelder_mead(const Objective& f, const Point& start,
                      const FitConfig& cfg) {
  constexpr int kVerts = kDim + 1;
  std::array<Point, kVerts> x;
  std::array<double, kVerts> fx;

  const std::array<double, kDim> step = {0.25, 0.25, 0.25, 0.25, 0.1};
  x[0] = start;
  for (int i = 1; i < kVerts; ++i) {
    x[i] = start;
    x[i][i - 1] += step[i - 1];
  }
  for (int i = 0; i < kVerts; ++i) fx[i] = f(x[i]);

  auto order = [&]() {
    std::array<int, kVerts> idx;
    for (int i = 0; i < kVerts; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return fx[a] < fx[b]; });
    std::array<Point, kVerts> x2;
    std::array<double, kVerts> f2;
    for (int i = 0; i < kVerts; ++i) {
      x2[i] = x[idx[i]];
      f2[i] = fx[idx[i]];
    }
    x = x2;
    fx = f2;
  };

  int iter = 0;
  bool converged = false;
  for (; iter < cfg.max_iterations; ++iter) {
    order();

    double diam = 0.0;
    for (int i = 1; i < kVerts; ++i) {
      for (int d = 0; d < kDim; ++d) {
        diam = std::max(diam, std::abs(x[i][d] - x[0][d]));
      }
    }
    if (diam < cfg.param_tolerance &&
        fx[kVerts - 1] - fx[0] < cfg.chi2_tolerance) {
      converged = true;
      break;
    }

    Point centroid{};
    for (int i = 0; i < kVerts - 1; ++i) {
      for (int d = 0; d < kDim; ++d) centroid[d] += x[i][d];
    }
    for (int d = 0; d < kDim; ++d) centroid[d] /= kDim;

    auto blend = [&](double coeff) {
      Point p;
      for (int d = 0; d < kDim; ++d) {
        p[d] = centroid[d] + coeff * (centroid[d] - x[kVerts - 1][d]);
      }
      return p;
    };

    const Point xr = blend(1.0);
    const double fr = f(xr);
    if (fr < fx[0]) {
      const Point xe = blend(2.0);
      const double fe = f(xe);
      if (fe < fr) {
        x[kVerts - 1] = xe;
        fx[kVerts - 1] = fe;
      } else {
        x[kVerts - 1] = xr;
        fx[kVerts - 1] = fr;
      }
    } else if (fr < fx[kVerts - 2]) {
      x[kVerts - 1] = xr;
      fx[kVerts - 1] = fr;
    } else {
      const bool outside = fr < fx[kVerts - 1];
      Point xc;
      for (int d = 0; d < kDim; ++d) {
        const double toward = outside ? xr[d] : x[kVerts - 1][d];
        xc[d] = centroid[d] + 0.5 * (toward - centroid[d]);
      }
      const double fc = f(xc);
      if (fc < std::min(fr, fx[kVerts - 1])) {
        x[kVerts - 1] = xc;
        fx[kVerts - 1] = fc;
      } else {
        // shrink toward the best vertex
        for (int i = 1; i < kVerts; ++i) {
          for (int d = 0; d < kDim; ++d) {
            x[i][d] = x[0][d] + 0.5 * (x[i][d] - x[0][d]);
          }
          fx[i] = f(x[i]);
        }
      }
    }
  }
  order();
  return {x[0], fx[0], iter, converged};
}

}  // namespace

double chi_squared(const TrialParams& trial, const MeasurementSet& measured,
                   const DetectorLayout& layout, const PsfModel& psf) {
  if (!std::isfinite(trial.x1) || !std::isfinite(trial.y1) ||
      !std::isfinite(trial.x2) || !std::isfinite(trial.y2) ||
      !std::isfinite(trial.alpha)) {
    throw std::domain_error("chi_squared: non-finite trial parameters");
  }
  if (trial.alpha < 0.0) {
    return 1e6 * (1.0 + trial.alpha * trial.alpha);
  }
  // Brighter-emitter normalization: peak brightnesses (1, a) for a <= 1 and
  // (1/a, 1) for a > 1.  This keeps the predicted sextuple invariant under
  // the label swap (x1,y1,x2,y2,a) -> (x2,y2,x1,y1,1/a), so canonicalization
  // leaves chi2 unchanged.
  const double scale = trial.alpha > 1.0 ? 1.0 / trial.alpha : 1.0;
  Scene scene;
  scene.emitter1 = Emitter{trial.x1, trial.y1, scale};
  scene.emitter2 = Emitter{trial.x2, trial.y2, scale * trial.alpha};
  scene.alpha = trial.alpha;
  const MeasurementSet predicted = forward_model(scene, layout, psf);
  double sum = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const double d1 = predicted.g1[j] - measured.g1[j];
    const double d2 = predicted.g2[j] - measured.g2[j];
    sum += d1 * d1 + d2 * d2;
  }
  return sum;
}

FitResult canonicalize(const FitResult& fit) {
  if (fit.params.alpha <= 1.0) return fit;
  FitResult out = fit;
  out.params.x1 = fit.params.x2;
  out.params.y1 = fit.params.y2;
  out.params.x2 = fit.params.x1;
  out.params.y2 = fit.params.y1;
  out.params.alpha = 1.0 / fit.params.alpha;
  return out;
}

FitResult fit_scene(const MeasurementSet& measured, const DetectorLayout& layout,
                    const PsfModel& psf, const FitConfig& config,
                    RngStream& rng) {
  for (std::size_t j = 0; j < 3; ++j) {
    if (!std::isfinite(measured.g1[j]) || !std::isfinite(measured.g2[j])) {
      throw std::domain_error("fit_scene: non-finite measurement values");
    }
  }
  const Objective objective{&measured, &layout, &psf};

  FitResult best;
  best.chi2 = std::numeric_limits<double>::infinity();
  for (int s = 0; s < config.n_starts; ++s) {
    RngStream start_rng = rng.child(stream_tag::kFitStart,
                                    static_cast<std::uint64_t>(s));
    Point start;
    for (int e = 0; e < 2; ++e) {
      const double r =
          config.start_box_radius * std::sqrt(start_rng.next_uniform());
      const double theta =
          2.0 * 3.14159265358979323846 * start_rng.next_uniform();
      start[2 * e] = r * std::cos(theta);
      start[2 * e + 1] = r * std::sin(theta);
    }
    start[4] = start_rng.next_uniform(0.05, 1.0);

    const NmOutcome outcome = nelder_mead(objective, start, config);
    // ties within 1e-15 keep the earlier start
    if (outcome.fbest < best.chi2 - 1e-15) {
      best.params = to_params(outcome.best);
      best.chi2 = outcome.fbest;
      best.iterations = outcome.iterations;
      best.converged = outcome.converged;
    }
  }
  best.starts_used = config.n_starts;
  return canonicalize(best);
}

}  // namespace qcm
