#pragma once

#include "qcm/optics.hpp"
#include "qcm/rng.hpp"

namespace qcm {

// The five free parameters of a trial scene.
struct TrialParams {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  double alpha = 1.0;
};

struct FitResult {
  TrialParams params;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  int starts_used = 0;
};

struct FitConfig {
  int n_starts = 32;
  double start_box_radius = 1.5;  // sigma units, disk radius for position starts
  double param_tolerance = 1e-6;  // simplex diameter
  double chi2_tolerance = 1e-12;  // function-value spread
  int max_iterations = 2000;      // per start
};

// Sum of squared residuals between the trial scene's predicted sextuple and
// the measured one.  Negative alpha is rejected with a large penalty so the
// unconstrained simplex stays out of the unphysical region.
double chi_squared(const TrialParams& trial, const MeasurementSet& measured,
                   const DetectorLayout& layout, const PsfModel& psf);

// Multi-start Nelder-Mead over the raw 5-vector; returns the canonicalized
// best start.  Never throws on optimizer failure: a fit that exhausts every
// start's iteration budget comes back with converged = false.
FitResult fit_scene(const MeasurementSet& measured, const DetectorLayout& layout,
                    const PsfModel& psf, const FitConfig& config,
                    RngStream& rng);

// Label-swap canonicalization: alpha > 1 becomes 1/alpha with emitter
// coordinates exchanged.  chi2 is unchanged; idempotent.
FitResult canonicalize(const FitResult& fit);

}  // namespace qcm
