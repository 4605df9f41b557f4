#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qcm/estimator.hpp"
#include "qcm/optics.hpp"
#include "qcm/synth.hpp"

namespace qcm {

// Repeated noisy-measurement fits of one scene at one noise level.
struct TrialEnsemble {
  Scene scene;
  double eta = 0.0;
  std::vector<FitResult> fits;
  std::uint64_t master_seed = 0;
};

// 90%-boundary precision: per emitter, the maximum distance from the mean
// fitted position among the 90% of converged fits closest to that mean.
struct PrecisionSummary {
  Vec2 mean1;
  Vec2 mean2;
  double radius1 = 0.0;
  double radius2 = 0.0;
  double summed_precision = 0.0;
  int n_used = 0;
  bool label_refined = false;  // cluster-mean assignment kicked in (alpha ~ 1)
};

struct SweepRecord {
  int scene_id = 0;
  double alpha = 0.0;
  double eta = 0.0;
  double radius1 = 0.0;
  double radius2 = 0.0;
  double summed_precision = 0.0;
  double convergence_fraction = 0.0;
  bool ok = false;  // false marks an unlocalizable (scene, eta) pair
};

struct BandFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
};

// Trial t draws its noise from substream (kTrialNoise, t) and its fit starts
// from (kTrialFit, t), so results are independent of execution order.  The
// serial variant is the reference; the default variant runs the trial loop
// under OpenMP and must produce bit-identical output.
TrialEnsemble run_trials_serial(const Scene& scene, double eta, int n_trials,
                                const DetectorLayout& layout,
                                const PsfModel& psf, const FitConfig& fit_config,
                                std::uint64_t master_seed);
TrialEnsemble run_trials(const Scene& scene, double eta, int n_trials,
                         const DetectorLayout& layout, const PsfModel& psf,
                         const FitConfig& fit_config,
                         std::uint64_t master_seed);

// Empty when fewer than 10 trials converged (unlocalizable).
std::optional<PrecisionSummary> precision_90(const TrialEnsemble& ensemble);

// Samples n_scenes scenes once, then evaluates every (scene, eta) pair.
// Output always has n_scenes * eta_values.size() rows; unlocalizable pairs
// are marked, never dropped.
std::vector<SweepRecord> sweep(int n_scenes, const std::vector<double>& eta_values,
                               int n_trials, double alpha_min,
                               const DetectorLayout& layout, const PsfModel& psf,
                               const FitConfig& fit_config,
                               std::uint64_t master_seed);

// OLS of log(median summed precision) against log(eta) over records with
// alpha <= alpha_max; empty when fewer than 3 distinct eta values survive.
std::optional<BandFit> band_fit(const std::vector<SweepRecord>& records,
                                double alpha_max);

}  // namespace qcm
