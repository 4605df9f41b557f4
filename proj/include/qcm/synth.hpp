#pragma once

#include "qcm/optics.hpp"
#include "qcm/rng.hpp"

namespace qcm {

// Relative counting-noise level eta = 1/sqrt(N) for N detected coincidences.
struct NoiseModel {
  double eta = 0.0;
};

// The paper's detector triangle: (0,1), (sqrt(2),-0.5), (-sqrt(2),-0.5).
DetectorLayout default_layout();

// Random scene: both emitter positions uniform over the unit disk (in sigma
// units), alpha uniform on (alpha_min, 1), P01 = 1, P02 = alpha.
// Draw order: e1 (r, theta), e2 (r, theta), alpha -- 5 uniforms total.
Scene sample_scene(RngStream& rng, double alpha_min);

// Multiplies each of the six values by (1 + eta * z) with independent
// standard-normal z, consumed in the fixed order g1[0..2] then g2[0..2].
// No clamping; the output is flagged noisy.
MeasurementSet apply_noise(const MeasurementSet& exact, const NoiseModel& noise,
                           RngStream& rng);

}  // namespace qcm
