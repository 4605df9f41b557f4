#include "qcm/synth.hpp"

#include <stdexcept>

namespace qcm {

DetectorLayout default_layout() {
  const double rt2 = std::sqrt(2.0);
  return DetectorLayout{{Vec2{0.0, 1.0}, Vec2{rt2, -0.5}, Vec2{-rt2, -0.5}}};
}

namespace {
Vec2 sample_disk(RngStream& rng, double radius) {
  // radius = R*sqrt(u) gives an area-uniform point
  const double r = radius * std::sqrt(rng.next_uniform());
  const double theta = 2.0 * 3.14159265358979323846 * rng.next_uniform();
  return {r * std::cos(theta), r * std::sin(theta)};
}
}  // namespace

Scene sample_scene(RngStream& rng, double alpha_min) {
  if (!(alpha_min >= 0.0 && alpha_min < 1.0)) {
    throw std::domain_error("sample_scene: alpha_min must be in [0, 1)");
  }
  const Vec2 p1 = sample_disk(rng, 1.0);
  const Vec2 p2 = sample_disk(rng, 1.0);
  const double alpha = alpha_min + (1.0 - alpha_min) * rng.next_uniform();
  Scene scene;
  scene.emitter1 = Emitter{p1.x, p1.y, 1.0};
  scene.emitter2 = Emitter{p2.x, p2.y, alpha};
  scene.alpha = alpha;
  return scene;
}

MeasurementSet apply_noise(const MeasurementSet& exact, const NoiseModel& noise,
                           RngStream& rng) {
  if (exact.noisy) {
    throw std::invalid_argument("apply_noise: input must be an exact set");
  }
  MeasurementSet out = exact;
  for (std::size_t j = 0; j < 3; ++j) {
    out.g1[j] = (1.0 + noise.eta * rng.next_normal()) * exact.g1[j];
  }
  for (std::size_t j = 0; j < 3; ++j) {
    out.g2[j] = (1.0 + noise.eta * rng.next_normal()) * exact.g2[j];
  }
  out.noisy = true;
  return out;
}

}  // namespace qcm
