#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace qcm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Gaussian point-spread function; sigma is the simulation length unit.
struct PsfModel {
  double sigma = 1.0;
};

struct Emitter {
  double x = 0.0;
  double y = 0.0;
  double peak_brightness = 1.0;  // P0, the on-axis detection probability scale

  Vec2 pos() const { return {x, y}; }
};

// Two point emitters plus their intrinsic brightness ratio alpha = P02/P01.
// Canonical form keeps emitter 1 the brighter one (alpha <= 1).
struct Scene {
  Emitter emitter1;
  Emitter emitter2;
  double alpha = 1.0;
};

// Relabels emitters so alpha <= 1; idempotent.
Scene canonicalize(const Scene& scene);

// Exactly three in-plane measurement positions; must be non-collinear.
struct DetectorLayout {
  std::array<Vec2, 3> positions;
};

double triangle_area(const DetectorLayout& layout);
bool layout_valid(const DetectorLayout& layout);

// Per-detector (g1, g2(0)) sextuple.  Exact sets obey 0 <= g2 <= 0.5; noisy
// sets are unclamped.
struct MeasurementSet {
  std::array<double, 3> g1{};
  std::array<double, 3> g2{};
  bool noisy = false;
};

// Zero-lag cross-correlation of two emitters with effective brightness
// ratio alpha_eff: 2a/(1+a)^2.  Symmetric under a <-> 1/a, max 0.5 at a=1.
double g2_two_emitter(double alpha_eff);

// n co-located equal-brightness emitters: 1 - 1/n.
double g2_n_colocated(std::uint64_t n);

// Gaussian-weighted detection probability of one emitter at one detector:
// P0/sqrt(2 pi sigma^2) * exp(-r^2 / (2 sigma^2)).  The 1D-style prefactor
// is kept as-is; it cancels in g2 and in normalized maps.
double detection_probability(const Emitter& emitter, const Vec2& detector_pos,
                             const PsfModel& psf);

// Exact (noise-free) g1/g2 sextuple at the three detectors.  g2 is defined
// as 0 where both detection probabilities vanish.
MeasurementSet forward_model(const Scene& scene, const DetectorLayout& layout,
                             const PsfModel& psf);

// PSF width from optics parameters: 0.21 * wavelength / NA.
double sigma_from_optics(double wavelength, double numerical_aperture);

struct GridSpec {
  double x0 = -2.0;
  double y0 = -2.0;
  double pitch = 0.05;
  std::size_t nx = 81;
  std::size_t ny = 81;
};

struct IntensityGrid {
  GridSpec spec;
  std::vector<double> values;  // row-major, index = iy * nx + ix

  double at(std::size_t ix, std::size_t iy) const {
    return values[iy * spec.nx + ix];
  }
};

// Total intensity g1 sampled on a grid, normalized by emitter 1's peak
// detection probability P01/sqrt(2 pi sigma^2).
IntensityGrid confocal_map(const Scene& scene, const PsfModel& psf,
                           const GridSpec& grid);

// Number of strict 8-neighbor local maxima whose value exceeds
// threshold_frac times the grid maximum.
std::size_t count_local_maxima(const IntensityGrid& grid,
                               double threshold_frac);

}  // namespace qcm
