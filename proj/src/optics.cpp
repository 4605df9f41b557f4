#include "qcm/optics.hpp"

#include <algorithm>
#include <stdexcept>

namespace qcm {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

Scene canonicalize(const Scene& scene) {
  if (scene.alpha <= 1.0) return scene;
  Scene out;
  out.emitter1 = scene.emitter2;
  out.emitter2 = scene.emitter1;
  out.alpha = 1.0 / scene.alpha;
  return out;
}

double triangle_area(const DetectorLayout& layout) {
  const Vec2& a = layout.positions[0];
  const Vec2& b = layout.positions[1];
  const Vec2& c = layout.positions[2];
  return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

bool layout_valid(const DetectorLayout& layout) {
  return triangle_area(layout) > 1e-9;
}

double g2_two_emitter(double alpha_eff) {
  if (!std::isfinite(alpha_eff) || alpha_eff < 0.0) {
    throw std::domain_error("g2_two_emitter: alpha_eff must be finite and >= 0");
  }
  const double s = 1.0 + alpha_eff;
  return 2.0 * alpha_eff / (s * s);
}

double g2_n_colocated(std::uint64_t n) {
  if (n == 0) throw std::domain_error("g2_n_colocated: n must be >= 1");
  return 1.0 - 1.0 / static_cast<double>(n);
}

double detection_probability(const Emitter& emitter, const Vec2& detector_pos,
                             const PsfModel& psf) {
  const double dx = emitter.x - detector_pos.x;
  const double dy = emitter.y - detector_pos.y;
  const double s2 = psf.sigma * psf.sigma;
  return emitter.peak_brightness / std::sqrt(kTwoPi * s2) *
         std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
}

MeasurementSet forward_model(const Scene& scene, const DetectorLayout& layout,
                             const PsfModel& psf) {
  MeasurementSet out;
  for (std::size_t j = 0; j < 3; ++j) {
    const double p1 =
        detection_probability(scene.emitter1, layout.positions[j], psf);
    const double p2 =
        detection_probability(scene.emitter2, layout.positions[j], psf);
    const double sum = p1 + p2;
    out.g1[j] = sum;
    out.g2[j] = sum > 0.0 ? 2.0 * p1 * p2 / (sum * sum) : 0.0;
  }
  out.noisy = false;
  return out;
}

double sigma_from_optics(double wavelength, double numerical_aperture) {
  if (!(wavelength > 0.0) || !(numerical_aperture > 0.0)) {
    throw std::domain_error("sigma_from_optics: inputs must be positive");
  }
  return 0.21 * wavelength / numerical_aperture;
}

IntensityGrid confocal_map(const Scene& scene, const PsfModel& psf,
                           const GridSpec& grid) {
  if (grid.nx == 0 || grid.ny == 0) {
    throw std::domain_error("confocal_map: empty grid");
  }
  IntensityGrid out;
  out.spec = grid;
  out.values.resize(grid.nx * grid.ny);
  const double peak1 = scene.emitter1.peak_brightness /
                       std::sqrt(kTwoPi * psf.sigma * psf.sigma);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t iy = 0; iy < static_cast<std::ptrdiff_t>(grid.ny);
       ++iy) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      const Vec2 p{grid.x0 + grid.pitch * static_cast<double>(ix),
                   grid.y0 + grid.pitch * static_cast<double>(iy)};
      const double g1 = detection_probability(scene.emitter1, p, psf) +
                        detection_probability(scene.emitter2, p, psf);
      out.values[static_cast<std::size_t>(iy) * grid.nx + ix] = g1 / peak1;
    }
  }
  return out;
}

std::size_t count_local_maxima(const IntensityGrid& grid,
                               double threshold_frac) {
  const std::size_t nx = grid.spec.nx;
  const std::size_t ny = grid.spec.ny;
  const double peak = *std::max_element(grid.values.begin(), grid.values.end());
  const double threshold = threshold_frac * peak;
  std::size_t count = 0;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double v = grid.at(ix, iy);
      if (v <= threshold) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1 && is_max; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const std::ptrdiff_t jx = static_cast<std::ptrdiff_t>(ix) + dx;
          const std::ptrdiff_t jy = static_cast<std::ptrdiff_t>(iy) + dy;
          if (jx < 0 || jy < 0 || jx >= static_cast<std::ptrdiff_t>(nx) ||
              jy >= static_cast<std::ptrdiff_t>(ny)) {
            continue;
          }
          if (grid.at(static_cast<std::size_t>(jx),
                      static_cast<std::size_t>(jy)) >= v) {
            is_max = false;
          }
        }
      }
      if (is_max) ++count;
    }
  }
  return count;
}

}  // namespace qcm
