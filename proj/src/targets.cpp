#include "wami/targets.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace wami {

namespace {
constexpr double kPi = 3.14159265358979323846;
// Per-point evaluation window in units of sigma. Tail mass beyond 6 sigma is
// ~1e-8, far under the 1e-3 unit-mass tolerance.
constexpr double kWindowSigmas = 6.0;
}  // namespace

void PointAnnotations::validate() const {
  std::set<std::pair<int, int>> seen;
  for (const PointAnnotation& p : points) {
    if (p.x < 0 || p.x >= width || p.y < 0 || p.y >= height) {
      throw std::invalid_argument("annotation out of bounds: (" + std::to_string(p.x) + "," +
                                  std::to_string(p.y) + ")");
    }
    if (!seen.insert({p.frame_id, p.object_id}).second) {
      throw std::invalid_argument("duplicate object_id " + std::to_string(p.object_id) + " in frame " +
                                  std::to_string(p.frame_id));
    }
  }
}

float Heatmap::max_value() const {
  float m = 0.0f;
  for (float v : values) m = std::max(m, v);
  return m;
}

Heatmap make_heatmap(const std::vector<PointAnnotation>& points, int input_width, int input_height,
                     int d, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("make_heatmap: sigma must be > 0");
  if (d < 0) throw std::invalid_argument("make_heatmap: d must be >= 0");
  Heatmap h;
  h.width = downsampled_dim(input_width, d);
  h.height = downsampled_dim(input_height, d);
  h.d = d;
  h.sigma = sigma;

  // Accumulate in double; contributions are functions of the (dx,dy) offsets
  // only, so integer-cell shifts of all points translate the map exactly.
  std::vector<double> acc(static_cast<std::size_t>(h.width) * h.height, 0.0);
  const double amp = 1.0 / (2.0 * kPi * sigma * sigma);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const double scale = static_cast<double>(1 << d);
  const int win = static_cast<int>(std::ceil(kWindowSigmas * sigma));

  for (const PointAnnotation& p : points) {
    const double cx = p.x / scale;
    const double cy = p.y / scale;
    const int x0 = std::max(0, static_cast<int>(std::floor(cx)) - win);
    const int x1 = std::min(h.width - 1, static_cast<int>(std::ceil(cx)) + win);
    const int y0 = std::max(0, static_cast<int>(std::floor(cy)) - win);
    const int y1 = std::min(h.height - 1, static_cast<int>(std::ceil(cy)) + win);
    for (int y = y0; y <= y1; ++y) {
      const double dy = y - cy;
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx;
        acc[static_cast<std::size_t>(y) * h.width + x] += amp * std::exp(-(dx * dx + dy * dy) * inv2s2);
      }
    }
  }
  h.values.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    h.values[i] = static_cast<float>(std::min(acc[i], 1.0));
  }
  return h;
}

SegmentationMap make_segmentation(const Heatmap& heatmap, double tau_seg) {
  if (tau_seg <= 0.0 || tau_seg >= 1.0) {
    throw std::invalid_argument("make_segmentation: tau_seg must be in (0,1)");
  }
  SegmentationMap s;
  s.width = heatmap.width;
  s.height = heatmap.height;
  s.labels.resize(heatmap.values.size());
  for (std::size_t i = 0; i < heatmap.values.size(); ++i) {
    s.labels[i] = heatmap.values[i] >= tau_seg ? 1 : 0;
  }
  return s;
}

double gaussian_peak(double sigma) { return 1.0 / (2.0 * kPi * sigma * sigma); }

double default_tau_seg(double sigma) { return 0.25 * gaussian_peak(sigma); }

}  // namespace wami
