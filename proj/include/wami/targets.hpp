#pragma once

#include <cstdint>
#include <vector>

namespace wami {

struct PointAnnotation {
  int frame_id = 0;
  double x = 0.0;  // pixels
  double y = 0.0;
  int object_id = 0;
  bool is_moving = true;
};

struct PointAnnotations {
  int width = 0;
  int height = 0;
  std::vector<PointAnnotation> points;

  void validate() const;  // bounds + unique object_id per frame
};

// Single-channel grid of reals in [0,1], at 1/2^d of input resolution.
struct Heatmap {
  int width = 0;
  int height = 0;
  int d = 0;           // downsample exponent; grid = ceil(input / 2^d)
  double sigma = 0.0;  // Gaussian width at grid scale (informational)
  std::vector<float> values;

  float& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
  float max_value() const;
};

inline int downsampled_dim(int input_dim, int d) {
  const int f = 1 << d;
  return (input_dim + f - 1) / f;
}

// Sum of per-point Gaussians with amplitude 1/(2*pi*sigma^2), centered at
// (x/2^d, y/2^d) kept fractional, clipped at 1.
Heatmap make_heatmap(const std::vector<PointAnnotation>& points, int input_width, int input_height,
                     int d, double sigma);

struct SegmentationMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;  // {0,1}

  std::uint8_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

// Label 1 where H >= tau_seg.
SegmentationMap make_segmentation(const Heatmap& heatmap, double tau_seg);

// Default sigmas: coarse net targets at its d=4 grid, fine net at d=1.
inline constexpr double kClusterTargetSigma = 1.0;
inline constexpr double kFoveaTargetSigma = 2.0;

double gaussian_peak(double sigma);                 // 1/(2*pi*sigma^2)
double default_tau_seg(double sigma);               // quarter-peak

}  // namespace wami
