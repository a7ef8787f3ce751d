#pragma once

#include <cstdint>
#include <vector>

#include "wami/rf.hpp"
#include "wami/targets.hpp"

namespace wami {

// Otsu over 256 bins spanning the observed value range. A single-valued map
// has no split; callers treat that as "no detections".
struct OtsuResult {
  float threshold = 0.0f;
  bool separable = false;
};

OtsuResult otsu_threshold(const Heatmap& heatmap);

// Foreground = value strictly above the threshold.
std::vector<std::uint8_t> threshold_map(const Heatmap& heatmap, float threshold);

struct Component {
  std::vector<std::pair<int, int>> pixels;  // (x, y) at heatmap resolution
  int area = 0;
  Rect bbox;
  double cx = 0.0, cy = 0.0;  // centroid
};

// 8-connected labeling of a binary map.
std::vector<Component> connected_components(const std::vector<std::uint8_t>& binary, int width,
                                            int height);

struct Detection {
  double x = 0.0;  // input pixels
  double y = 0.0;
  float score = 0.0f;
};

inline constexpr int kDefaultMinArea = 100;  // input pixels
inline constexpr int kDefaultMaxArea = 900;

// Components below min_area (at input scale, i.e. heatmap area * 4^d) are
// dropped; above max_area they are split by greedy placement of
// vehicle-sized discs at successive response maxima. Coordinates come back
// at input scale (heatmap coords * 2^d).
std::vector<Detection> extract_detections(const std::vector<Component>& components,
                                          const Heatmap& heatmap, int min_area = kDefaultMinArea,
                                          int max_area = kDefaultMaxArea);

// Full chain at a fixed threshold.
std::vector<Detection> detections_at_threshold(const Heatmap& heatmap, float threshold,
                                               int min_area = kDefaultMinArea,
                                               int max_area = kDefaultMaxArea);

// Merge detections closer than radius (keep the higher score).
std::vector<Detection> merge_close_detections(std::vector<Detection> dets, double radius);

}  // namespace wami
