#pragma once

#include <optional>
#include <vector>

#include "wami/eval.hpp"
#include "wami/network.hpp"
#include "wami/postprocess.hpp"
#include "wami/rf.hpp"

namespace wami {

// N consecutive registered frames around the frame of interest.
struct FrameStack {
  std::vector<std::vector<std::uint8_t>> frames;
  int width = 0;
  int height = 0;
  int center_index = 0;  // (N-1)/2
  int frame_id = 0;      // id of the central frame in its source sequence

  void validate() const;
};

FrameStack make_stack(const std::vector<std::vector<std::uint8_t>>& sequence, int width, int height,
                      int center_frame, int n_frames);

struct PipelineConfig {
  float tau_gate = 0.0f;
  int chip_size = 128;
  std::optional<float> fixed_threshold;  // unset: Otsu at deployment
  int min_area = kDefaultMinArea;
  int max_area = kDefaultMaxArea;
  double merge_radius = 5.0;   // de-duplication across overlapping chip margins
  int cluster_tile = 1024;     // frames larger than this run as overlapping tiles
};

struct DetectResult {
  std::vector<Detection> detections;  // input-pixel coordinates
  SpeedupReport speedup;
  Heatmap stitched;     // fovea-resolution, zeros outside proposed regions
  Heatmap cluster_map;  // coarse proposal scores in [0,1] (empty for exhaustive)
  float threshold_used = 0.0f;
  double fovea_wall_s = 0.0;
};

// Two-stage pass: coarse net over the full frame, 4x4-block proposals above
// tau_gate, fine net on each proposed region, stitched heatmap, point
// extraction.
DetectResult detect_frame(const FrameStack& stack, const Network<float>& cluster,
                          const Network<float>& fovea, const PipelineConfig& cfg);

// Independent reference route: fine net over every block of the same grid,
// no coarse pass. tau_gate = 0 in detect_frame must match this exactly.
DetectResult exhaustive_scan(const FrameStack& stack, const NetworkSpec& cluster_spec,
                             const Network<float>& fovea, const PipelineConfig& cfg);

// Coarse-net scores over a frame of any size (tiled when needed).
Heatmap cluster_heatmap(const FrameStack& stack, const Network<float>& cluster,
                        const PipelineConfig& cfg);

}  // namespace wami
