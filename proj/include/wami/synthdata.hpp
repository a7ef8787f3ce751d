#pragma once

#include <cstdint>
#include <vector>

#include "wami/loss.hpp"
#include "wami/targets.hpp"
#include "wami/train.hpp"

namespace wami {

// Desk-scale stand-in for registered WAMI imagery: gray textured background,
// roads with moving/stopped/parked vehicles around 9x18 px, camera-gain
// jumps, residual registration jitter, sweeping mosaic seams and parallax
// smears. Everything derives from the seed.
struct SceneConfig {
  int width = 1024;
  int height = 1024;
  int frame_count = 6;
  int frames_per_stack = 5;
  int vehicle_count = 60;
  double vehicle_length_mean = 18.0;
  double vehicle_length_std = 2.0;
  double vehicle_width_mean = 9.0;
  double vehicle_width_std = 1.0;
  double speed_mean = 22.0;  // px per frame at the ~1.25 Hz frame spacing
  double speed_std = 5.0;
  double stopped_fraction = 0.15;
  double camouflage_fraction = 0.25;  // vehicle tone matches the background
  double gain_jump_amplitude = 0.12;
  double gain_jump_prob = 0.25;  // per frame
  double registration_jitter_sigma = 0.6;  // px
  int seam_count = 1;
  int parallax_count = 6;
  int road_count = 5;
  std::uint64_t seed = 1;
};

struct SyntheticScene {
  SceneConfig cfg;
  int width = 0, height = 0, frame_count = 0;
  std::vector<std::vector<std::uint8_t>> frames;                 // grayscale, row-major
  std::vector<std::vector<PointAnnotation>> annotations;         // per frame, all vehicles
  std::vector<std::vector<PointAnnotation>> annotations_moving;  // < 15 px over 5 frames removed
  std::vector<std::uint8_t> road_mask;

  // per-vehicle ground truth used by tests
  std::vector<double> vehicle_speeds;        // px per frame
  std::vector<double> vehicle_footprints;    // rendered px (frame 0, coverage >= 0.5)
  std::vector<int> gain_jump_frames;

  const std::vector<PointAnnotation>& frame_points(int frame, bool moving_only) const {
    return moving_only ? annotations_moving[frame] : annotations[frame];
  }
};

SyntheticScene generate_scene(const SceneConfig& cfg);

// A vehicle counts as moving when it displaces >= 15 px over 5 frames
// (4 inter-frame steps).
bool is_moving_speed(double px_per_frame);

// Training chips cut from scenes: frame stacks of n_frames around each valid
// center frame, tiled at the given size/stride; tiles without a vehicle in
// the center frame are excluded when require_vehicle is set.
struct ChipSpec {
  int chip = 128;
  int stride = 128;
  int n_frames = 5;
  int d = 1;
  double sigma = kFoveaTargetSigma;
  bool require_vehicle = true;
  bool moving_only = false;
  LossKind loss = LossKind::Euclidean;
};

class ChipDataset : public Dataset<float> {
 public:
  ChipDataset(std::vector<const SyntheticScene*> scenes, ChipSpec spec);

  std::size_t size() const override { return chips_.size(); }
  void fetch(std::size_t idx, Sample<float>& out) const override;

  struct ChipRef {
    int scene = 0;
    int center_frame = 0;
    int x0 = 0;
    int y0 = 0;
  };
  const std::vector<ChipRef>& chips() const { return chips_; }
  const ChipSpec& spec() const { return spec_; }

 private:
  std::vector<const SyntheticScene*> scenes_;
  ChipSpec spec_;
  std::vector<ChipRef> chips_;
};

}  // namespace wami
