#pragma once

#include <vector>

#include "wami/netspec.hpp"
#include "wami/targets.hpp"

namespace wami {

struct Rect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
};

// Whole-net receptive-field descriptor in input pixels: output (0,0) sees
// input rows [off_h, off_h + rf_h - 1]; moving one output cell moves the
// window by jump. Derived by composing size' = size + (k-1)*jump,
// jump' = jump*stride over the spec's layers (same padding).
struct RfDescriptor {
  int rf_h = 1, rf_w = 1;
  int jump_h = 1, jump_w = 1;
  int off_h = 0, off_w = 0;
  double center0_h() const { return off_h + (rf_h - 1) / 2.0; }
  double center0_w() const { return off_w + (rf_w - 1) / 2.0; }
};

RfDescriptor receptive_field_descriptor(const NetworkSpec& spec);

// Tightest input rectangle influencing any output in out_region, clipped to
// the frame.
Rect receptive_field(const NetworkSpec& spec, const Rect& out_region, int in_h, int in_w);

// Input-space rectangle proposed by one 4x4 block of the coarse output grid.
struct Roobi {
  Rect rect;        // input pixels, clipped to frame
  int block_x = 0;  // block index in the 4x4 partition
  int block_y = 0;
  float score = 0.0f;  // max heatmap value in the block
};

inline constexpr int kBlockSize = 4;

// Number of 4x4 blocks (edge blocks smaller than 4x4 are kept).
int block_grid_dim(int out_dim);

// Partition the output grid into non-overlapping 4x4 blocks and emit a Roobi
// for every block whose max value >= tau_gate.
std::vector<Roobi> propose(const Heatmap& cluster_out, const NetworkSpec& spec, float tau_gate,
                           int in_h, int in_w);

struct SpeedupReport {
  int proposed = 0;
  int total_blocks = 0;
  double skip_fraction = 0.0;       // 1 - proposed/total
  double est_time_saved_s = 0.0;    // skipped blocks * per-chip cost
  double wall_s = 0.0;              // measured, when available
};

SpeedupReport speedup_report(int proposed, int total_blocks, double per_chip_cost_s = 0.0,
                             double wall_s = 0.0);

}  // namespace wami
