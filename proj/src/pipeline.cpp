#include "wami/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace wami {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Tensor<float> stack_to_tensor(const FrameStack& stack) {
  Tensor<float> t({static_cast<int>(stack.frames.size()), stack.height, stack.width});
  for (std::size_t f = 0; f < stack.frames.size(); ++f) {
    const auto& frame = stack.frames[f];
    float* dst = t.ptr() + f * frame.size();
    for (std::size_t i = 0; i < frame.size(); ++i) dst[i] = frame[i] / 255.0f;
  }
  return t;
}

// 128x128 crop across all frames, zero-padded outside the frame bounds.
Tensor<float> extract_chip(const FrameStack& stack, int ox, int oy, int chip) {
  Tensor<float> t({static_cast<int>(stack.frames.size()), chip, chip});
  for (std::size_t f = 0; f < stack.frames.size(); ++f) {
    const auto& frame = stack.frames[f];
    for (int y = 0; y < chip; ++y) {
      const int sy = oy + y;
      if (sy < 0 || sy >= stack.height) continue;
      float* dst = t.ptr() + (f * chip + y) * static_cast<std::size_t>(chip);
      const std::uint8_t* src = frame.data() + static_cast<std::size_t>(sy) * stack.width;
      const int x_lo = std::max(0, -ox);
      const int x_hi = std::min(chip, stack.width - ox);
      for (int x = x_lo; x < x_hi; ++x) dst[x] = src[ox + x] / 255.0f;
    }
  }
  return t;
}

struct ChipPlacement {
  int ox = 0, oy = 0;  // input pixels, even so the half-res grids align
};

ChipPlacement chip_placement(const Rect& rect, int chip) {
  const double cx = 0.5 * (rect.x0 + rect.x1);
  const double cy = 0.5 * (rect.y0 + rect.y1);
  auto floor_even = [](double v) {
    int i = static_cast<int>(std::floor(v));
    return i - (i & 1);
  };
  return {floor_even(cx - chip / 2.0 + 0.5), floor_even(cy - chip / 2.0 + 0.5)};
}

// Fine pass over the given proposals; per-pixel max stitch at d=1.
Heatmap run_fovea(const FrameStack& stack, const Network<float>& fovea,
                  const std::vector<Roobi>& proposals, const PipelineConfig& cfg, double* wall_s) {
  const int d = fovea.spec().downsample_exponent();
  Heatmap stitched;
  stitched.width = downsampled_dim(stack.width, d);
  stitched.height = downsampled_dim(stack.height, d);
  stitched.d = d;
  stitched.values.assign(static_cast<std::size_t>(stitched.width) * stitched.height, 0.0f);

  const auto t0 = Clock::now();
  std::vector<Heatmap> chips(proposals.size());
  std::vector<ChipPlacement> places(proposals.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    places[i] = chip_placement(proposals[i].rect, cfg.chip_size);
    const Tensor<float> chip = extract_chip(stack, places[i].ox, places[i].oy, cfg.chip_size);
    chips[i] = infer(fovea, chip);
  }
  if (wall_s != nullptr) *wall_s = seconds_since(t0);

  const int scale = 1 << d;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const Heatmap& hm = chips[i];
    const int gx0 = places[i].ox / scale, gy0 = places[i].oy / scale;
    for (int y = 0; y < hm.height; ++y) {
      const int gy = gy0 + y;
      if (gy < 0 || gy >= stitched.height) continue;
      for (int x = 0; x < hm.width; ++x) {
        const int gx = gx0 + x;
        if (gx < 0 || gx >= stitched.width) continue;
        float& dst = stitched.at(gy, gx);
        dst = std::max(dst, hm.at(y, x));
      }
    }
  }
  return stitched;
}

std::vector<Detection> postprocess_stitched(const Heatmap& stitched, const PipelineConfig& cfg,
                                            float* threshold_used) {
  float tau = 0.0f;
  if (cfg.fixed_threshold.has_value()) {
    tau = *cfg.fixed_threshold;
  } else {
    const OtsuResult otsu = otsu_threshold(stitched);
    if (!otsu.separable) {
      if (threshold_used != nullptr) *threshold_used = otsu.threshold;
      return {};
    }
    tau = otsu.threshold;
  }
  if (threshold_used != nullptr) *threshold_used = tau;
  auto dets = detections_at_threshold(stitched, tau, cfg.min_area, cfg.max_area);
  return merge_close_detections(std::move(dets), cfg.merge_radius);
}

std::vector<Roobi> all_blocks(const NetworkSpec& cluster_spec, int in_h, int in_w) {
  const auto [oh, ow] = cluster_spec.output_dims(in_h, in_w);
  std::vector<Roobi> out;
  for (int by = 0; by < block_grid_dim(oh); ++by) {
    for (int bx = 0; bx < block_grid_dim(ow); ++bx) {
      Roobi r;
      r.block_x = bx;
      r.block_y = by;
      r.score = 0.0f;
      const Rect block{bx * kBlockSize, by * kBlockSize,
                       std::min(ow - 1, bx * kBlockSize + kBlockSize - 1),
                       std::min(oh - 1, by * kBlockSize + kBlockSize - 1)};
      r.rect = receptive_field(cluster_spec, block, in_h, in_w);
      out.push_back(r);
    }
  }
  return out;
}

int total_block_count(const NetworkSpec& cluster_spec, int in_h, int in_w) {
  const auto [oh, ow] = cluster_spec.output_dims(in_h, in_w);
  return block_grid_dim(oh) * block_grid_dim(ow);
}

}  // namespace

void FrameStack::validate() const {
  if (frames.empty() || frames.size() % 2 == 0) {
    throw std::invalid_argument("FrameStack: frame count must be odd");
  }
  if (center_index != static_cast<int>(frames.size() - 1) / 2) {
    throw std::invalid_argument("FrameStack: center index must be (N-1)/2");
  }
  for (const auto& f : frames) {
    if (f.size() != static_cast<std::size_t>(width) * height) {
      throw std::invalid_argument("FrameStack: frame dims mismatch");
    }
  }
}

FrameStack make_stack(const std::vector<std::vector<std::uint8_t>>& sequence, int width, int height,
                      int center_frame, int n_frames) {
  if (n_frames % 2 == 0) throw std::invalid_argument("make_stack: n_frames must be odd");
  const int half = (n_frames - 1) / 2;
  if (center_frame - half < 0 || center_frame + half >= static_cast<int>(sequence.size())) {
    throw std::invalid_argument("make_stack: stack does not fit the sequence");
  }
  FrameStack s;
  s.width = width;
  s.height = height;
  s.center_index = half;
  s.frame_id = center_frame;
  for (int f = center_frame - half; f <= center_frame + half; ++f) s.frames.push_back(sequence[f]);
  s.validate();
  return s;
}

Heatmap cluster_heatmap(const FrameStack& stack, const Network<float>& cluster,
                        const PipelineConfig& cfg) {
  const NetworkSpec& spec = cluster.spec();
  const int d = spec.downsample_exponent();
  const int scale = 1 << d;
  const auto [oh, ow] = spec.output_dims(stack.height, stack.width);

  if (stack.width <= cfg.cluster_tile && stack.height <= cfg.cluster_tile) {
    Heatmap hm = infer(cluster, stack_to_tensor(stack));
    return hm;
  }

  // Overlapping tiles; origins on the output grid, per-pixel max stitch.
  Heatmap out;
  out.width = ow;
  out.height = oh;
  out.d = d;
  out.values.assign(static_cast<std::size_t>(ow) * oh, 0.0f);
  const int tile = cfg.cluster_tile - (cfg.cluster_tile % (kBlockSize * scale));
  const int margin = kBlockSize * scale;  // covers the reference net RF margin
  const int step = tile - 2 * margin;
  if (step <= 0) throw std::invalid_argument("cluster_heatmap: tile too small for the overlap");

  std::vector<std::pair<int, int>> origins;
  for (int y = 0;; y += step) {
    int oy = std::min(y, std::max(0, stack.height - tile));
    for (int x = 0;; x += step) {
      int ox = std::min(x, std::max(0, stack.width - tile));
      origins.emplace_back(ox - ox % scale, oy - oy % scale);
      if (x >= stack.width - tile) break;
    }
    if (y >= stack.height - tile) break;
  }

  for (const auto& [ox, oy] : origins) {
    FrameStack sub;
    sub.width = std::min(tile, stack.width - ox);
    sub.height = std::min(tile, stack.height - oy);
    sub.center_index = stack.center_index;
    sub.frame_id = stack.frame_id;
    for (const auto& f : stack.frames) {
      std::vector<std::uint8_t> crop(static_cast<std::size_t>(sub.width) * sub.height);
      for (int y = 0; y < sub.height; ++y) {
        std::copy_n(f.data() + static_cast<std::size_t>(oy + y) * stack.width + ox, sub.width,
                    crop.data() + static_cast<std::size_t>(y) * sub.width);
      }
      sub.frames.push_back(std::move(crop));
    }
    const Heatmap hm = infer(cluster, stack_to_tensor(sub));
    const int gx0 = ox / scale, gy0 = oy / scale;
    for (int y = 0; y < hm.height && gy0 + y < oh; ++y) {
      for (int x = 0; x < hm.width && gx0 + x < ow; ++x) {
        float& dst = out.at(gy0 + y, gx0 + x);
        dst = std::max(dst, hm.at(y, x));
      }
    }
  }
  return out;
}

DetectResult detect_frame(const FrameStack& stack, const Network<float>& cluster,
                          const Network<float>& fovea, const PipelineConfig& cfg) {
  stack.validate();
  if (static_cast<int>(stack.frames.size()) != cluster.spec().in_frames ||
      static_cast<int>(stack.frames.size()) != fovea.spec().in_frames) {
    throw std::invalid_argument("detect_frame: stack frame count does not match the checkpoints");
  }
  const auto t0 = Clock::now();
  DetectResult r;
  r.cluster_map = cluster_heatmap(stack, cluster, cfg);
  const std::vector<Roobi> proposals =
      propose(r.cluster_map, cluster.spec(), cfg.tau_gate, stack.height, stack.width);
  r.stitched = run_fovea(stack, fovea, proposals, cfg, &r.fovea_wall_s);
  r.detections = postprocess_stitched(r.stitched, cfg, &r.threshold_used);
  const int total = total_block_count(cluster.spec(), stack.height, stack.width);
  const double per_chip =
      proposals.empty() ? 0.0 : r.fovea_wall_s / static_cast<double>(proposals.size());
  r.speedup = speedup_report(static_cast<int>(proposals.size()), total, per_chip, seconds_since(t0));
  return r;
}

DetectResult exhaustive_scan(const FrameStack& stack, const NetworkSpec& cluster_spec,
                             const Network<float>& fovea, const PipelineConfig& cfg) {
  stack.validate();
  const auto t0 = Clock::now();
  DetectResult r;
  const std::vector<Roobi> blocks = all_blocks(cluster_spec, stack.height, stack.width);
  r.stitched = run_fovea(stack, fovea, blocks, cfg, &r.fovea_wall_s);
  r.detections = postprocess_stitched(r.stitched, cfg, &r.threshold_used);
  r.speedup = speedup_report(static_cast<int>(blocks.size()), static_cast<int>(blocks.size()),
                             blocks.empty() ? 0.0 : r.fovea_wall_s / blocks.size(),
                             seconds_since(t0));
  return r;
}

}  // namespace wami
