#include "wami/rf.hpp"

#include <algorithm>
#include <stdexcept>

namespace wami {

RfDescriptor receptive_field_descriptor(const NetworkSpec& spec) {
  RfDescriptor d;
  for (const LayerSpec& l : spec.layers) {
    int k = 0, s = 1, pad = 0;
    if (l.kind == LayerKind::Conv) {
      k = l.kernel;
      s = l.stride;
      pad = (l.kernel - 1) / 2;
    } else if (l.kind == LayerKind::Pool) {
      k = 2;
      s = 2;
      pad = 0;  // odd dims pad with -inf at the end, which shifts nothing
    } else {
      continue;
    }
    d.off_h -= pad * d.jump_h;
    d.off_w -= pad * d.jump_w;
    d.rf_h += (k - 1) * d.jump_h;
    d.rf_w += (k - 1) * d.jump_w;
    d.jump_h *= s;
    d.jump_w *= s;
  }
  return d;
}

Rect receptive_field(const NetworkSpec& spec, const Rect& out_region, int in_h, int in_w) {
  const auto [oh, ow] = spec.output_dims(in_h, in_w);
  if (out_region.x0 < 0 || out_region.y0 < 0 || out_region.x1 >= ow || out_region.y1 >= oh ||
      out_region.x0 > out_region.x1 || out_region.y0 > out_region.y1) {
    throw std::invalid_argument("receptive_field: out_region outside the output grid");
  }
  const RfDescriptor d = receptive_field_descriptor(spec);
  Rect r;
  r.x0 = std::max(0, out_region.x0 * d.jump_w + d.off_w);
  r.y0 = std::max(0, out_region.y0 * d.jump_h + d.off_h);
  r.x1 = std::min(in_w - 1, out_region.x1 * d.jump_w + d.off_w + d.rf_w - 1);
  r.y1 = std::min(in_h - 1, out_region.y1 * d.jump_h + d.off_h + d.rf_h - 1);
  return r;
}

int block_grid_dim(int out_dim) { return (out_dim + kBlockSize - 1) / kBlockSize; }

std::vector<Roobi> propose(const Heatmap& cluster_out, const NetworkSpec& spec, float tau_gate,
                           int in_h, int in_w) {
  if (tau_gate < 0.0f || tau_gate > 1.0f) {
    throw std::invalid_argument("propose: tau_gate must be in [0,1]");
  }
  const auto [oh, ow] = spec.output_dims(in_h, in_w);
  if (cluster_out.width != ow || cluster_out.height != oh) {
    throw std::invalid_argument("propose: heatmap dims do not match the spec output grid");
  }
  const int bx_n = block_grid_dim(ow);
  const int by_n = block_grid_dim(oh);
  std::vector<Roobi> out;
  for (int by = 0; by < by_n; ++by) {
    for (int bx = 0; bx < bx_n; ++bx) {
      const int x0 = bx * kBlockSize, y0 = by * kBlockSize;
      const int x1 = std::min(ow - 1, x0 + kBlockSize - 1);
      const int y1 = std::min(oh - 1, y0 + kBlockSize - 1);
      float score = 0.0f;
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) score = std::max(score, cluster_out.at(y, x));
      }
      if (score >= tau_gate) {
        Roobi r;
        r.rect = receptive_field(spec, {x0, y0, x1, y1}, in_h, in_w);
        r.block_x = bx;
        r.block_y = by;
        r.score = score;
        out.push_back(r);
      }
    }
  }
  return out;
}

SpeedupReport speedup_report(int proposed, int total_blocks, double per_chip_cost_s, double wall_s) {
  if (total_blocks < 1) throw std::invalid_argument("speedup_report: total_blocks must be >= 1");
  SpeedupReport r;
  r.proposed = proposed;
  r.total_blocks = total_blocks;
  r.skip_fraction = 1.0 - static_cast<double>(proposed) / static_cast<double>(total_blocks);
  r.est_time_saved_s = (total_blocks - proposed) * per_chip_cost_s;
  r.wall_s = wall_s;
  return r;
}

}  // namespace wami
