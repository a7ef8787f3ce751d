#pragma once

// Independent reference implementations the test suites check the library
// against. Everything here is deliberately naive and kept separate from the
// code paths under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "wami/conv.hpp"
#include "wami/postprocess.hpp"
#include "wami/tensor.hpp"

namespace oracles {

// Direct 6-nested-loop cross-correlation with the same padding arithmetic.
inline wami::Tensor<double> naive_conv2d(const wami::Tensor<double>& input,
                                         const wami::ConvLayer<double>& layer) {
  const wami::Bchw in = wami::bchw(input);
  const int M = layer.kernels.dim(0);
  const int kh = layer.kernels.dim(2), kw = layer.kernels.dim(3);
  const int pad_h = layer.padding == wami::Padding::Same ? (kh - 1) / 2 : 0;
  const int pad_w = layer.padding == wami::Padding::Same ? (kw - 1) / 2 : 0;
  const int s = layer.stride;
  const int oh = (in.h + 2 * pad_h - kh) / s + 1;
  const int ow = (in.w + 2 * pad_w - kw) / s + 1;
  wami::Tensor<double> out(input.rank() == 4 ? std::vector<int>{in.b, M, oh, ow}
                                             : std::vector<int>{M, oh, ow});
  for (int b = 0; b < in.b; ++b) {
    for (int m = 0; m < M; ++m) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double acc = layer.bias[m];
          for (int c = 0; c < in.c; ++c) {
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * s - pad_h + ky;
                const int ix = ox * s - pad_w + kx;
                if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                const std::size_t ii =
                    ((static_cast<std::size_t>(b) * in.c + c) * in.h + iy) * in.w + ix;
                acc += input[ii] * layer.kernels.at(m, c, ky, kx);
              }
            }
          }
          const std::size_t oi = ((static_cast<std::size_t>(b) * M + m) * oh + oy) * ow + ox;
          out[oi] = acc;
        }
      }
    }
  }
  return out;
}

// Central finite differences over every element of every listed tensor.
// Error metric: |analytic - numeric| / max(1, |analytic|, |numeric|), i.e.
// absolute below magnitude 1, relative above.
struct FdReport {
  double max_err = 0.0;
  long checked = 0;
};

inline FdReport fd_check(const std::vector<wami::Tensor<double>*>& tensors,
                         const std::vector<const wami::Tensor<double>*>& analytic,
                         const std::function<double()>& loss_fn, double h = 1e-6) {
  FdReport rep;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    wami::Tensor<double>& t = *tensors[k];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + h;
      const double up = loss_fn();
      t[i] = saved - h;
      const double down = loss_fn();
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = (*analytic[k])[i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      rep.max_err = std::max(rep.max_err, err);
      ++rep.checked;
    }
  }
  return rep;
}

// Recursive flood fill, 8-connected.
inline void flood_rec(const std::vector<std::uint8_t>& map, int w, int h, int x, int y,
                      std::vector<int>& labels, int label) {
  if (x < 0 || y < 0 || x >= w || y >= h) return;
  const std::size_t i = static_cast<std::size_t>(y) * w + x;
  if (!map[i] || labels[i] != 0) return;
  labels[i] = label;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx != 0 || dy != 0) flood_rec(map, w, h, x + dx, y + dy, labels, label);
    }
  }
}

inline std::vector<std::vector<std::pair<int, int>>> flood_fill_components(
    const std::vector<std::uint8_t>& map, int w, int h) {
  std::vector<int> labels(map.size(), 0);
  int next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (map[static_cast<std::size_t>(y) * w + x] && labels[static_cast<std::size_t>(y) * w + x] == 0) {
        flood_rec(map, w, h, x, y, labels, ++next);
      }
    }
  }
  std::vector<std::vector<std::pair<int, int>>> comps(next);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int l = labels[static_cast<std::size_t>(y) * w + x];
      if (l > 0) comps[l - 1].emplace_back(x, y);
    }
  }
  for (auto& c : comps) std::sort(c.begin(), c.end());
  std::sort(comps.begin(), comps.end());
  return comps;
}

// Exhaustive optimal one-to-one matching: maximize pair count, then minimize
// total distance. Feasible pairs only (distance <= radius).
struct BruteMatch {
  int pairs = 0;
  double total_dist = 0.0;
};

inline void brute_match_rec(const std::vector<std::vector<double>>& dist, std::size_t det,
                            std::vector<std::uint8_t>& gt_used, int pairs, double total,
                            BruteMatch& best) {
  if (det == dist.size()) {
    if (pairs > best.pairs || (pairs == best.pairs && total < best.total_dist - 1e-12)) {
      best.pairs = pairs;
      best.total_dist = total;
    }
    return;
  }
  brute_match_rec(dist, det + 1, gt_used, pairs, total, best);  // leave det unmatched
  for (std::size_t g = 0; g < gt_used.size(); ++g) {
    if (gt_used[g] || dist[det][g] < 0.0) continue;
    gt_used[g] = 1;
    brute_match_rec(dist, det + 1, gt_used, pairs + 1, total + dist[det][g], best);
    gt_used[g] = 0;
  }
}

inline BruteMatch brute_force_match(const std::vector<wami::Detection>& dets,
                                    const std::vector<std::pair<double, double>>& gts,
                                    double radius) {
  std::vector<std::vector<double>> dist(dets.size(), std::vector<double>(gts.size(), -1.0));
  for (std::size_t d = 0; d < dets.size(); ++d) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double dd = std::hypot(dets[d].x - gts[g].first, dets[d].y - gts[g].second);
      if (dd <= radius) dist[d][g] = dd;
    }
  }
  BruteMatch best;
  best.pairs = -1;
  std::vector<std::uint8_t> used(gts.size(), 0);
  brute_match_rec(dist, 0, used, 0, 0.0, best);
  return best;
}

// Between-class variance of a value split, computed directly from the data.
inline double split_variance(const std::vector<float>& values, float threshold) {
  double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
  for (float v : values) {
    if (v > threshold) {
      n1 += 1;
      s1 += v;
    } else {
      n0 += 1;
      s0 += v;
    }
  }
  if (n0 == 0 || n1 == 0) return -1.0;
  const double mu0 = s0 / n0, mu1 = s1 / n1;
  return n0 * n1 * (mu0 - mu1) * (mu0 - mu1);
}

}  // namespace oracles
