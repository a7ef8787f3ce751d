#include "wami/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wami {

OtsuResult otsu_threshold(const Heatmap& heatmap) {
  if (heatmap.values.empty()) throw std::invalid_argument("otsu_threshold: empty heatmap");
  float lo = heatmap.values[0], hi = heatmap.values[0];
  for (float v : heatmap.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) return {lo, false};

  constexpr int kBins = 256;
  const double w = (static_cast<double>(hi) - lo) / kBins;
  std::vector<long> hist(kBins, 0);
  for (float v : heatmap.values) {
    int b = static_cast<int>((static_cast<double>(v) - lo) / w);
    hist[std::clamp(b, 0, kBins - 1)] += 1;
  }
  const double total = static_cast<double>(heatmap.values.size());
  double sum_all = 0.0;
  for (int i = 0; i < kBins; ++i) sum_all += static_cast<double>(i) * hist[i];

  // maximize between-class variance; average tied argmax bins
  double best = -1.0;
  long tie_sum = 0;
  int tie_n = 0;
  double w0 = 0.0, sum0 = 0.0;
  for (int t = 0; t < kBins - 1; ++t) {
    w0 += hist[t];
    sum0 += static_cast<double>(t) * hist[t];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best + 1e-12 * std::max(1.0, best)) {
      best = var;
      tie_sum = t;
      tie_n = 1;
    } else if (std::abs(var - best) <= 1e-12 * std::max(1.0, best)) {
      tie_sum += t;
      tie_n += 1;
    }
  }
  if (tie_n == 0) return {lo, false};
  const double t_mean = static_cast<double>(tie_sum) / tie_n;
  return {static_cast<float>(lo + (t_mean + 1.0) * w), true};
}

std::vector<std::uint8_t> threshold_map(const Heatmap& heatmap, float threshold) {
  std::vector<std::uint8_t> out(heatmap.values.size());
  for (std::size_t i = 0; i < heatmap.values.size(); ++i) {
    out[i] = heatmap.values[i] > threshold ? 1 : 0;
  }
  return out;
}

std::vector<Component> connected_components(const std::vector<std::uint8_t>& binary, int width,
                                            int height) {
  if (static_cast<std::size_t>(width) * height != binary.size()) {
    throw std::invalid_argument("connected_components: dims do not match map size");
  }
  std::vector<std::uint8_t> seen(binary.size(), 0);
  std::vector<Component> out;
  std::vector<int> stack;
  const int dx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  const int dy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * width + x;
      if (!binary[idx] || seen[idx]) continue;
      Component c;
      c.bbox = {x, y, x, y};
      stack.assign(1, static_cast<int>(idx));
      seen[idx] = 1;
      double sx = 0.0, sy = 0.0;
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cy = cur / width, cx = cur % width;
        c.pixels.emplace_back(cx, cy);
        sx += cx;
        sy += cy;
        c.bbox.x0 = std::min(c.bbox.x0, cx);
        c.bbox.x1 = std::max(c.bbox.x1, cx);
        c.bbox.y0 = std::min(c.bbox.y0, cy);
        c.bbox.y1 = std::max(c.bbox.y1, cy);
        for (int k = 0; k < 8; ++k) {
          const int nx = cx + dx[k], ny = cy + dy[k];
          if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
          const std::size_t nidx = static_cast<std::size_t>(ny) * width + nx;
          if (binary[nidx] && !seen[nidx]) {
            seen[nidx] = 1;
            stack.push_back(static_cast<int>(nidx));
          }
        }
      }
      c.area = static_cast<int>(c.pixels.size());
      c.cx = sx / c.area;
      c.cy = sy / c.area;
      out.push_back(std::move(c));
    }
  }
  return out;
}

namespace {

// Greedy disc placement at successive response maxima; radius comes from the
// median single-vehicle component area. Stops once the residue is below the
// small-response threshold.
void split_component(const Component& comp, const Heatmap& hm, double disc_radius_hm,
                     double min_area_hm, std::vector<Detection>& out) {
  std::vector<std::pair<int, int>> remaining = comp.pixels;
  const double r2 = disc_radius_hm * disc_radius_hm;
  while (static_cast<double>(remaining.size()) >= min_area_hm && !remaining.empty()) {
    std::size_t best = 0;
    float best_v = -1.0f;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      const float v = hm.at(remaining[i].second, remaining[i].first);
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    const auto [px, py] = remaining[best];
    const double scale = static_cast<double>(1 << hm.d);
    out.push_back({px * scale, py * scale, best_v});
    std::vector<std::pair<int, int>> next;
    next.reserve(remaining.size());
    for (const auto& [x, y] : remaining) {
      const double ddx = x - px, ddy = y - py;
      if (ddx * ddx + ddy * ddy > r2) next.emplace_back(x, y);
    }
    if (next.size() == remaining.size()) break;  // disc removed nothing
    remaining.swap(next);
  }
}

}  // namespace

std::vector<Detection> extract_detections(const std::vector<Component>& components,
                                          const Heatmap& heatmap, int min_area, int max_area) {
  const double area_scale = std::pow(4.0, heatmap.d);  // heatmap cells -> input px
  const double coord_scale = static_cast<double>(1 << heatmap.d);

  // Median area of plausible single-vehicle components, for the disc radius.
  std::vector<int> single_areas;
  for (const Component& c : components) {
    const double eff = c.area * area_scale;
    if (eff >= min_area && eff <= max_area) single_areas.push_back(c.area);
  }
  double disc_area_hm = std::max(1.0, min_area / area_scale);
  if (!single_areas.empty()) {
    std::nth_element(single_areas.begin(), single_areas.begin() + single_areas.size() / 2,
                     single_areas.end());
    disc_area_hm = single_areas[single_areas.size() / 2];
  }
  const double disc_radius_hm = std::sqrt(disc_area_hm / 3.14159265358979323846);

  std::vector<Detection> out;
  for (const Component& c : components) {
    const double eff = c.area * area_scale;
    if (eff < min_area) continue;
    if (eff > max_area) {
      split_component(c, heatmap, disc_radius_hm, min_area / area_scale, out);
      continue;
    }
    float score = 0.0f;
    for (const auto& [x, y] : c.pixels) score = std::max(score, heatmap.at(y, x));
    out.push_back({c.cx * coord_scale, c.cy * coord_scale, score});
  }
  return out;
}

std::vector<Detection> detections_at_threshold(const Heatmap& heatmap, float threshold, int min_area,
                                               int max_area) {
  const auto binary = threshold_map(heatmap, threshold);
  const auto comps = connected_components(binary, heatmap.width, heatmap.height);
  return extract_detections(comps, heatmap, min_area, max_area);
}

std::vector<Detection> merge_close_detections(std::vector<Detection> dets, double radius) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  std::vector<Detection> kept;
  const double r2 = radius * radius;
  for (const Detection& d : dets) {
    bool close = false;
    for (const Detection& k : kept) {
      const double ddx = d.x - k.x, ddy = d.y - k.y;
      if (ddx * ddx + ddy * ddy <= r2) {
        close = true;
        break;
      }
    }
    if (!close) kept.push_back(d);
  }
  return kept;
}

}  // namespace wami
