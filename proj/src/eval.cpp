#include "wami/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wami {

MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<GtPoint>& gts,
                             double radius) {
  if (radius <= 0.0) throw std::invalid_argument("match_detections: radius must be > 0");
  struct Cand {
    double dist;
    int det, gt;
  };
  std::vector<Cand> cands;
  for (int di = 0; di < static_cast<int>(dets.size()); ++di) {
    for (int gi = 0; gi < static_cast<int>(gts.size()); ++gi) {
      const double dx = dets[di].x - gts[gi].x;
      const double dy = dets[di].y - gts[gi].y;
      const double dist = std::sqrt(dx * dx + dy * dy);
      if (dist <= radius) cands.push_back({dist, di, gi});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.det != b.det) return a.det < b.det;
    return a.gt < b.gt;
  });

  MatchResult r;
  std::vector<std::uint8_t> det_used(dets.size(), 0), gt_used(gts.size(), 0);
  for (const Cand& c : cands) {
    if (det_used[c.det] || gt_used[c.gt]) continue;
    det_used[c.det] = 1;
    gt_used[c.gt] = 1;
    r.tp.push_back({c.det, c.gt, c.dist});
  }
  for (int di = 0; di < static_cast<int>(dets.size()); ++di) {
    if (!det_used[di]) r.fp.push_back(di);
  }
  for (int gi = 0; gi < static_cast<int>(gts.size()); ++gi) {
    if (!gt_used[gi]) r.fn.push_back(gi);
  }
  return r;
}

EvalReport score_match(const MatchResult& match) { return score_matches({match}); }

EvalReport score_matches(const std::vector<MatchResult>& matches) {
  EvalReport r;
  double dist_sum = 0.0;
  for (const MatchResult& m : matches) {
    r.tp += static_cast<long>(m.tp.size());
    r.fp += static_cast<long>(m.fp.size());
    r.fn += static_cast<long>(m.fn.size());
    for (const auto& p : m.tp) dist_sum += p.distance;
  }
  r.precision = (r.tp + r.fp) > 0 ? static_cast<double>(r.tp) / (r.tp + r.fp) : 0.0;
  r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.mean_tp_dist = r.tp > 0 ? dist_sum / r.tp : 0.0;
  return r;
}

std::vector<EvalReport> sweep(const std::vector<Heatmap>& heatmaps,
                              const std::vector<std::vector<GtPoint>>& gts,
                              const std::vector<float>& thresholds, double radius, int min_area,
                              int max_area) {
  if (heatmaps.size() != gts.size()) {
    throw std::invalid_argument("sweep: heatmap/ground-truth frame count mismatch");
  }
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw std::invalid_argument("sweep: thresholds must be sorted ascending");
  }
  std::vector<EvalReport> out;
  out.reserve(thresholds.size());
  for (float tau : thresholds) {
    std::vector<MatchResult> matches(heatmaps.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t f = 0; f < heatmaps.size(); ++f) {
      const auto dets = detections_at_threshold(heatmaps[f], tau, min_area, max_area);
      matches[f] = match_detections(dets, gts[f], radius);
    }
    EvalReport r = score_matches(matches);
    r.threshold = tau;
    out.push_back(r);
  }
  return out;
}

}  // namespace wami
