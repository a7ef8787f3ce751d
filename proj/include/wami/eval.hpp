#pragma once

#include <vector>

#include "wami/postprocess.hpp"
#include "wami/targets.hpp"

namespace wami {

struct GtPoint {
  double x = 0.0;
  double y = 0.0;
};

inline constexpr double kMatchRadiusPx = 20.0;  // 5 meters at 1/4 m per pixel

struct MatchResult {
  struct TpPair {
    int det = -1;
    int gt = -1;
    double distance = 0.0;
  };
  std::vector<TpPair> tp;
  std::vector<int> fp;  // detection indices
  std::vector<int> fn;  // ground-truth indices
};

// Greedy one-to-one matching in ascending distance over all (det, gt) pairs
// within the radius (inclusive). Ties break on lower detection index.
MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<GtPoint>& gts,
                             double radius = kMatchRadiusPx);

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_tp_dist = 0.0;  // pixels
  long tp = 0, fp = 0, fn = 0;
  double threshold = 0.0;
};

EvalReport score_match(const MatchResult& match);

// Accumulate counts over several frames before scoring.
EvalReport score_matches(const std::vector<MatchResult>& matches);

// One report per threshold, each running the postprocess -> match -> score
// chain over all frames.
std::vector<EvalReport> sweep(const std::vector<Heatmap>& heatmaps,
                              const std::vector<std::vector<GtPoint>>& gts,
                              const std::vector<float>& thresholds, double radius = kMatchRadiusPx,
                              int min_area = kDefaultMinArea, int max_area = kDefaultMaxArea);

}  // namespace wami
