#include "wami/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wami/rng.hpp"

namespace wami {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMovingThresholdPx = 15.0;
constexpr int kMovingWindowSteps = 4;  // 5 frames

// Lattice value noise; pure function of (x, y, seed) so frames can be
// rendered in any order.
double lattice_hash(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  std::uint64_t z = seed ^ (static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL) ^
                    (static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4fULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

double value_noise(double x, double y, double scale, std::uint64_t seed) {
  const double fx = x / scale, fy = y / scale;
  const std::int64_t ix = static_cast<std::int64_t>(std::floor(fx));
  const std::int64_t iy = static_cast<std::int64_t>(std::floor(fy));
  const double tx = fx - ix, ty = fy - iy;
  const double sx = tx * tx * (3.0 - 2.0 * tx);
  const double sy = ty * ty * (3.0 - 2.0 * ty);
  const double v00 = lattice_hash(ix, iy, seed), v10 = lattice_hash(ix + 1, iy, seed);
  const double v01 = lattice_hash(ix, iy + 1, seed), v11 = lattice_hash(ix + 1, iy + 1, seed);
  return (v00 * (1 - sx) + v10 * sx) * (1 - sy) + (v01 * (1 - sx) + v11 * sx) * sy;
}

double background_tone(double x, double y, std::uint64_t seed) {
  double v = 0.45;
  v += 0.06 * (value_noise(x, y, 96.0, seed ^ 0x11) - 0.5);
  v += 0.04 * (value_noise(x, y, 37.0, seed ^ 0x22) - 0.5);
  v += 0.03 * (value_noise(x, y, 13.0, seed ^ 0x33) - 0.5);
  return v;
}

struct Road {
  double px, py;    // point on the centerline
  double dx, dy;    // unit direction
  double half_width;
  double length;    // span across the frame along the direction
  double s_min;     // param range covering the frame
};

struct Vehicle {
  int road = 0;
  double lane_offset = 0.0;
  double s0 = 0.0;      // centerline parameter at frame 0
  double speed = 0.0;   // signed px/frame along the road direction
  double length = 18.0;
  double width = 9.0;
  double angle = 0.0;
  double tone = 0.5;
  bool camouflaged = false;
  double camo_ox = 0.0, camo_oy = 0.0;
};

struct Distractor {
  double x0, y0;
  double vx, vy;
  double length, width, angle;
  double tone;
};

struct Seam {
  double x0;
  double vx;      // sweep speed px/frame
  double gain;    // applied left of the seam
};

struct SceneModel {
  std::vector<Road> roads;
  std::vector<Vehicle> vehicles;
  std::vector<Distractor> distractors;
  std::vector<Seam> seams;
  std::vector<double> gain;           // per frame
  std::vector<double> jit_x, jit_y;   // per frame
  std::vector<int> jump_frames;
};

void vehicle_world_pos(const Road& road, const Vehicle& v, int frame, double& x, double& y) {
  const double s = v.s0 + v.speed * frame;
  x = road.px + road.dx * s - road.dy * v.lane_offset;
  y = road.py + road.dy * s + road.dx * v.lane_offset;
}

double road_distance(const Road& r, double x, double y) {
  const double rx = x - r.px, ry = y - r.py;
  return std::abs(-r.dy * rx + r.dx * ry);
}

// Coverage of an oriented rectangle over one pixel, 2x2 supersampled.
double rect_coverage(double px, double py, double cx, double cy, double cos_a, double sin_a,
                     double half_l, double half_w) {
  int hits = 0;
  for (int sy = 0; sy < 2; ++sy) {
    for (int sx = 0; sx < 2; ++sx) {
      const double qx = px + 0.25 + 0.5 * sx - cx;
      const double qy = py + 0.25 + 0.5 * sy - cy;
      const double u = cos_a * qx + sin_a * qy;
      const double v = -sin_a * qx + cos_a * qy;
      if (std::abs(u) <= half_l && std::abs(v) <= half_w) ++hits;
    }
  }
  return hits / 4.0;
}

struct RectStamp {
  double cx, cy, cos_a, sin_a, half_l, half_w, tone;
  // Camouflage carries its own background-statistics texture in vehicle-local
  // coordinates, so it moves with the vehicle instead of blending away.
  bool camo = false;
  double camo_ox = 0.0, camo_oy = 0.0;
};

void stamp_rect(std::vector<double>& img, int w, int h, const RectStamp& r, std::uint64_t bg_seed,
                int* footprint) {
  const double reach = std::hypot(r.half_l, r.half_w) + 1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(r.cx - reach)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(r.cx + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(r.cy - reach)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(r.cy + reach)));
  int fp = 0;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double cov = rect_coverage(x, y, r.cx, r.cy, r.cos_a, r.sin_a, r.half_l, r.half_w);
      if (cov <= 0.0) continue;
      double tone = r.tone;
      if (r.camo) {
        const double qx = x - r.cx, qy = y - r.cy;
        const double u = r.cos_a * qx + r.sin_a * qy;
        const double v = -r.sin_a * qx + r.cos_a * qy;
        tone += background_tone(u + r.camo_ox, v + r.camo_oy, bg_seed) - 0.45;
      }
      double& p = img[static_cast<std::size_t>(y) * w + x];
      p = p * (1.0 - cov) + tone * cov;
      if (cov >= 0.5) ++fp;
    }
  }
  if (footprint != nullptr) *footprint += fp;
}

SceneModel build_model(const SceneConfig& cfg, Rng& rng) {
  SceneModel m;
  const double diag = std::hypot(cfg.width, cfg.height);

  for (int i = 0; i < cfg.road_count; ++i) {
    Road r;
    const double angle = rng.uniform(0.0, kPi);
    r.dx = std::cos(angle);
    r.dy = std::sin(angle);
    r.px = rng.uniform(0.1, 0.9) * cfg.width;
    r.py = rng.uniform(0.1, 0.9) * cfg.height;
    r.half_width = rng.uniform(11.0, 15.0);
    r.length = diag;
    r.s_min = -diag / 2.0;
    m.roads.push_back(r);
  }

  // Driving-lane slots (spacing holds headways apart) plus roadside parking
  // slots for stopped vehicles.
  struct Slot {
    int road;
    double s, lane_offset, base_speed;  // base_speed 0 = parked
  };
  std::vector<Slot> driving, parked;
  const double spacing = 48.0;
  for (int ri = 0; ri < static_cast<int>(m.roads.size()); ++ri) {
    const Road& r = m.roads[ri];
    const double lane = r.half_width * 0.45;
    const int dir = rng.uniform() < 0.5 ? 1 : -1;
    double lane_speed = std::clamp(rng.normal(cfg.speed_mean, cfg.speed_std), 12.0, 38.0) * dir;
    const int slots = static_cast<int>(r.length / spacing);
    const double phase = rng.uniform(0.0, spacing);
    for (int k = 0; k < slots; ++k) {
      const double s = r.s_min + phase + k * spacing;
      driving.push_back({ri, s, lane, lane_speed});
      driving.push_back({ri, s + spacing * 0.5, -lane, -lane_speed});
      parked.push_back({ri, s + spacing * 0.25, r.half_width + 7.0, 0.0});
    }
  }
  rng.shuffle(driving);
  rng.shuffle(parked);

  const int want_stopped = static_cast<int>(std::llround(cfg.stopped_fraction * cfg.vehicle_count));
  const int want_driving = cfg.vehicle_count - want_stopped;
  if (want_driving > static_cast<int>(driving.size()) || want_stopped > static_cast<int>(parked.size())) {
    throw std::runtime_error("generate_scene: too many vehicles for the road network (" +
                             std::to_string(cfg.vehicle_count) + " requested)");
  }

  auto add_vehicle = [&](const Slot& slot, bool stopped) {
    Vehicle v;
    v.road = slot.road;
    v.s0 = slot.s;
    v.lane_offset = slot.lane_offset;
    v.speed = stopped ? 0.0 : slot.base_speed * rng.uniform(0.92, 1.08);
    v.length = std::clamp(rng.normal(cfg.vehicle_length_mean, cfg.vehicle_length_std), 12.0, 26.0);
    v.width = std::clamp(rng.normal(cfg.vehicle_width_mean, cfg.vehicle_width_std), 6.0, 12.0);
    const Road& r = m.roads[v.road];
    v.angle = std::atan2(r.dy, r.dx);
    const double u = rng.uniform();
    if (u < cfg.camouflage_fraction) {
      v.camouflaged = true;
      v.tone = 0.45 + rng.uniform(-0.02, 0.02);
      v.camo_ox = rng.uniform(1e3, 1e5);
      v.camo_oy = rng.uniform(1e3, 1e5);
    } else if (u < cfg.camouflage_fraction + (1.0 - cfg.camouflage_fraction) * 0.5) {
      v.tone = rng.uniform(0.72, 0.98);  // bright
    } else {
      v.tone = rng.uniform(0.02, 0.22);  // deep black
    }
    m.vehicles.push_back(v);
  };
  for (int i = 0; i < want_driving; ++i) add_vehicle(driving[i], false);
  for (int i = 0; i < want_stopped; ++i) add_vehicle(parked[i], true);

  // Parallax smears drift against the dominant vehicle flow.
  double flow_x = 0.0, flow_y = 0.0;
  for (const Vehicle& v : m.vehicles) {
    const Road& r = m.roads[v.road];
    flow_x += r.dx * v.speed;
    flow_y += r.dy * v.speed;
  }
  const double flow_n = std::hypot(flow_x, flow_y);
  if (flow_n > 1e-9) {
    flow_x /= flow_n;
    flow_y /= flow_n;
  } else {
    flow_x = 1.0;
    flow_y = 0.0;
  }
  for (int i = 0; i < cfg.parallax_count; ++i) {
    Distractor d;
    d.x0 = rng.uniform(0.05, 0.95) * cfg.width;
    d.y0 = rng.uniform(0.05, 0.95) * cfg.height;
    const double sp = rng.uniform(2.0, 6.0);
    d.vx = -flow_x * sp + rng.normal(0.0, 0.5);
    d.vy = -flow_y * sp + rng.normal(0.0, 0.5);
    d.length = rng.uniform(28.0, 64.0);
    d.width = rng.uniform(4.0, 9.0);
    d.angle = rng.uniform(0.0, kPi);
    d.tone = rng.uniform() < 0.5 ? rng.uniform(0.05, 0.2) : rng.uniform(0.75, 0.95);
    m.distractors.push_back(d);
  }

  for (int i = 0; i < cfg.seam_count; ++i) {
    Seam s;
    s.x0 = rng.uniform(0.2, 0.8) * cfg.width;
    s.vx = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(8.0, 24.0);
    s.gain = 1.0 + (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.04, 0.1);
    m.seams.push_back(s);
  }

  m.gain.assign(cfg.frame_count, 1.0);
  double g = 1.0;
  for (int t = 0; t < cfg.frame_count; ++t) {
    if (t > 0 && rng.uniform() < cfg.gain_jump_prob) {
      g = 1.0 + (rng.uniform() < 0.5 ? -1.0 : 1.0) * cfg.gain_jump_amplitude * rng.uniform(0.5, 1.0);
      m.jump_frames.push_back(t);
    }
    m.gain[t] = g;
  }
  m.jit_x.assign(cfg.frame_count, 0.0);
  m.jit_y.assign(cfg.frame_count, 0.0);
  for (int t = 0; t < cfg.frame_count; ++t) {
    m.jit_x[t] = rng.normal(0.0, cfg.registration_jitter_sigma);
    m.jit_y[t] = rng.normal(0.0, cfg.registration_jitter_sigma);
  }
  return m;
}

}  // namespace

bool is_moving_speed(double px_per_frame) {
  return std::abs(px_per_frame) * kMovingWindowSteps >= kMovingThresholdPx;
}

SyntheticScene generate_scene(const SceneConfig& cfg) {
  if (cfg.width < 1 || cfg.height < 1 || cfg.frame_count < 1 || cfg.vehicle_count < 0) {
    throw std::invalid_argument("generate_scene: bad config");
  }
  Rng rng(cfg.seed);
  SceneModel model = build_model(cfg, rng);
  const std::uint64_t bg_seed = cfg.seed ^ 0xBAC4;

  SyntheticScene scene;
  scene.cfg = cfg;
  scene.width = cfg.width;
  scene.height = cfg.height;
  scene.frame_count = cfg.frame_count;
  scene.frames.resize(cfg.frame_count);
  scene.annotations.resize(cfg.frame_count);
  scene.annotations_moving.resize(cfg.frame_count);
  scene.gain_jump_frames = model.jump_frames;
  for (const Vehicle& v : model.vehicles) scene.vehicle_speeds.push_back(std::abs(v.speed));
  scene.vehicle_footprints.assign(model.vehicles.size(), 0.0);

  scene.road_mask.assign(static_cast<std::size_t>(cfg.width) * cfg.height, 0);
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      for (const Road& r : model.roads) {
        if (road_distance(r, x, y) <= r.half_width) {
          scene.road_mask[static_cast<std::size_t>(y) * cfg.width + x] = 1;
          break;
        }
      }
    }
  }

  std::vector<int> footprints(model.vehicles.size(), 0);

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < cfg.frame_count; ++t) {
    const double jx = model.jit_x[t], jy = model.jit_y[t];
    std::vector<double> img(static_cast<std::size_t>(cfg.width) * cfg.height);
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        const double wx = x + jx, wy = y + jy;
        double tone = background_tone(wx, wy, bg_seed);
        for (const Road& r : model.roads) {
          const double dist = road_distance(r, wx, wy);
          if (dist <= r.half_width) {
            tone = 0.38 + 0.05 * (value_noise(wx, wy, 23.0, bg_seed ^ 0x44) - 0.5);
            break;
          }
          if (dist <= r.half_width + 1.5) {
            tone = tone * 0.8 + 0.3 * 0.2;  // soft curb edge
            break;
          }
        }
        img[static_cast<std::size_t>(y) * cfg.width + x] = tone;
      }
    }

    for (const Distractor& d : model.distractors) {
      RectStamp s;
      s.cx = d.x0 + d.vx * t - jx;
      s.cy = d.y0 + d.vy * t - jy;
      s.cos_a = std::cos(d.angle);
      s.sin_a = std::sin(d.angle);
      s.half_l = d.length / 2.0;
      s.half_w = d.width / 2.0;
      s.tone = d.tone;
      stamp_rect(img, cfg.width, cfg.height, s, bg_seed, nullptr);
    }

    std::vector<PointAnnotation> pts;
    for (std::size_t vi = 0; vi < model.vehicles.size(); ++vi) {
      const Vehicle& v = model.vehicles[vi];
      double wx = 0.0, wy = 0.0;
      vehicle_world_pos(model.roads[v.road], v, t, wx, wy);
      // registration residual shifts the rendered content
      const double cx = wx - jx, cy = wy - jy;
      if (cx < 0.0 || cx >= cfg.width || cy < 0.0 || cy >= cfg.height) continue;
      RectStamp s;
      s.cx = cx;
      s.cy = cy;
      s.cos_a = std::cos(v.angle);
      s.sin_a = std::sin(v.angle);
      s.half_l = v.length / 2.0;
      s.half_w = v.width / 2.0;
      s.tone = v.tone;
      s.camo = v.camouflaged;
      s.camo_ox = v.camo_ox;
      s.camo_oy = v.camo_oy;
      int fp = 0;
      stamp_rect(img, cfg.width, cfg.height, s, bg_seed, &fp);
      if (t == 0) footprints[vi] = fp;
      PointAnnotation p;
      p.frame_id = t;
      p.x = cx;
      p.y = cy;
      p.object_id = static_cast<int>(vi);
      p.is_moving = is_moving_speed(v.speed);
      pts.push_back(p);
    }

    for (const Seam& s : model.seams) {
      const double seam_x = s.x0 + s.vx * t;
      for (int y = 0; y < cfg.height; ++y) {
        double* row = img.data() + static_cast<std::size_t>(y) * cfg.width;
        const int x_end = std::clamp(static_cast<int>(seam_x), 0, cfg.width);
        for (int x = 0; x < x_end; ++x) row[x] *= s.gain;
      }
    }

    std::vector<std::uint8_t> frame(img.size());
    const double gain = model.gain[t];
    for (std::size_t i = 0; i < img.size(); ++i) {
      frame[i] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * gain * img[i]), 0L, 255L));
    }
    scene.frames[t] = std::move(frame);
    scene.annotations[t] = std::move(pts);
  }

  for (int t = 0; t < cfg.frame_count; ++t) {
    for (const PointAnnotation& p : scene.annotations[t]) {
      if (p.is_moving) scene.annotations_moving[t].push_back(p);
    }
  }
  for (std::size_t vi = 0; vi < footprints.size(); ++vi) {
    scene.vehicle_footprints[vi] = footprints[vi];
  }
  return scene;
}

ChipDataset::ChipDataset(std::vector<const SyntheticScene*> scenes, ChipSpec spec)
    : scenes_(std::move(scenes)), spec_(spec) {
  if (spec_.n_frames % 2 == 0) throw std::invalid_argument("ChipDataset: n_frames must be odd");
  const int half = (spec_.n_frames - 1) / 2;
  for (int si = 0; si < static_cast<int>(scenes_.size()); ++si) {
    const SyntheticScene& sc = *scenes_[si];
    for (int t = half; t + half < sc.frame_count; ++t) {
      for (int y0 = 0; y0 + spec_.chip <= sc.height; y0 += spec_.stride) {
        for (int x0 = 0; x0 + spec_.chip <= sc.width; x0 += spec_.stride) {
          if (spec_.require_vehicle) {
            bool has = false;
            for (const PointAnnotation& p : sc.frame_points(t, spec_.moving_only)) {
              if (p.x >= x0 && p.x < x0 + spec_.chip && p.y >= y0 && p.y < y0 + spec_.chip) {
                has = true;
                break;
              }
            }
            if (!has) continue;
          }
          chips_.push_back({si, t, x0, y0});
        }
      }
    }
  }
}

void ChipDataset::fetch(std::size_t idx, Sample<float>& out) const {
  const ChipRef& ref = chips_.at(idx);
  const SyntheticScene& sc = *scenes_[ref.scene];
  const int half = (spec_.n_frames - 1) / 2;
  out.input = Tensor<float>({spec_.n_frames, spec_.chip, spec_.chip});
  for (int f = 0; f < spec_.n_frames; ++f) {
    const auto& frame = sc.frames[ref.center_frame - half + f];
    for (int y = 0; y < spec_.chip; ++y) {
      const std::uint8_t* src = frame.data() + static_cast<std::size_t>(ref.y0 + y) * sc.width + ref.x0;
      float* dst = out.input.ptr() + (static_cast<std::size_t>(f) * spec_.chip + y) * spec_.chip;
      for (int x = 0; x < spec_.chip; ++x) dst[x] = src[x] / 255.0f;
    }
  }

  // points a little outside the tile still leave Gaussian mass inside
  const double margin = 4.0 * spec_.sigma * (1 << spec_.d);
  std::vector<PointAnnotation> pts;
  for (const PointAnnotation& p : sc.frame_points(ref.center_frame, spec_.moving_only)) {
    if (p.x >= ref.x0 - margin && p.x < ref.x0 + spec_.chip + margin && p.y >= ref.y0 - margin &&
        p.y < ref.y0 + spec_.chip + margin) {
      PointAnnotation q = p;
      q.x -= ref.x0;
      q.y -= ref.y0;
      pts.push_back(q);
    }
  }
  const Heatmap target = make_heatmap(pts, spec_.chip, spec_.chip, spec_.d, spec_.sigma);
  if (spec_.loss == LossKind::Euclidean) {
    out.target = Tensor<float>({1, target.height, target.width});
    std::copy(target.values.begin(), target.values.end(), out.target.data.begin());
  } else {
    const SegmentationMap seg = make_segmentation(target, default_tau_seg(spec_.sigma));
    out.classes = Tensor<int>({seg.height, seg.width});
    for (std::size_t i = 0; i < seg.labels.size(); ++i) out.classes[i] = seg.labels[i];
  }
}

}  // namespace wami
