#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "wami/image_io.hpp"
#include "wami/pipeline.hpp"
#include "wami/synthdata.hpp"
#include "wami/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct SynthArgs {
  std::string out;
  wami::SceneConfig cfg;
};

struct TrainArgs {
  std::vector<std::string> data;
  std::string out;
  std::string log_csv;
  int frames = 5;
  int width = 32;
  int chip = 0;    // 0 = per-net default
  int stride = 0;
  double sigma = 0.0;
  std::string loss = "heatmap";
  bool moving_only = false;
  wami::TrainConfig cfg;
};

struct InferArgs {
  std::string data;
  std::string cluster_ckpt;
  std::string fovea_ckpt;
  std::string out;
  int frames = 5;
  double tau_gate = 0.0;
  double fixed_threshold = -1.0;  // < 0 = Otsu
};

struct EvalArgs {
  std::string detections;
  std::string truth;
  std::string out;
  double radius = wami::kMatchRadiusPx;
  bool moving_only = false;
};

struct SweepArgs {
  std::string data;
  std::string cluster_ckpt;
  std::string fovea_ckpt;
  std::string out;
  int frames = 5;
  double tau_gate = 0.0;
  std::vector<double> thresholds;
  bool moving_only = false;
};

void add_scene_options(CLI::App* cmd, wami::SceneConfig& cfg) {
  cmd->add_option("--width", cfg.width, "frame width");
  cmd->add_option("--height", cfg.height, "frame height");
  cmd->add_option("--frame-count", cfg.frame_count, "frames in the scene");
  cmd->add_option("--frames", cfg.frames_per_stack, "frames per stack the scene is meant for");
  cmd->add_option("--vehicles", cfg.vehicle_count, "vehicle count");
  cmd->add_option("--stopped-fraction", cfg.stopped_fraction, "fraction of stopped vehicles");
  cmd->add_option("--camouflage-fraction", cfg.camouflage_fraction,
                  "fraction of vehicles matching the background tone");
  cmd->add_option("--speed-mean", cfg.speed_mean, "mean vehicle speed, px/frame");
  cmd->add_option("--gain-jump-amplitude", cfg.gain_jump_amplitude, "camera gain jump size");
  cmd->add_option("--jitter-sigma", cfg.registration_jitter_sigma, "registration jitter, px");
  cmd->add_option("--seams", cfg.seam_count, "mosaic seam count");
  cmd->add_option("--parallax", cfg.parallax_count, "parallax distractor count");
  cmd->add_option("--roads", cfg.road_count, "road count");
  cmd->add_option("--seed", cfg.seed, "RNG seed");
}

void add_train_options(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--data", a.data, "scene directory (repeatable)")->required()->expected(-1);
  cmd->add_option("--out", a.out, "checkpoint output path")->required();
  cmd->add_option("--log", a.log_csv, "training log CSV (default: <out>.loss.csv)");
  cmd->add_option("--frames", a.frames, "temporal frames per stack (1, 3 or 5)");
  cmd->add_option("--net-width", a.width, "channel width");
  cmd->add_option("--chip", a.chip, "training tile size");
  cmd->add_option("--stride", a.stride, "training tile stride");
  cmd->add_option("--sigma", a.sigma, "target Gaussian sigma at grid scale");
  cmd->add_option("--loss", a.loss, "heatmap | segmentation")
      ->check(CLI::IsMember({"heatmap", "segmentation"}));
  cmd->add_flag("--moving-only", a.moving_only, "train on moving-vehicle ground truth");
  cmd->add_option("--lr", a.cfg.lr, "base learning rate");
  cmd->add_option("--batch", a.cfg.batch_size, "batch size");
  cmd->add_option("--epochs", a.cfg.max_epochs, "max epochs");
  cmd->add_option("--max-steps", a.cfg.max_steps, "stop after this many steps");
  cmd->add_option("--eval-every", a.cfg.eval_every, "steps between validation evaluations");
  cmd->add_option("--val-fraction", a.cfg.val_fraction, "validation split fraction");
  cmd->add_option("--seed", a.cfg.seed, "RNG seed");
}

std::vector<wami::SyntheticScene> load_scenes(const std::vector<std::string>& dirs) {
  std::vector<wami::SyntheticScene> scenes;
  scenes.reserve(dirs.size());
  for (const std::string& d : dirs) scenes.push_back(wami::load_scene_dir(d));
  return scenes;
}

int run_synth(const SynthArgs& a) {
  fs::create_directories(a.out);
  const wami::SyntheticScene scene = wami::generate_scene(a.cfg);
  wami::write_scene_dir(scene, a.out);
  std::cout << "wrote " << scene.frame_count << " frames (" << scene.width << "x" << scene.height
            << ", " << a.cfg.vehicle_count << " vehicles) to " << a.out << "\n";
  return kExitOk;
}

int run_train(const TrainArgs& a, bool clusternet) {
  const auto scenes = load_scenes(a.data);
  std::vector<const wami::SyntheticScene*> refs;
  for (const auto& s : scenes) refs.push_back(&s);

  wami::ChipSpec chip;
  chip.n_frames = a.frames;
  chip.moving_only = a.moving_only;
  chip.loss = a.loss == "segmentation" ? wami::LossKind::SoftmaxXent : wami::LossKind::Euclidean;
  if (clusternet) {
    chip.chip = a.chip > 0 ? a.chip : 512;
    chip.d = 4;
    chip.sigma = a.sigma > 0 ? a.sigma : wami::kClusterTargetSigma;
  } else {
    chip.chip = a.chip > 0 ? a.chip : 128;
    chip.d = 1;
    chip.sigma = a.sigma > 0 ? a.sigma : wami::kFoveaTargetSigma;
  }
  chip.stride = a.stride > 0 ? a.stride : chip.chip;
  const wami::ChipDataset dataset(refs, chip);
  if (dataset.size() == 0) {
    throw std::runtime_error("no training tiles with vehicles in the given scenes");
  }

  const int out_ch = chip.loss == wami::LossKind::SoftmaxXent ? 2 : 1;
  wami::NetworkSpec spec = clusternet ? wami::clusternet_spec(a.frames, out_ch, a.width)
                                      : wami::foveanet_spec(a.frames, out_ch, a.width);
  wami::Network<float> net(spec);
  wami::Rng init_rng(a.cfg.seed);
  net.init(init_rng);

  wami::TrainConfig cfg = a.cfg;
  cfg.loss = chip.loss;
  cfg.log_csv = a.log_csv.empty() ? a.out + ".loss.csv" : a.log_csv;
  std::cout << "training " << spec.name << " on " << dataset.size() << " tiles ("
            << (clusternet ? "coarse" : "fine") << " grid, loss=" << a.loss << ")\n";
  const wami::TrainResult r = wami::train(net, dataset, cfg);
  net.save(a.out, json{{"width", a.width}, {"sigma", chip.sigma}});
  std::cout << "steps=" << r.total_steps << " best_val=" << r.best_val << " at step " << r.best_step
            << "; checkpoint " << a.out << "\n";
  return kExitOk;
}

json speedup_json(const wami::SpeedupReport& s) {
  return json{{"proposed_blocks", s.proposed},
              {"total_blocks", s.total_blocks},
              {"skip_fraction", s.skip_fraction},
              {"est_time_saved_s", s.est_time_saved_s},
              {"wall_s", s.wall_s}};
}

int run_infer(const InferArgs& a) {
  const wami::SyntheticScene scene = wami::load_scene_dir(a.data);
  wami::Network<float> cluster = wami::load_network(a.cluster_ckpt);
  wami::Network<float> fovea = wami::load_network(a.fovea_ckpt);
  fs::create_directories(a.out);

  wami::PipelineConfig cfg;
  cfg.tau_gate = static_cast<float>(a.tau_gate);
  if (a.fixed_threshold >= 0.0) cfg.fixed_threshold = static_cast<float>(a.fixed_threshold);

  const int half = (a.frames - 1) / 2;
  std::vector<std::pair<int, wami::Detection>> rows;
  json speedups = json::array();
  for (int t = half; t + half < scene.frame_count; ++t) {
    const wami::FrameStack stack =
        wami::make_stack(scene.frames, scene.width, scene.height, t, a.frames);
    const wami::DetectResult r = wami::detect_frame(stack, cluster, fovea, cfg);
    for (const wami::Detection& d : r.detections) rows.emplace_back(t, d);
    char name[48];
    std::snprintf(name, sizeof(name), "heatmap_%05d.pgm", t);
    wami::write_heatmap_pgm(a.out + "/" + name, r.stitched);
    json s = speedup_json(r.speedup);
    s["frame_id"] = t;
    s["threshold"] = r.threshold_used;
    speedups.push_back(s);
  }
  wami::write_detections_csv(a.out + "/detections.csv", rows);
  std::ofstream(a.out + "/speedup.json") << speedups.dump(2) << "\n";
  std::cout << rows.size() << " detections across " << speedups.size() << " frames -> " << a.out
            << "\n";
  return kExitOk;
}

std::map<int, std::vector<wami::GtPoint>> truth_by_frame(const std::string& path, bool moving_only) {
  std::map<int, std::vector<wami::GtPoint>> gt;
  for (const wami::PointAnnotation& p : wami::read_annotations_csv(path)) {
    if (moving_only && !p.is_moving) continue;
    gt[p.frame_id].push_back({p.x, p.y});
  }
  return gt;
}

int run_eval(const EvalArgs& a) {
  const auto dets = wami::read_detections_csv(a.detections);
  auto gt = truth_by_frame(a.truth, a.moving_only);
  std::map<int, std::vector<wami::Detection>> dets_by_frame;
  for (const auto& [frame, d] : dets) dets_by_frame[frame].push_back(d);

  std::vector<wami::MatchResult> matches;
  for (const auto& [frame, gts] : gt) {
    const auto it = dets_by_frame.find(frame);
    static const std::vector<wami::Detection> none;
    matches.push_back(wami::match_detections(it == dets_by_frame.end() ? none : it->second, gts,
                                             a.radius));
  }
  for (const auto& [frame, ds] : dets_by_frame) {
    if (!gt.count(frame)) matches.push_back(wami::match_detections(ds, {}, a.radius));
  }
  const wami::EvalReport r = wami::score_matches(matches);
  const json out = {{"precision", r.precision},   {"recall", r.recall},
                    {"f1", r.f1},                 {"mean_tp_distance_px", r.mean_tp_dist},
                    {"true_positives", r.tp},     {"false_positives", r.fp},
                    {"false_negatives", r.fn},    {"radius_px", a.radius},
                    {"moving_only", a.moving_only}};
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw std::runtime_error("cannot write " + a.out);
    f << out.dump(2) << "\n";
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int run_sweep(const SweepArgs& a) {
  const wami::SyntheticScene scene = wami::load_scene_dir(a.data);
  wami::Network<float> cluster = wami::load_network(a.cluster_ckpt);
  wami::Network<float> fovea = wami::load_network(a.fovea_ckpt);

  wami::PipelineConfig cfg;
  cfg.tau_gate = static_cast<float>(a.tau_gate);

  const int half = (a.frames - 1) / 2;
  std::vector<wami::Heatmap> heatmaps;
  std::vector<std::vector<wami::GtPoint>> gts;
  for (int t = half; t + half < scene.frame_count; ++t) {
    const wami::FrameStack stack =
        wami::make_stack(scene.frames, scene.width, scene.height, t, a.frames);
    heatmaps.push_back(wami::detect_frame(stack, cluster, fovea, cfg).stitched);
    std::vector<wami::GtPoint> pts;
    for (const wami::PointAnnotation& p : scene.frame_points(t, a.moving_only)) {
      pts.push_back({p.x, p.y});
    }
    gts.push_back(std::move(pts));
  }

  std::vector<float> taus(a.thresholds.begin(), a.thresholds.end());
  if (taus.empty()) {
    for (int i = 1; i <= 9; ++i) taus.push_back(0.1f * i);
  }
  const auto reports = wami::sweep(heatmaps, gts, taus);

  std::ofstream pr(a.out);
  if (!pr) throw std::runtime_error("cannot write " + a.out);
  pr << "threshold,precision,recall,f1,mean_tp_dist_px\n";
  for (const auto& r : reports) {
    pr << r.threshold << "," << r.precision << "," << r.recall << "," << r.f1 << "," << r.mean_tp_dist
       << "\n";
  }
  const std::string roc_path = a.out + ".roc.csv";
  std::ofstream roc(roc_path);
  roc << "threshold,recall,fp_per_frame\n";
  for (const auto& r : reports) {
    roc << r.threshold << "," << r.recall << ","
        << static_cast<double>(r.fp) / static_cast<double>(heatmaps.size()) << "\n";
  }
  std::cout << "wrote " << reports.size() << "-row PR curve to " << a.out << " (ROC variant "
            << roc_path << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage WAMI small-object detection pipeline"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scene");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  add_scene_options(synth_cmd, synth.cfg);
  synth_cmd->set_config("--config");

  TrainArgs train_cluster;
  train_cluster.cfg = wami::clusternet_train_defaults();
  auto* tc_cmd = app.add_subcommand("train-clusternet", "train the coarse proposal net");
  add_train_options(tc_cmd, train_cluster);
  tc_cmd->set_config("--config");

  TrainArgs train_fovea;
  train_fovea.cfg = wami::foveanet_train_defaults();
  auto* tf_cmd = app.add_subcommand("train-foveanet", "train the fine localization net");
  add_train_options(tf_cmd, train_fovea);
  tf_cmd->set_config("--config");

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "run two-stage detection over a scene");
  infer_cmd->add_option("--data", infer.data, "scene directory")->required();
  infer_cmd->add_option("--cluster", infer.cluster_ckpt, "coarse-net checkpoint")->required();
  infer_cmd->add_option("--fovea", infer.fovea_ckpt, "fine-net checkpoint")->required();
  infer_cmd->add_option("--out", infer.out, "output directory")->required();
  infer_cmd->add_option("--frames", infer.frames, "frames per stack");
  infer_cmd->add_option("--tau-gate", infer.tau_gate, "proposal gating threshold");
  infer_cmd->add_option("--threshold", infer.fixed_threshold, "fixed heatmap threshold (default Otsu)");
  infer_cmd->set_config("--config");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "score detections against ground truth");
  eval_cmd->add_option("--detections", eval.detections, "detections CSV")->required();
  eval_cmd->add_option("--truth", eval.truth, "annotations CSV")->required();
  eval_cmd->add_option("--out", eval.out, "report JSON path");
  eval_cmd->add_option("--radius", eval.radius, "match radius, px");
  eval_cmd->add_flag("--moving-only", eval.moving_only, "drop stopped vehicles from ground truth");
  eval_cmd->set_config("--config");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "threshold sweep -> PR/ROC curves");
  sweep_cmd->add_option("--data", sweep.data, "scene directory")->required();
  sweep_cmd->add_option("--cluster", sweep.cluster_ckpt, "coarse-net checkpoint")->required();
  sweep_cmd->add_option("--fovea", sweep.fovea_ckpt, "fine-net checkpoint")->required();
  sweep_cmd->add_option("--out", sweep.out, "PR curve CSV path")->required();
  sweep_cmd->add_option("--frames", sweep.frames, "frames per stack");
  sweep_cmd->add_option("--tau-gate", sweep.tau_gate, "proposal gating threshold");
  sweep_cmd->add_option("--thresholds", sweep.thresholds, "explicit threshold list")->expected(-1);
  sweep_cmd->add_flag("--moving-only", sweep.moving_only, "score against moving vehicles only");
  sweep_cmd->set_config("--config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (tc_cmd->parsed()) return run_train(train_cluster, true);
    if (tf_cmd->parsed()) return run_train(train_fovea, false);
    if (infer_cmd->parsed()) return run_infer(infer);
    if (eval_cmd->parsed()) return run_eval(eval);
    if (sweep_cmd->parsed()) return run_sweep(sweep);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
