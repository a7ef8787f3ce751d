#include "wami/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wami {

void write_pgm(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
               int height) {
  if (pixels.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("write_pgm: pixel count does not match dims");
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "P5\n" << width << " " << height << "\n255\n";
  f.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<std::uint8_t> read_pgm(const std::string& path, int& width, int& height) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5") throw std::runtime_error("not a binary PGM: " + path);
  int maxval = 0;
  // header tokens may be separated by comments
  auto next_int = [&]() {
    for (;;) {
      int c = f.peek();
      if (c == '#') {
        std::string line;
        std::getline(f, line);
      } else if (std::isspace(c)) {
        f.get();
      } else {
        break;
      }
    }
    int v = 0;
    f >> v;
    return v;
  };
  width = next_int();
  height = next_int();
  maxval = next_int();
  if (maxval != 255) throw std::runtime_error("expected 8-bit PGM: " + path);
  f.get();  // single whitespace after maxval
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height);
  f.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!f) throw std::runtime_error("truncated PGM: " + path);
  return pixels;
}

void write_heatmap_pgm(const std::string& path, const Heatmap& heatmap) {
  std::vector<std::uint8_t> px(heatmap.values.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * heatmap.values[i]), 0L, 255L));
  }
  write_pgm(path, px, heatmap.width, heatmap.height);
}

void write_annotations_csv(const std::string& path, const std::vector<PointAnnotation>& points) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "frame_id,x,y,object_id,is_moving\n";
  for (const PointAnnotation& p : points) {
    f << p.frame_id << "," << p.x << "," << p.y << "," << p.object_id << "," << (p.is_moving ? 1 : 0)
      << "\n";
  }
}

std::vector<PointAnnotation> read_annotations_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::vector<PointAnnotation> out;
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    PointAnnotation p;
    char comma;
    int moving = 1;
    if (!(ss >> p.frame_id >> comma >> p.x >> comma >> p.y >> comma >> p.object_id >> comma >> moving)) {
      throw std::runtime_error("bad annotations row in " + path + ": " + line);
    }
    p.is_moving = moving != 0;
    out.push_back(p);
  }
  return out;
}

void write_detections_csv(const std::string& path,
                          const std::vector<std::pair<int, Detection>>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "frame_id,x,y,score\n";
  for (const auto& [frame, d] : rows) {
    f << frame << "," << d.x << "," << d.y << "," << d.score << "\n";
  }
}

std::vector<std::pair<int, Detection>> read_detections_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::vector<std::pair<int, Detection>> out;
  std::string line;
  std::getline(f, line);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int frame = 0;
    Detection d;
    char comma;
    if (!(ss >> frame >> comma >> d.x >> comma >> d.y >> comma >> d.score)) {
      throw std::runtime_error("bad detections row in " + path + ": " + line);
    }
    out.emplace_back(frame, d);
  }
  return out;
}

std::string frame_filename(int frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05d.pgm", frame_id);
  return buf;
}

void write_scene_dir(const SyntheticScene& scene, const std::string& dir) {
  for (int t = 0; t < scene.frame_count; ++t) {
    write_pgm(dir + "/" + frame_filename(t), scene.frames[t], scene.width, scene.height);
  }
  std::vector<PointAnnotation> all;
  for (const auto& pts : scene.annotations) all.insert(all.end(), pts.begin(), pts.end());
  write_annotations_csv(dir + "/annotations.csv", all);
}

SyntheticScene load_scene_dir(const std::string& dir) {
  SyntheticScene scene;
  for (int t = 0;; ++t) {
    const std::string path = dir + "/" + frame_filename(t);
    std::ifstream probe(path);
    if (!probe) break;
    int w = 0, h = 0;
    scene.frames.push_back(read_pgm(path, w, h));
    if (t == 0) {
      scene.width = w;
      scene.height = h;
    } else if (w != scene.width || h != scene.height) {
      throw std::runtime_error("scene frames have mixed dims in " + dir);
    }
  }
  if (scene.frames.empty()) throw std::runtime_error("no frame_*.pgm files in " + dir);
  scene.frame_count = static_cast<int>(scene.frames.size());
  scene.annotations.resize(scene.frame_count);
  scene.annotations_moving.resize(scene.frame_count);
  for (const PointAnnotation& p : read_annotations_csv(dir + "/annotations.csv")) {
    if (p.frame_id < 0 || p.frame_id >= scene.frame_count) {
      throw std::runtime_error("annotation for missing frame " + std::to_string(p.frame_id) + " in " +
                               dir);
    }
    scene.annotations[p.frame_id].push_back(p);
    if (p.is_moving) scene.annotations_moving[p.frame_id].push_back(p);
  }
  return scene;
}

}  // namespace wami
