#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wami/postprocess.hpp"
#include "wami/synthdata.hpp"
#include "wami/targets.hpp"

namespace wami {

// 8-bit binary PGM (P5).
void write_pgm(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
               int height);
std::vector<std::uint8_t> read_pgm(const std::string& path, int& width, int& height);

// Heatmap rendered to 8 bits, full scale = 1.0.
void write_heatmap_pgm(const std::string& path, const Heatmap& heatmap);

// annotations CSV: frame_id,x,y,object_id,is_moving
void write_annotations_csv(const std::string& path, const std::vector<PointAnnotation>& points);
std::vector<PointAnnotation> read_annotations_csv(const std::string& path);

// detections CSV: frame_id,x,y,score
void write_detections_csv(const std::string& path,
                          const std::vector<std::pair<int, Detection>>& rows);
std::vector<std::pair<int, Detection>> read_detections_csv(const std::string& path);

std::string frame_filename(int frame_id);  // frame_%05d.pgm

// Scene directory: frame_%05d.pgm plus annotations.csv.
void write_scene_dir(const SyntheticScene& scene, const std::string& dir);
SyntheticScene load_scene_dir(const std::string& dir);

}  // namespace wami
