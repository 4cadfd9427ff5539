#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "prpca/homography.hpp"
#include "prpca/video_model.hpp"

namespace prpca {

struct SyntheticConfig {
  Index height = 64;
  Index width = 64;
  Index frames = 20;
  int pan_x = 3;  // whole pixels per frame; the camera window moves right for pan_x > 0
  int pan_y = 0;
  double blob_radius = 7.0;
  Eigen::Vector2d blob_start{8.0, 8.0};      // frame coordinates (x, y) in frame 0
  Eigen::Vector2d blob_velocity{2.5, 2.5};   // frame coordinates per frame
  double blob_level = 0.9;
  std::uint64_t texture_seed = 1;
  double texture_sigma = 1.5;
  double background_low = 0.1;
  double background_high = 0.6;
};

struct SyntheticScene {
  std::vector<Frame> frames;           // raw moving-camera frames
  VideoTensor clean;                   // same frames as a tensor
  VideoTensor background;              // blob-free frames
  MaskTensor fg_mask;                  // blob support per frame
  std::vector<Homography> true_anchored;  // frame k -> anchor frame, pure translations
  Eigen::MatrixXd panorama;            // textured world the frames are cropped from
  std::size_t anchor = 0;
};

/// Smoothed-noise panorama, one translated crop per frame and a hard-edged
/// disc with a smooth intensity profile moving in frame coordinates.
/// Throws ConfigurationError when the disc leaves any frame.
SyntheticScene make_synthetic_scene(const SyntheticConfig& config);

}  // namespace prpca
