#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "prpca/features.hpp"
#include "prpca/homography.hpp"
#include "prpca/video_model.hpp"

namespace prpca {

struct CanvasGeometry {
  Index m = 0;  // canvas height
  Index n = 0;  // canvas width
  Homography offset;                    // translation placing the union at pixel (0, 0)
  std::vector<Homography> composites;   // offset * anchored, per frame
};

/// Integer bounding box of every warped frame's corner polygon; corners
/// within 0.1 px of a pixel line snap to it.
/// Throws CanvasTooLargeError when m*n exceeds max_pixels.
CanvasGeometry compute_canvas(const std::vector<Frame>& frames,
                              const std::vector<Homography>& anchored,
                              double max_pixels = 50e6);

struct WarpedFrame {
  Eigen::MatrixXd pixels;  // canvas-sized, unobserved pixels are 0
  Eigen::MatrixXd mask;    // canvas-sized {0,1}
};

/// Inverse-mapping bilinear warp of f onto an m x n canvas through h.
/// A canvas pixel is observed iff its pull-back needs only in-frame neighbours.
WarpedFrame warp_frame(const Frame& f, const Homography& h, Index m, Index n);

struct RegistrationConfig {
  int max_features = 500;
  FeatureOptions features;
  RansacOptions ransac;
  double max_canvas_pixels = 50e6;
};

struct RegisteredVideo {
  Index m = 0;
  Index n = 0;
  Index frame_height = 0;
  Index frame_width = 0;
  VideoTensor frames;
  MaskTensor mask;
  std::vector<Homography> anchored;    // frame k -> anchor coordinates
  std::vector<Homography> composites;  // frame k -> canvas (includes offset)
  std::size_t anchor = 0;
};

/// Full pipeline: consecutive-pair matching + RANSAC, composition to the
/// middle anchor, canvas, warping. Errors name the 1-based frame pair.
RegisteredVideo register_video(const std::vector<Frame>& frames, const RegistrationConfig& config = {});

/// Skips estimation: anchored[k] maps frame k into anchor coordinates.
RegisteredVideo register_with_homographies(const std::vector<Frame>& frames,
                                           const std::vector<Homography>& anchored,
                                           double max_canvas_pixels = 50e6);

/// Static-camera shortcut: identity maps, canvas == frame, all-ones mask.
RegisteredVideo register_static(const std::vector<Frame>& frames);

/// Maps canvas-sized components back to each frame's original perspective.
std::vector<VideoTensor> unregister(const std::vector<VideoTensor>& components,
                                    const RegisteredVideo& reg);
VideoTensor unregister(const VideoTensor& component, const RegisteredVideo& reg);

/// Per-pixel median over the frames observing it; 0 where nothing is observed.
Eigen::MatrixXd median_composite(const VideoTensor& frames, const MaskTensor& mask);

}  // namespace prpca
