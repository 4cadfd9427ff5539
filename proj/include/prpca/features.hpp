#pragma once

#include <Eigen/Core>
#include <vector>

#include "prpca/homography.hpp"
#include "prpca/video_model.hpp"

namespace prpca {

struct Keypoint {
  Eigen::Vector2d position;  // subpixel (x, y)
  double response = 0.0;
};

struct FeatureOptions {
  double smoothing_sigma = 1.0;   // pre-blur before gradients
  double window_sigma = 1.0;      // structure tensor integration scale
  double harris_k = 0.04;
  double relative_threshold = 0.01;
  int nms_radius = 2;
  int patch_radius = 5;           // descriptor is (2r+1)^2 samples
  double ratio = 0.8;             // Lowe ratio on descriptor distance
};

/// Harris corners, strongest first, with parabolic subpixel refinement.
std::vector<Keypoint> detect_harris(const Frame& f, int max_features,
                                    const FeatureOptions& options = {});

/// Putative matches from a to b: Harris corners, zero-mean unit-norm patch
/// descriptors, mutual nearest neighbours filtered by the ratio test.
/// Throws InsufficientFeaturesError when fewer than 4 matches survive.
std::vector<Correspondence> detect_and_match(const Frame& a, const Frame& b, int max_features,
                                             const FeatureOptions& options = {});

}  // namespace prpca
