#include "prpca/registration.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "prpca/error.hpp"
#include "prpca/image_ops.hpp"

namespace prpca {

namespace {

// Corners this close to a pixel line do not open a new canvas row or column.
constexpr double kSnap = 0.1;

void check_frames(const std::vector<Frame>& frames) {
  if (frames.empty()) throw ArgumentError("registration: no frames");
  const Index a = frames.front().height(), b = frames.front().width();
  if (a < 1 || b < 1) throw ArgumentError("registration: empty frame");
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (frames[k].height() != a || frames[k].width() != b) {
      throw DimensionError("registration: frame " + std::to_string(k + 1) +
                           " differs in size from frame 1");
    }
  }
}

RegisteredVideo assemble(const std::vector<Frame>& frames, std::vector<Homography> anchored,
                         double max_canvas_pixels) {
  CanvasGeometry canvas = compute_canvas(frames, anchored, max_canvas_pixels);
  const Index p = static_cast<Index>(frames.size());
  RegisteredVideo reg;
  reg.m = canvas.m;
  reg.n = canvas.n;
  reg.frame_height = frames.front().height();
  reg.frame_width = frames.front().width();
  reg.anchor = anchor_index(frames.size());
  reg.frames = VideoTensor(canvas.m, canvas.n, p);
  Eigen::MatrixXd mask(canvas.m * canvas.n, p);
  for (Index k = 0; k < p; ++k) {
    WarpedFrame w = warp_frame(frames[k], canvas.composites[k], canvas.m, canvas.n);
    reg.frames.frame(k) = w.pixels;
    mask.col(k) = w.mask.reshaped();
  }
  reg.mask = MaskTensor(canvas.m, canvas.n, std::move(mask));
  reg.anchored = std::move(anchored);
  reg.composites = std::move(canvas.composites);
  return reg;
}

}  // namespace

CanvasGeometry compute_canvas(const std::vector<Frame>& frames,
                              const std::vector<Homography>& anchored, double max_pixels) {
  check_frames(frames);
  if (anchored.size() != frames.size()) {
    throw DimensionError("compute_canvas: " + std::to_string(anchored.size()) +
                         " homographies for " + std::to_string(frames.size()) + " frames");
  }
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const double w = static_cast<double>(frames[k].width() - 1);
    const double h = static_cast<double>(frames[k].height() - 1);
    for (const Eigen::Vector2d& corner : {Eigen::Vector2d(0, 0), Eigen::Vector2d(w, 0),
                                         Eigen::Vector2d(w, h), Eigen::Vector2d(0, h)}) {
      const Eigen::Vector3d q = anchored[k].forward() * corner.homogeneous();
      if (!(q.z() > 0.0)) {
        throw CanvasTooLargeError("compute_canvas: frame " + std::to_string(k + 1) +
                                  " corner maps through the line at infinity");
      }
      const Eigen::Vector2d c = q.hnormalized();
      min_x = std::min(min_x, c.x());
      max_x = std::max(max_x, c.x());
      min_y = std::min(min_y, c.y());
      max_y = std::max(max_y, c.y());
    }
  }
  const double x0 = std::floor(min_x + kSnap), y0 = std::floor(min_y + kSnap);
  const double x1 = std::ceil(max_x - kSnap), y1 = std::ceil(max_y - kSnap);
  const double width = x1 - x0 + 1.0, height = y1 - y0 + 1.0;
  if (!std::isfinite(width) || !std::isfinite(height) || width * height > max_pixels) {
    throw CanvasTooLargeError("compute_canvas: canvas " + std::to_string(height) + "x" +
                              std::to_string(width) + " exceeds the pixel budget");
  }
  CanvasGeometry out;
  out.m = static_cast<Index>(height);
  out.n = static_cast<Index>(width);
  out.offset = Homography::translation(-x0, -y0);
  out.composites.reserve(anchored.size());
  for (const auto& h : anchored) out.composites.push_back(out.offset * h);
  return out;
}

WarpedFrame warp_frame(const Frame& f, const Homography& h, Index m, Index n) {
  const Eigen::Matrix3d inv = h.inverse().forward();
  WarpedFrame out{Eigen::MatrixXd::Zero(m, n), Eigen::MatrixXd::Zero(m, n)};
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) {
      const Eigen::Vector3d q = inv * Eigen::Vector3d(static_cast<double>(j), static_cast<double>(i), 1.0);
      if (!(q.z() > 0.0)) continue;
      if (auto v = bilinear_strict(f.pixels, q.x() / q.z(), q.y() / q.z())) {
        out.pixels(i, j) = *v;
        out.mask(i, j) = 1.0;
      }
    }
  }
  return out;
}

RegisteredVideo register_video(const std::vector<Frame>& frames, const RegistrationConfig& config) {
  check_frames(frames);
  std::vector<Homography> pairwise;
  pairwise.reserve(frames.size() - 1);
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    const std::string pair =
        "frame pair (" + std::to_string(k + 1) + "," + std::to_string(k + 2) + "): ";
    try {
      const auto matches = detect_and_match(frames[k], frames[k + 1], config.max_features, config.features);
      RansacOptions ropt = config.ransac;
      ropt.seed = config.ransac.seed + k;
      pairwise.push_back(ransac_homography(matches, ropt).homography);
    } catch (const InsufficientFeaturesError& e) {
      throw InsufficientFeaturesError(pair + e.what());
    } catch (const RegistrationFailure& e) {
      throw RegistrationFailure(pair + e.what());
    } catch (const InsufficientDataError& e) {
      throw RegistrationFailure(pair + e.what());
    } catch (const DegenerateConfigurationError& e) {
      throw RegistrationFailure(pair + e.what());
    }
  }
  auto anchored = compose_to_anchor(pairwise, anchor_index(frames.size()));
  return assemble(frames, std::move(anchored), config.max_canvas_pixels);
}

RegisteredVideo register_with_homographies(const std::vector<Frame>& frames,
                                           const std::vector<Homography>& anchored,
                                           double max_canvas_pixels) {
  check_frames(frames);
  return assemble(frames, anchored, max_canvas_pixels);
}

RegisteredVideo register_static(const std::vector<Frame>& frames) {
  check_frames(frames);
  RegisteredVideo reg;
  reg.m = frames.front().height();
  reg.n = frames.front().width();
  reg.frame_height = reg.m;
  reg.frame_width = reg.n;
  reg.anchor = anchor_index(frames.size());
  reg.frames = VideoTensor::from_frames(frames);
  reg.mask = MaskTensor::ones(reg.m, reg.n, static_cast<Index>(frames.size()));
  reg.anchored.assign(frames.size(), Homography());
  reg.composites.assign(frames.size(), Homography());
  return reg;
}

VideoTensor unregister(const VideoTensor& component, const RegisteredVideo& reg) {
  if (component.m() != reg.m || component.n() != reg.n ||
      component.p() != static_cast<Index>(reg.composites.size())) {
    throw DimensionError("unregister: component shape does not match the canvas");
  }
  const Index a = reg.frame_height, b = reg.frame_width;
  VideoTensor out(a, b, component.p());
  for (Index k = 0; k < component.p(); ++k) {
    if (reg.composites[k].is_identity() && a == reg.m && b == reg.n) {
      out.frame(k) = component.frame(k);
      continue;
    }
    const Eigen::MatrixXd canvas = component.frame(k);
    const Eigen::Matrix3d g = reg.composites[k].forward();
    for (Index j = 0; j < b; ++j) {
      for (Index i = 0; i < a; ++i) {
        const Eigen::Vector2d q =
            (g * Eigen::Vector3d(static_cast<double>(j), static_cast<double>(i), 1.0)).hnormalized();
        out.at(i, j, k) = bilinear_clamped(canvas, q.x(), q.y());
      }
    }
  }
  return out;
}

std::vector<VideoTensor> unregister(const std::vector<VideoTensor>& components,
                                    const RegisteredVideo& reg) {
  std::vector<VideoTensor> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(unregister(c, reg));
  return out;
}

Eigen::MatrixXd median_composite(const VideoTensor& frames, const MaskTensor& mask) {
  if (frames.m() != mask.m() || frames.n() != mask.n() || frames.p() != mask.p()) {
    throw DimensionError("median_composite: mask shape mismatch");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(frames.m(), frames.n());
  std::vector<double> vals;
  for (Index row = 0; row < frames.m() * frames.n(); ++row) {
    vals.clear();
    for (Index k = 0; k < frames.p(); ++k) {
      if (mask.matrix()(row, k) != 0.0) vals.push_back(frames.matrix()(row, k));
    }
    if (vals.empty()) continue;
    const std::size_t mid = vals.size() / 2;
    std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
    double med = vals[mid];
    if (vals.size() % 2 == 0) {
      med = 0.5 * (med + *std::max_element(vals.begin(), vals.begin() + mid));
    }
    out(row % frames.m(), row / frames.m()) = med;
  }
  return out;
}

}  // namespace prpca
