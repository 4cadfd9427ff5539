#include "prpca/video_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prpca/error.hpp"

namespace prpca {

namespace {

void check_same_shape(const Eigen::MatrixXd& x, const MaskTensor& mask, const char* what) {
  if (x.rows() != mask.matrix().rows() || x.cols() != mask.matrix().cols()) {
    throw DimensionError(std::string(what) + ": matrix is " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + ", mask is " +
                         std::to_string(mask.matrix().rows()) + "x" +
                         std::to_string(mask.matrix().cols()));
  }
}

}  // namespace

Frame clamp_unit(Frame f) {
  f.pixels = f.pixels.unaryExpr([](double v) {
    if (!std::isfinite(v)) return 0.0;
    return std::clamp(v, 0.0, 1.0);
  });
  return f;
}

VideoTensor::VideoTensor(Index m, Index n, Index p)
    : m_(m), n_(n), data_(Eigen::MatrixXd::Zero(m * n, p)) {
  if (m < 0 || n < 0 || p < 0) throw DimensionError("VideoTensor: negative dimension");
}

VideoTensor::VideoTensor(Index m, Index n, Eigen::MatrixXd data)
    : m_(m), n_(n), data_(std::move(data)) {
  if (data_.rows() != m * n) {
    throw DimensionError("VideoTensor: matrix has " + std::to_string(data_.rows()) +
                         " rows, expected m*n = " + std::to_string(m * n));
  }
}

VideoTensor VideoTensor::from_frames(const std::vector<Frame>& frames) {
  if (frames.empty()) return {};
  const Index m = frames.front().height();
  const Index n = frames.front().width();
  VideoTensor v(m, n, static_cast<Index>(frames.size()));
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].height() != m || frames[k].width() != n) {
      throw DimensionError("VideoTensor::from_frames: frame " + std::to_string(k) +
                           " has a different size");
    }
    v.frame(static_cast<Index>(k)) = frames[k].pixels;
  }
  return v;
}

std::vector<Frame> VideoTensor::frames() const {
  std::vector<Frame> out;
  out.reserve(static_cast<std::size_t>(p()));
  for (Index k = 0; k < p(); ++k) out.push_back(frame_copy(k));
  return out;
}

MaskTensor::MaskTensor(Index m, Index n, Eigen::MatrixXd data)
    : m_(m), n_(n), data_(std::move(data)) {
  if (data_.rows() != m * n) throw DimensionError("MaskTensor: rows must equal m*n");
  for (Index i = 0; i < data_.size(); ++i) {
    const double v = data_.data()[i];
    if (v != 0.0 && v != 1.0) throw ArgumentError("MaskTensor: entries must be exactly 0 or 1");
  }
}

MaskTensor MaskTensor::ones(Index m, Index n, Index p) {
  return {m, n, Eigen::MatrixXd::Ones(m * n, p)};
}

MaskTensor MaskTensor::zeros(Index m, Index n, Index p) {
  return {m, n, Eigen::MatrixXd::Zero(m * n, p)};
}

Index MaskTensor::count_observed() const {
  return static_cast<Index>(data_.sum());
}

Eigen::MatrixXd vec_video(const VideoTensor& v) { return v.matrix(); }

VideoTensor unvec_video(const Eigen::MatrixXd& x, Index m, Index n) {
  return VideoTensor(m, n, x);
}

Eigen::MatrixXd project_mask(const Eigen::MatrixXd& x, const MaskTensor& mask) {
  check_same_shape(x, mask, "project_mask");
  return (mask.matrix().array() != 0.0).select(x, 0.0);
}

Eigen::MatrixXd complement_project(const Eigen::MatrixXd& x, const MaskTensor& mask) {
  check_same_shape(x, mask, "complement_project");
  // Select rather than multiply so P + P_perp reproduces x bit-for-bit.
  return (mask.matrix().array() == 0.0).select(x, 0.0);
}

}  // namespace prpca
