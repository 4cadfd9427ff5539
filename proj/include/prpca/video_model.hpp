#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace prpca {

using Index = Eigen::Index;

/// A single grayscale frame. Rows index the image height, columns the width.
/// Eigen storage is column-major, so the raw buffer is already vec(frame).
struct Frame {
  Eigen::MatrixXd pixels;

  Frame() = default;
  explicit Frame(Eigen::MatrixXd px) : pixels(std::move(px)) {}
  Frame(Index height, Index width) : pixels(Eigen::MatrixXd::Zero(height, width)) {}

  Index height() const { return pixels.rows(); }
  Index width() const { return pixels.cols(); }
};

/// Clamps to [0,1] and replaces non-finite values by 0.
Frame clamp_unit(Frame f);

/// m x n x p stack of frames held directly in its mn x p matrix form:
/// pixel (i, j) of frame k lives at row i + m*j, column k (0-based).
class VideoTensor {
 public:
  VideoTensor() = default;
  VideoTensor(Index m, Index n, Index p);
  VideoTensor(Index m, Index n, Eigen::MatrixXd data);

  static VideoTensor from_frames(const std::vector<Frame>& frames);

  Index m() const { return m_; }
  Index n() const { return n_; }
  Index p() const { return data_.cols(); }
  Index pixels_per_frame() const { return m_ * n_; }

  double& at(Index i, Index j, Index k) { return data_(i + m_ * j, k); }
  double at(Index i, Index j, Index k) const { return data_(i + m_ * j, k); }

  const Eigen::MatrixXd& matrix() const { return data_; }
  Eigen::MatrixXd& matrix() { return data_; }

  Eigen::Map<Eigen::MatrixXd> frame(Index k) {
    return {data_.col(k).data(), m_, n_};
  }
  Eigen::Map<const Eigen::MatrixXd> frame(Index k) const {
    return {data_.col(k).data(), m_, n_};
  }
  Frame frame_copy(Index k) const { return Frame(Eigen::MatrixXd(frame(k))); }
  std::vector<Frame> frames() const;

  bool same_shape(const VideoTensor& other) const {
    return m_ == other.m_ && n_ == other.n_ && p() == other.p();
  }
  bool operator==(const VideoTensor& other) const {
    return same_shape(other) && data_ == other.data_;
  }

 private:
  Index m_ = 0;
  Index n_ = 0;
  Eigen::MatrixXd data_;
};

/// Binary tensor of observed pixels, same layout as VideoTensor.
/// Construction rejects any entry outside {0, 1}.
class MaskTensor {
 public:
  MaskTensor() = default;
  MaskTensor(Index m, Index n, Eigen::MatrixXd data);

  static MaskTensor ones(Index m, Index n, Index p);
  static MaskTensor zeros(Index m, Index n, Index p);

  Index m() const { return m_; }
  Index n() const { return n_; }
  Index p() const { return data_.cols(); }

  bool at(Index i, Index j, Index k) const { return data_(i + m_ * j, k) != 0.0; }
  const Eigen::MatrixXd& matrix() const { return data_; }
  Eigen::Map<const Eigen::MatrixXd> frame(Index k) const {
    return {data_.col(k).data(), m_, n_};
  }

  Index count_observed() const;
  bool all_observed() const { return count_observed() == data_.size(); }

  bool operator==(const MaskTensor& other) const {
    return m_ == other.m_ && n_ == other.n_ && data_ == other.data_;
  }

 private:
  Index m_ = 0;
  Index n_ = 0;
  Eigen::MatrixXd data_;
};

Eigen::MatrixXd vec_video(const VideoTensor& v);
VideoTensor unvec_video(const Eigen::MatrixXd& x, Index m, Index n);

/// Orthogonal projection onto the observed entries.
Eigen::MatrixXd project_mask(const Eigen::MatrixXd& x, const MaskTensor& mask);
/// Projection onto the unobserved entries; project_mask + complement_project == x.
Eigen::MatrixXd complement_project(const Eigen::MatrixXd& x, const MaskTensor& mask);

}  // namespace prpca
