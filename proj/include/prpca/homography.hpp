#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace prpca {

/// Planar projective transform with the bottom-right entry fixed to 1.
///
/// Two equivalent views are exposed. forward() is the usual column-vector
/// matrix G with p_target ~ G * [x, y, 1]^T. matrix() returns H = G^T, the
/// convention kappa * p_target = H^T * p used by the DLT constraint rows and
/// by the homography text file (row-major H per line).
///
/// Pixel coordinates are (x, y) = (column, row), 0-based at pixel centres.
class Homography {
 public:
  Homography() : g_(Eigen::Matrix3d::Identity()) {}

  /// Normalizes so that G(2,2) == 1. Throws DegenerateConfigurationError when
  /// the bottom-right entry vanishes or the matrix is singular.
  static Homography from_forward(const Eigen::Matrix3d& g);
  static Homography from_matrix(const Eigen::Matrix3d& h) { return from_forward(h.transpose()); }
  static Homography translation(double dx, double dy);

  const Eigen::Matrix3d& forward() const { return g_; }
  Eigen::Matrix3d matrix() const { return g_.transpose(); }

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
  Homography inverse() const;

  /// Composition: (a * b) applies b first, then a.
  friend Homography operator*(const Homography& a, const Homography& b) {
    return from_forward(a.g_ * b.g_);
  }

  bool is_identity(double tol = 0.0) const {
    return (g_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  explicit Homography(const Eigen::Matrix3d& g) : g_(g) {}
  Eigen::Matrix3d g_;
};

struct Correspondence {
  Eigen::Vector2d source;
  Eigen::Vector2d target;
};

/// Least-squares DLT: smallest right singular vector of the stacked 2d x 9
/// constraint matrix built on Hartley-normalized coordinates.
/// Throws InsufficientDataError for fewer than 4 correspondences and
/// DegenerateConfigurationError for collinear / rank-deficient input.
Homography estimate_homography_dlt(const std::vector<Correspondence>& corr);

/// max(forward transfer distance, backward transfer distance).
double symmetric_transfer_error(const Homography& h, const Correspondence& c);

struct RansacOptions {
  double inlier_threshold_px = 2.0;
  int max_iters = 2000;
  std::uint64_t seed = 0;
};

struct RansacResult {
  Homography homography;
  std::vector<std::size_t> inliers;  // ascending indices into the input
};

/// Robust fit: minimal 4-point hypotheses scored by the truncated quadratic
/// sum of min(e^2, t^2) over symmetric transfer errors, then DLT refits on the
/// consensus set while the score drops.
/// Deterministic for a given seed.
RansacResult ransac_homography(const std::vector<Correspondence>& corr,
                               const RansacOptions& options = {});

/// Anchor index used throughout: floor(p / 2), 0-based.
inline std::size_t anchor_index(std::size_t p) { return p / 2; }

/// pairwise[k] maps frame k into frame k+1. Returns per-frame maps into the
/// anchor frame's coordinates; output[anchor] is the identity.
std::vector<Homography> compose_to_anchor(const std::vector<Homography>& pairwise,
                                          std::size_t anchor);

/// Text format: one homography per line, 9 reals, row-major H (= G^T).
void write_homographies(std::ostream& os, const std::vector<Homography>& hs);
std::vector<Homography> read_homographies(std::istream& is);

}  // namespace prpca
