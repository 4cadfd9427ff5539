#include "prpca/homography.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "prpca/error.hpp"

namespace prpca {

Homography Homography::from_forward(const Eigen::Matrix3d& g) {
  if (!g.allFinite()) throw DegenerateConfigurationError("homography has non-finite entries");
  const double scale = g.cwiseAbs().maxCoeff();
  if (scale == 0.0 || std::abs(g(2, 2)) <= 1e-12 * scale) {
    throw DegenerateConfigurationError("homography bottom-right entry vanishes");
  }
  Eigen::Matrix3d n = g / g(2, 2);
  n(2, 2) = 1.0;
  const double det = n.determinant();
  const double nscale = n.cwiseAbs().maxCoeff();
  if (!std::isfinite(det) || std::abs(det) <= 1e-12 * nscale * nscale * nscale) {
    throw DegenerateConfigurationError("homography is singular");
  }
  return Homography(n);
}

Homography Homography::translation(double dx, double dy) {
  Eigen::Matrix3d g = Eigen::Matrix3d::Identity();
  g(0, 2) = dx;
  g(1, 2) = dy;
  return Homography(g);
}

Eigen::Vector2d Homography::apply(const Eigen::Vector2d& p) const {
  const Eigen::Vector3d q = g_ * p.homogeneous();
  return q.hnormalized();
}

Homography Homography::inverse() const { return from_forward(g_.inverse()); }

namespace {

// Similarity moving the centroid to the origin with mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    throw DegenerateConfigurationError("DLT: all points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = s;
  t(1, 1) = s;
  t(0, 2) = -s * centroid.x();
  t(1, 2) = -s * centroid.y();
  return t;
}

}  // namespace

Homography estimate_homography_dlt(const std::vector<Correspondence>& corr) {
  if (corr.size() < 4) {
    throw InsufficientDataError("DLT needs at least 4 correspondences, got " +
                                std::to_string(corr.size()));
  }
  std::vector<Eigen::Vector2d> src, dst;
  src.reserve(corr.size());
  dst.reserve(corr.size());
  for (const auto& c : corr) {
    if (!c.source.allFinite() || !c.target.allFinite()) {
      throw ArgumentError("DLT: non-finite correspondence");
    }
    src.push_back(c.source);
    dst.push_back(c.target);
  }
  const Eigen::Matrix3d t_src = normalizing_transform(src);
  const Eigen::Matrix3d t_dst = normalizing_transform(dst);

  const Eigen::Index d = static_cast<Eigen::Index>(corr.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * d, 9);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Vector3d p = t_src * src[i].homogeneous();
    const Eigen::Vector2d q = (t_dst * dst[i].homogeneous()).hnormalized();
    // Rows of A_i = [0, p^T, -y~ p^T; p^T, 0, -x~ p^T] acting on h = vec(H).
    a.block<1, 3>(2 * i, 3) = p.transpose();
    a.block<1, 3>(2 * i, 6) = -q.y() * p.transpose();
    a.block<1, 3>(2 * i + 1, 0) = p.transpose();
    a.block<1, 3>(2 * i + 1, 6) = -q.x() * p.transpose();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  // With 4 points A is 8x9, so the 9th direction is the exact null space.
  // Any further near-zero singular value means the points do not pin H down.
  if (sv(0) <= 0.0 || sv(7) <= 1e-9 * sv(0)) {
    throw DegenerateConfigurationError("DLT: constraint matrix is rank deficient (collinear points?)");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d h_norm;
  h_norm.col(0) = h.segment<3>(0);
  h_norm.col(1) = h.segment<3>(3);
  h_norm.col(2) = h.segment<3>(6);
  const Eigen::Matrix3d g = t_dst.inverse() * h_norm.transpose() * t_src;
  return Homography::from_forward(g);
}

double symmetric_transfer_error(const Homography& h, const Correspondence& c) {
  const Eigen::Vector3d fwd = h.forward() * c.source.homogeneous();
  if (std::abs(fwd.z()) < 1e-12) return std::numeric_limits<double>::infinity();
  const double e1 = (fwd.hnormalized() - c.target).norm();
  const Eigen::Vector3d bwd = h.forward().inverse() * c.target.homogeneous();
  if (std::abs(bwd.z()) < 1e-12) return std::numeric_limits<double>::infinity();
  const double e2 = (bwd.hnormalized() - c.source).norm();
  return std::max(e1, e2);
}

namespace {

std::vector<std::size_t> consensus(const Homography& h, const std::vector<Correspondence>& corr,
                                   double threshold) {
  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    if (symmetric_transfer_error(h, corr[i]) <= threshold) in.push_back(i);
  }
  return in;
}

std::vector<Correspondence> subset(const std::vector<Correspondence>& corr,
                                   const std::vector<std::size_t>& idx) {
  std::vector<Correspondence> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(corr[i]);
  return out;
}

}  // namespace

RansacResult ransac_homography(const std::vector<Correspondence>& corr,
                               const RansacOptions& options) {
  if (corr.size() < 4) {
    throw InsufficientDataError("RANSAC needs at least 4 correspondences, got " +
                                std::to_string(corr.size()));
  }
  if (!(options.inlier_threshold_px > 0.0) || options.max_iters < 1) {
    throw ArgumentError("RANSAC: threshold must be positive and max_iters >= 1");
  }

  std::mt19937_64 rng(options.seed);
  const std::size_t n = corr.size();
  const double t2 = options.inlier_threshold_px * options.inlier_threshold_px;
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});

  // Truncated quadratic (MSAC) score: sum of min(e^2, t^2).
  auto score = [&](const Homography& h) {
    double cost = 0.0;
    for (const auto& c : corr) {
      const double e = symmetric_transfer_error(h, c);
      cost += std::min(e * e, t2);
    }
    return cost;
  };

  std::optional<Homography> best_h;
  double best_cost = std::numeric_limits<double>::infinity();
  for (long it = 0; it < options.max_iters; ++it) {
    // Partial Fisher-Yates for 4 distinct indices.
    for (std::size_t j = 0; j < 4; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, n - 1);
      std::swap(pool[j], pool[pick(rng)]);
    }
    const std::vector<std::size_t> sample(pool.begin(), pool.begin() + 4);
    Homography h;
    try {
      h = estimate_homography_dlt(subset(corr, sample));
    } catch (const DegenerateConfigurationError&) {
      continue;
    }
    const double cost = score(h);
    if (cost < best_cost) {
      best_cost = cost;
      best_h = h;
    }
  }
  if (!best_h || consensus(*best_h, corr, options.inlier_threshold_px).size() < 4) {
    throw RegistrationFailure("RANSAC: no consensus set with at least 4 correspondences");
  }

  // Refit on the consensus set while that lowers the score.
  Homography h = *best_h;
  std::vector<std::size_t> in = consensus(h, corr, options.inlier_threshold_px);
  for (int round = 0; round < 10; ++round) {
    Homography refit;
    try {
      refit = estimate_homography_dlt(subset(corr, in));
    } catch (const DegenerateConfigurationError&) {
      break;
    }
    const double cost = score(refit);
    auto next = consensus(refit, corr, options.inlier_threshold_px);
    if (!(cost < best_cost) || next.size() < 4) break;
    best_cost = cost;
    h = refit;
    if (next == in) break;
    in = std::move(next);
  }
  // Tighten to the inlier noise scale (MAD) and refit once.
  {
    const auto inl = consensus(h, corr, options.inlier_threshold_px);
    std::vector<double> err(inl.size());
    for (std::size_t i = 0; i < inl.size(); ++i) err[i] = symmetric_transfer_error(h, corr[inl[i]]);
    std::vector<double> sorted = err;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double sigma = 1.4826 * sorted[sorted.size() / 2];
    const double tight = std::clamp(3.0 * sigma, 0.05 * options.inlier_threshold_px,
                                    options.inlier_threshold_px);
    std::vector<std::size_t> core;
    for (std::size_t i = 0; i < inl.size(); ++i) {
      if (err[i] <= tight) core.push_back(inl[i]);
    }
    if (core.size() < inl.size() && core.size() >= std::max<std::size_t>(8, inl.size() / 2)) {
      try {
        Homography refit = estimate_homography_dlt(subset(corr, core));
        if (consensus(refit, corr, options.inlier_threshold_px).size() >= 4) h = refit;
      } catch (const DegenerateConfigurationError&) {
      }
    }
  }

  auto final_inliers = consensus(h, corr, options.inlier_threshold_px);
  if (final_inliers.size() < 4) {
    throw RegistrationFailure("RANSAC: refined model lost its consensus set");
  }
  return {h, std::move(final_inliers)};
}

std::vector<Homography> compose_to_anchor(const std::vector<Homography>& pairwise,
                                          std::size_t anchor) {
  const std::size_t p = pairwise.size() + 1;
  if (anchor >= p) {
    throw ArgumentError("compose_to_anchor: anchor " + std::to_string(anchor) +
                        " out of range for " + std::to_string(p) + " frames");
  }
  std::vector<Homography> out(p);
  // Frames before the anchor: chain forward maps k -> k+1 -> ... -> anchor.
  for (std::size_t k = anchor; k-- > 0;) out[k] = out[k + 1] * pairwise[k];
  // Frames after the anchor: chain inverses k -> k-1 -> ... -> anchor.
  for (std::size_t k = anchor + 1; k < p; ++k) {
    Homography inv;
    try {
      inv = pairwise[k - 1].inverse();
    } catch (const DegenerateConfigurationError&) {
      throw DegenerateConfigurationError("compose_to_anchor: pairwise homography " +
                                         std::to_string(k - 1) + " is not invertible");
    }
    out[k] = out[k - 1] * inv;
  }
  return out;
}

void write_homographies(std::ostream& os, const std::vector<Homography>& hs) {
  const auto old_precision = os.precision();
  os << std::setprecision(17);
  for (const auto& h : hs) {
    const Eigen::Matrix3d m = h.matrix();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        os << m(r, c) << ((r == 2 && c == 2) ? '\n' : ' ');
      }
    }
  }
  os.precision(old_precision);
}

std::vector<Homography> read_homographies(std::istream& is) {
  std::vector<Homography> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (!(ls >> m(r, c))) {
          throw IngestionError("homography file line " + std::to_string(lineno) +
                               ": expected 9 reals");
        }
      }
    }
    std::string extra;
    if (ls >> extra) {
      throw IngestionError("homography file line " + std::to_string(lineno) +
                           ": more than 9 values");
    }
    if (std::abs(m(2, 2) - 1.0) > 1e-9) {
      throw IngestionError("homography file line " + std::to_string(lineno) +
                           ": H33 must equal 1");
    }
    try {
      out.push_back(Homography::from_matrix(m));
    } catch (const DegenerateConfigurationError& e) {
      throw IngestionError("homography file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace prpca
