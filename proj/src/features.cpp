#include "prpca/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "prpca/error.hpp"
#include "prpca/image_ops.hpp"

namespace prpca {

namespace {

struct Described {
  Eigen::Vector2d position;
  Eigen::VectorXd descriptor;
};

Eigen::MatrixXd harris_response(const Eigen::MatrixXd& smooth, const FeatureOptions& opt) {
  const Eigen::Index rows = smooth.rows(), cols = smooth.cols();
  Eigen::MatrixXd ixx(rows, cols), iyy(rows, cols), ixy(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index cl = std::max<Eigen::Index>(c - 1, 0), cr = std::min(c + 1, cols - 1);
      const Eigen::Index ru = std::max<Eigen::Index>(r - 1, 0), rd = std::min(r + 1, rows - 1);
      const double gx = (smooth(r, cr) - smooth(r, cl)) / std::max<double>(1.0, cr - cl);
      const double gy = (smooth(rd, c) - smooth(ru, c)) / std::max<double>(1.0, rd - ru);
      ixx(r, c) = gx * gx;
      iyy(r, c) = gy * gy;
      ixy(r, c) = gx * gy;
    }
  }
  ixx = gaussian_blur(ixx, opt.window_sigma);
  iyy = gaussian_blur(iyy, opt.window_sigma);
  ixy = gaussian_blur(ixy, opt.window_sigma);
  const Eigen::ArrayXXd det = ixx.array() * iyy.array() - ixy.array().square();
  const Eigen::ArrayXXd tr = ixx.array() + iyy.array();
  return (det - opt.harris_k * tr.square()).matrix();
}

// Vertex offset of the parabola through (-1, a), (0, b), (1, c).
double parabola_offset(double a, double b, double c) {
  const double denom = a - 2.0 * b + c;
  if (std::abs(denom) < 1e-18) return 0.0;
  return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

std::vector<Described> describe(const Frame& f, int max_features, const FeatureOptions& opt) {
  const Eigen::MatrixXd smooth = gaussian_blur(f.pixels, opt.smoothing_sigma);
  const auto keypoints = detect_harris(f, max_features, opt);
  const int r = opt.patch_radius;
  std::vector<Described> out;
  out.reserve(keypoints.size());
  for (const auto& kp : keypoints) {
    Eigen::VectorXd d((2 * r + 1) * (2 * r + 1));
    Eigen::Index idx = 0;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        d(idx++) = bilinear_clamped(smooth, kp.position.x() + dx, kp.position.y() + dy);
      }
    }
    d.array() -= d.mean();
    const double norm = d.norm();
    if (norm < 1e-8) continue;
    out.push_back({kp.position, d / norm});
  }
  return out;
}

}  // namespace

std::vector<Keypoint> detect_harris(const Frame& f, int max_features, const FeatureOptions& opt) {
  if (f.height() == 0 || f.width() == 0) throw ArgumentError("detect_harris: empty frame");
  const Eigen::MatrixXd smooth = gaussian_blur(f.pixels, opt.smoothing_sigma);
  const Eigen::MatrixXd resp = harris_response(smooth, opt);
  const double max_resp = resp.maxCoeff();
  std::vector<Keypoint> kps;
  if (!(max_resp > 1e-12)) return kps;
  const double thresh = opt.relative_threshold * max_resp;
  const int margin = opt.patch_radius + 1;
  const int nms = opt.nms_radius;
  const Eigen::Index rows = resp.rows(), cols = resp.cols();
  for (Eigen::Index c = margin; c < cols - margin; ++c) {
    for (Eigen::Index r = margin; r < rows - margin; ++r) {
      const double v = resp(r, c);
      if (v <= thresh) continue;
      bool is_max = true;
      for (Eigen::Index dc = -nms; dc <= nms && is_max; ++dc) {
        for (Eigen::Index dr = -nms; dr <= nms; ++dr) {
          if (dc == 0 && dr == 0) continue;
          const Eigen::Index rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
          const double w = resp(rr, cc);
          // Strict on one side of the scan order so plateaus keep one peak.
          if (w > v || (w == v && (dc < 0 || (dc == 0 && dr < 0)))) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      const double ox = parabola_offset(resp(r, c - 1), v, resp(r, c + 1));
      const double oy = parabola_offset(resp(r - 1, c), v, resp(r + 1, c));
      kps.push_back({Eigen::Vector2d(static_cast<double>(c) + ox, static_cast<double>(r) + oy), v});
    }
  }
  std::stable_sort(kps.begin(), kps.end(),
                   [](const Keypoint& a, const Keypoint& b) { return a.response > b.response; });
  if (max_features > 0 && kps.size() > static_cast<std::size_t>(max_features)) {
    kps.resize(static_cast<std::size_t>(max_features));
  }
  return kps;
}

std::vector<Correspondence> detect_and_match(const Frame& a, const Frame& b, int max_features,
                                             const FeatureOptions& opt) {
  if (a.height() == 0 || a.width() == 0 || b.height() == 0 || b.width() == 0) {
    throw ArgumentError("detect_and_match: empty frame");
  }
  const auto da = describe(a, max_features, opt);
  const auto db = describe(b, max_features, opt);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t na = da.size(), nb = db.size();
  std::vector<std::size_t> best_ab(na, nb), best_ba(nb, na);
  std::vector<double> d1_ab(na, kInf), d2_ab(na, kInf), d1_ba(nb, kInf);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const double d = (da[i].descriptor - db[j].descriptor).norm();
      if (d < d1_ab[i]) {
        d2_ab[i] = d1_ab[i];
        d1_ab[i] = d;
        best_ab[i] = j;
      } else if (d < d2_ab[i]) {
        d2_ab[i] = d;
      }
      if (d < d1_ba[j]) {
        d1_ba[j] = d;
        best_ba[j] = i;
      }
    }
  }
  std::vector<Correspondence> matches;
  for (std::size_t i = 0; i < na; ++i) {
    const std::size_t j = best_ab[i];
    if (j == nb || best_ba[j] != i) continue;
    if (!(d1_ab[i] < opt.ratio * d2_ab[i])) continue;
    matches.push_back({da[i].position, db[j].position});
  }
  if (matches.size() < 4) {
    throw InsufficientFeaturesError("only " + std::to_string(matches.size()) +
                                    " putative matches (need 4)");
  }
  return matches;
}

}  // namespace prpca
