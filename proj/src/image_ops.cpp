#include "prpca/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace prpca {

namespace {

constexpr double kSnap = 1e-9;

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < kSnap ? r : v;
}

}  // namespace

Eigen::MatrixXd gaussian_blur(const Eigen::MatrixXd& img, double sigma) {
  if (sigma <= 0.0 || img.size() == 0) return img;
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const Eigen::Index rows = img.rows(), cols = img.cols();
  Eigen::MatrixXd tmp(rows, cols), out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const Eigen::Index rr = std::clamp<Eigen::Index>(r + t, 0, rows - 1);
        acc += k[t + radius] * img(rr, c);
      }
      tmp(r, c) = acc;
    }
  }
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const Eigen::Index cc = std::clamp<Eigen::Index>(c + t, 0, cols - 1);
        acc += k[t + radius] * tmp(r, cc);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

std::optional<double> bilinear_strict(const Eigen::MatrixXd& img, double x, double y) {
  x = snap(x);
  y = snap(y);
  if (!std::isfinite(x) || !std::isfinite(y)) return std::nullopt;
  const double x0f = std::floor(x), y0f = std::floor(y);
  const double fx = x - x0f, fy = y - y0f;
  const Eigen::Index x0 = static_cast<Eigen::Index>(x0f);
  const Eigen::Index y0 = static_cast<Eigen::Index>(y0f);
  const Eigen::Index x1 = fx > 0.0 ? x0 + 1 : x0;
  const Eigen::Index y1 = fy > 0.0 ? y0 + 1 : y0;
  if (x0 < 0 || y0 < 0 || x1 >= img.cols() || y1 >= img.rows()) return std::nullopt;
  return (1 - fy) * ((1 - fx) * img(y0, x0) + fx * img(y0, x1)) +
         fy * ((1 - fx) * img(y1, x0) + fx * img(y1, x1));
}

double bilinear_clamped(const Eigen::MatrixXd& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.cols() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.rows() - 1));
  return *bilinear_strict(img, x, y);
}

}  // namespace prpca
