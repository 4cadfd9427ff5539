#include "prpca/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "prpca/error.hpp"
#include "prpca/image_ops.hpp"

namespace prpca {

SyntheticScene make_synthetic_scene(const SyntheticConfig& c) {
  if (c.height < 2 || c.width < 2 || c.frames < 1) {
    throw ConfigurationError("synthetic scene: need frames of at least 2x2 and p >= 1");
  }
  if (!(c.blob_radius > 0.0)) throw ConfigurationError("synthetic scene: blob radius must be positive");
  const Index p = c.frames;
  const Index span_x = std::abs(c.pan_x) * (p - 1), span_y = std::abs(c.pan_y) * (p - 1);
  const Index pano_h = c.height + span_y, pano_w = c.width + span_x;

  // Window origins inside the panorama.
  std::vector<Index> ox(p), oy(p);
  for (Index k = 0; k < p; ++k) {
    ox[k] = c.pan_x >= 0 ? c.pan_x * k : span_x + c.pan_x * k;
    oy[k] = c.pan_y >= 0 ? c.pan_y * k : span_y + c.pan_y * k;
  }

  std::mt19937_64 rng(c.texture_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd noise(pano_h, pano_w);
  for (Index j = 0; j < pano_w; ++j)
    for (Index i = 0; i < pano_h; ++i) noise(i, j) = u(rng);
  Eigen::MatrixXd pano = gaussian_blur(noise, c.texture_sigma);
  const double lo = pano.minCoeff(), hi = pano.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  pano = ((pano.array() - lo) / span * (c.background_high - c.background_low) + c.background_low).matrix();

  SyntheticScene s;
  s.panorama = pano;
  s.anchor = anchor_index(static_cast<std::size_t>(p));
  const Index a = static_cast<Index>(s.anchor);
  s.background = VideoTensor(c.height, c.width, p);
  s.clean = VideoTensor(c.height, c.width, p);
  Eigen::MatrixXd fg = Eigen::MatrixXd::Zero(c.height * c.width, p);

  const double r = c.blob_radius;
  for (Index k = 0; k < p; ++k) {
    s.true_anchored.push_back(Homography::translation(static_cast<double>(ox[k] - ox[a]),
                                                      static_cast<double>(oy[k] - oy[a])));
    const Eigen::Vector2d centre = c.blob_start + static_cast<double>(k) * c.blob_velocity;
    if (centre.x() - r < 0.0 || centre.y() - r < 0.0 || centre.x() + r > c.width - 1.0 ||
        centre.y() + r > c.height - 1.0) {
      throw ConfigurationError("synthetic scene: blob leaves the view in frame " + std::to_string(k + 1));
    }
    for (Index j = 0; j < c.width; ++j) {
      for (Index i = 0; i < c.height; ++i) {
        const double bg = pano(oy[k] + i, ox[k] + j);
        s.background.at(i, j, k) = bg;
        const double d = std::hypot(j - centre.x(), i - centre.y());
        if (d <= r) {
          s.clean.at(i, j, k) = c.blob_level * (0.85 + 0.15 * std::cos(std::numbers::pi * d / r));
          fg(i + c.height * j, k) = 1.0;
        } else {
          s.clean.at(i, j, k) = bg;
        }
      }
    }
  }
  s.fg_mask = MaskTensor(c.height, c.width, std::move(fg));
  s.frames = s.clean.frames();
  return s;
}

}  // namespace prpca
