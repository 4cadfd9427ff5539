#pragma once

#include <Eigen/Core>
#include <optional>

namespace prpca {

/// Separable Gaussian blur with clamp-to-edge borders; kernel radius 3*sigma.
Eigen::MatrixXd gaussian_blur(const Eigen::MatrixXd& img, double sigma);

/// Bilinear sample at (x, y) = (column, row). Returns nullopt unless every
/// neighbour carrying non-zero weight lies inside the image. Coordinates within
/// 1e-9 of an integer snap to it, so integer positions never need a
/// neighbour past the last row or column.
std::optional<double> bilinear_strict(const Eigen::MatrixXd& img, double x, double y);

/// Bilinear sample with coordinates clamped into the image.
double bilinear_clamped(const Eigen::MatrixXd& img, double x, double y);

}  // namespace prpca
