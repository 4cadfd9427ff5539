#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "prpca/video_model.hpp"

namespace prpca {

enum class ColorMode { Luminance, PerChannel };

/// Decoded image with every channel scaled to [0,1] by its maximum code value.
struct Image {
  std::vector<Eigen::MatrixXd> channels;  // 1 (gray) or 3 (RGB); alpha is dropped
  int bit_depth = 8;
  Index height() const { return channels.empty() ? 0 : channels.front().rows(); }
  Index width() const { return channels.empty() ? 0 : channels.front().cols(); }
};

/// PNG (8/16-bit gray, gray+alpha, RGB, RGBA, palette) or binary PGM/PPM.
/// Throws IngestionError naming the file.
Image read_image(const std::filesystem::path& path);

/// Writes a gray image in [0,1] (values are clamped) as PNG.
void write_png(const std::filesystem::path& path, const Eigen::MatrixXd& gray, int bit_depth = 8);
/// Binary PGM with maxval 255 or 65535.
void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& gray, int bit_depth = 8);
/// Binary PPM from three channels.
void write_ppm(const std::filesystem::path& path, const std::vector<Eigen::MatrixXd>& rgb,
               int bit_depth = 8);

/// "frame2" < "frame10": digit runs compare numerically.
bool natural_less(const std::string& a, const std::string& b);

/// A directory (every supported image in it) or a path whose file name may
/// contain * and ? wildcards. Sorted naturally. Throws IngestionError when empty.
std::vector<std::filesystem::path> list_frame_files(const std::string& pattern);

/// Loads and reduces each frame to luminance (0.299 R + 0.587 G + 0.114 B).
std::vector<Frame> load_frames(const std::string& pattern);

/// One frame sequence per channel; gray inputs yield a single sequence.
std::vector<std::vector<Frame>> load_frame_channels(const std::string& pattern);

/// Binary masks from images: a pixel is set when its value exceeds 0.5.
MaskTensor load_mask_frames(const std::string& pattern);

/// Writes frames as <dir>/<prefix>_0001.png ... with values clamped to [0,1].
void write_frame_sequence(const std::filesystem::path& dir, const std::string& prefix,
                          const VideoTensor& frames, int bit_depth = 8);

/// Symmetric-range visualization of a signed tensor: 0 maps to 0.5 and the
/// largest magnitude to 0 or 1.
VideoTensor signed_visualization(const VideoTensor& x);

}  // namespace prpca
