#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "prpca/video_model.hpp"

namespace prpca {

/// Flat binary array: "PRPCADMP", u32 version (1), u32 dtype (1 = float64),
/// u32 ndim, ndim x u64 dims, then the values in column-major order.
/// Every integer and value is little-endian.
struct NumericDump {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

void write_dump(std::ostream& os, const NumericDump& d);
NumericDump read_dump(std::istream& is);

void write_dump_file(const std::filesystem::path& path, const NumericDump& d);
NumericDump read_dump_file(const std::filesystem::path& path);

/// Videos dump as (m, n, p); the payload is exactly the mn x p matrix buffer.
NumericDump to_dump(const VideoTensor& v);
VideoTensor video_from_dump(const NumericDump& d);
NumericDump to_dump(const MaskTensor& m);
MaskTensor mask_from_dump(const NumericDump& d);
NumericDump to_dump(const Eigen::MatrixXd& x);
Eigen::MatrixXd matrix_from_dump(const NumericDump& d);

}  // namespace prpca
