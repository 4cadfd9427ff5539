#include "prpca/dump_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "prpca/error.hpp"

namespace prpca {

namespace {

constexpr char kMagic[8] = {'P', 'R', 'P', 'C', 'A', 'D', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFloat64 = 1;

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw IngestionError("dump: truncated header");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
  return v;
}

std::uint64_t element_count(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

void write_dump(std::ostream& os, const NumericDump& d) {
  if (element_count(d.dims) != d.data.size()) throw DimensionError("dump: dims do not match data length");
  os.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(os, kVersion);
  put_le<std::uint32_t>(os, kFloat64);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(d.dims.size()));
  for (auto v : d.dims) put_le<std::uint64_t>(os, v);
  for (double x : d.data) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(x));
  if (!os) throw IngestionError("dump: write failed");
}

NumericDump read_dump(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw IngestionError("dump: bad magic");
  }
  const auto version = get_le<std::uint32_t>(is);
  if (version != kVersion) throw IngestionError("dump: unsupported version " + std::to_string(version));
  const auto dtype = get_le<std::uint32_t>(is);
  if (dtype != kFloat64) throw IngestionError("dump: unsupported dtype " + std::to_string(dtype));
  const auto ndim = get_le<std::uint32_t>(is);
  if (ndim > 16) throw IngestionError("dump: implausible rank " + std::to_string(ndim));
  NumericDump d;
  for (std::uint32_t i = 0; i < ndim; ++i) d.dims.push_back(get_le<std::uint64_t>(is));
  const std::uint64_t n = element_count(d.dims);
  d.data.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw IngestionError("dump: truncated data");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    d.data[i] = std::bit_cast<double>(bits);
  }
  return d;
}

void write_dump_file(const std::filesystem::path& path, const NumericDump& d) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError(path.string() + ": cannot write");
  write_dump(os, d);
}

NumericDump read_dump_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError(path.string() + ": cannot open");
  try {
    return read_dump(is);
  } catch (const IngestionError& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

NumericDump to_dump(const VideoTensor& v) {
  const auto& x = v.matrix();
  return {{static_cast<std::uint64_t>(v.m()), static_cast<std::uint64_t>(v.n()),
           static_cast<std::uint64_t>(v.p())},
          std::vector<double>(x.data(), x.data() + x.size())};
}

VideoTensor video_from_dump(const NumericDump& d) {
  if (d.dims.size() != 3) throw IngestionError("dump: video needs 3 dims");
  const auto m = static_cast<Index>(d.dims[0]), n = static_cast<Index>(d.dims[1]),
             p = static_cast<Index>(d.dims[2]);
  Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(d.data.data(), m * n, p);
  return VideoTensor(m, n, std::move(x));
}

NumericDump to_dump(const MaskTensor& mask) {
  const auto& x = mask.matrix();
  return {{static_cast<std::uint64_t>(mask.m()), static_cast<std::uint64_t>(mask.n()),
           static_cast<std::uint64_t>(mask.p())},
          std::vector<double>(x.data(), x.data() + x.size())};
}

MaskTensor mask_from_dump(const NumericDump& d) {
  const VideoTensor v = video_from_dump(d);
  try {
    return MaskTensor(v.m(), v.n(), v.matrix());
  } catch (const Error& e) {
    throw IngestionError(std::string("dump: ") + e.what());
  }
}

NumericDump to_dump(const Eigen::MatrixXd& x) {
  return {{static_cast<std::uint64_t>(x.rows()), static_cast<std::uint64_t>(x.cols())},
          std::vector<double>(x.data(), x.data() + x.size())};
}

Eigen::MatrixXd matrix_from_dump(const NumericDump& d) {
  if (d.dims.size() != 2) throw IngestionError("dump: matrix needs 2 dims");
  return Eigen::Map<const Eigen::MatrixXd>(d.data.data(), static_cast<Index>(d.dims[0]),
                                           static_cast<Index>(d.dims[1]));
}

}  // namespace prpca
