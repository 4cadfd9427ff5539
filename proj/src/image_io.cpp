#include "prpca/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fnmatch.h>
#include <fstream>
#include <memory>
#include <sstream>

#include "prpca/error.hpp"

namespace fs = std::filesystem;

namespace prpca {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* out = static_cast<std::string*>(png_get_error_ptr(png));
  if (out) *out = msg;
  longjmp(png_jmpbuf(png), 1);
}

void png_warn(png_structp, png_const_charp) {}

Image read_png(const fs::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IngestionError(path.string() + ": cannot open");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IngestionError(path.string() + ": not a PNG file");
  }
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  if (!png) throw IngestionError(path.string() + ": libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IngestionError(path.string() + ": libpng init failed");
  }
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  Image img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IngestionError(path.string() + ": " + (message.empty() ? "corrupt PNG" : message));
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
    depth = 8;
  }
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if ((color & PNG_COLOR_MASK_ALPHA) || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info), h = png_get_image_height(png, info);
  const int channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img.bit_depth = depth;
  img.channels.assign(static_cast<std::size_t>(channels), Eigen::MatrixXd(h, w));
  const double scale = depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 y = 0; y < h; ++y) {
    const png_bytep row = rows[y];
    for (png_uint_32 x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t idx = static_cast<std::size_t>(x) * channels + c;
        const double v = depth == 16 ? (row[2 * idx] << 8 | row[2 * idx + 1]) : row[idx];
        img.channels[c](y, x) = v / scale;
      }
    }
  }
  return img;
}

// Reads one whitespace/comment separated header token of a PNM file.
std::string pnm_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {}
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

Image read_pnm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError(path.string() + ": cannot open");
  const std::string magic = pnm_token(is);
  if (magic != "P5" && magic != "P6") throw IngestionError(path.string() + ": only binary P5/P6 supported");
  long w = 0, h = 0, maxval = 0;
  try {
    w = std::stol(pnm_token(is));
    h = std::stol(pnm_token(is));
    maxval = std::stol(pnm_token(is));
  } catch (const std::exception&) {
    throw IngestionError(path.string() + ": malformed header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw IngestionError(path.string() + ": malformed header");
  }
  const int channels = magic == "P5" ? 1 : 3;
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> data(static_cast<std::size_t>(w * h * channels * bytes));
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (is.gcount() != static_cast<std::streamsize>(data.size())) {
    throw IngestionError(path.string() + ": truncated pixel data");
  }
  Image img;
  img.bit_depth = bytes == 2 ? 16 : 8;
  img.channels.assign(static_cast<std::size_t>(channels), Eigen::MatrixXd(h, w));
  std::size_t pos = 0;
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        double v = data[pos];
        if (bytes == 2) v = data[pos] << 8 | data[pos + 1];
        pos += bytes;
        img.channels[c](y, x) = v / static_cast<double>(maxval);
      }
    }
  }
  return img;
}

bool is_supported(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

unsigned quantize(double v, double scale) {
  if (!std::isfinite(v)) v = 0.0;
  return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * scale));
}

void write_pnm(const fs::path& path, const std::vector<Eigen::MatrixXd>& channels, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ArgumentError("pnm: bit depth must be 8 or 16");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError(path.string() + ": cannot write");
  const Index h = channels.front().rows(), w = channels.front().cols();
  const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
  os << (channels.size() == 1 ? "P5" : "P6") << '\n' << w << ' ' << h << '\n' << maxval << '\n';
  std::vector<unsigned char> data;
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      for (const auto& ch : channels) {
        const unsigned q = quantize(ch(y, x), maxval);
        if (bit_depth == 16) data.push_back(static_cast<unsigned char>(q >> 8));
        data.push_back(static_cast<unsigned char>(q & 0xff));
      }
  os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!os) throw IngestionError(path.string() + ": write failed");
}

}  // namespace

Image read_image(const fs::path& path) {
  if (!fs::exists(path)) throw IngestionError(path.string() + ": no such file");
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  throw IngestionError(path.string() + ": unsupported format");
}

void write_png(const fs::path& path, const Eigen::MatrixXd& gray, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ArgumentError("png: bit depth must be 8 or 16");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IngestionError(path.string() + ": cannot write");
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IngestionError(path.string() + ": libpng init failed");
  }
  const Index h = gray.rows(), w = gray.cols();
  const int bytes = bit_depth / 8;
  std::vector<png_byte> buffer(static_cast<std::size_t>(h * w * bytes));
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  const double scale = bit_depth == 16 ? 65535.0 : 255.0;
  for (Index y = 0; y < h; ++y) {
    rows[y] = buffer.data() + y * w * bytes;
    for (Index x = 0; x < w; ++x) {
      const unsigned q = quantize(gray(y, x), scale);
      if (bytes == 2) {
        rows[y][2 * x] = static_cast<png_byte>(q >> 8);
        rows[y][2 * x + 1] = static_cast<png_byte>(q & 0xff);
      } else {
        rows[y][x] = static_cast<png_byte>(q);
      }
    }
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IngestionError(path.string() + ": " + (message.empty() ? "PNG write failed" : message));
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_pgm(const fs::path& path, const Eigen::MatrixXd& gray, int bit_depth) {
  write_pnm(path, {gray}, bit_depth);
}

void write_ppm(const fs::path& path, const std::vector<Eigen::MatrixXd>& rgb, int bit_depth) {
  if (rgb.size() != 3) throw ArgumentError("ppm: need exactly three channels");
  write_pnm(path, rgb, bit_depth);
}

bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string da = a.substr(i, ie - i), db = b.substr(j, je - j);
      const auto strip = [](std::string& s) {
        const auto nz = s.find_first_not_of('0');
        s = nz == std::string::npos ? "0" : s.substr(nz);
      };
      const std::size_t la = da.size(), lb = db.size();
      strip(da);
      strip(db);
      if (da.size() != db.size()) return da.size() < db.size();
      if (da != db) return da < db;
      if (la != lb) return la < lb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

std::vector<fs::path> list_frame_files(const std::string& pattern) {
  std::vector<fs::path> out;
  const fs::path p(pattern);
  std::error_code ec;
  if (fs::is_directory(p, ec)) {
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_regular_file() && is_supported(e.path())) out.push_back(e.path());
  } else {
    const std::string name = p.filename().string();
    if (name.find_first_of("*?[") == std::string::npos) {
      if (!fs::exists(p, ec)) throw IngestionError(pattern + ": no such file or directory");
      out.push_back(p);
    } else {
      const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
      if (!fs::is_directory(dir, ec)) throw IngestionError(pattern + ": no such directory");
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && fnmatch(name.c_str(), e.path().filename().c_str(), 0) == 0)
          out.push_back(e.path());
    }
  }
  if (out.empty()) throw IngestionError(pattern + ": no frames found");
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return natural_less(a.filename().string(), b.filename().string());
  });
  return out;
}

std::vector<std::vector<Frame>> load_frame_channels(const std::string& pattern) {
  const auto files = list_frame_files(pattern);
  std::vector<std::vector<Frame>> out;
  Index h = -1, w = -1;
  std::size_t channels = 0;
  for (const auto& f : files) {
    Image img = read_image(f);
    if (h < 0) {
      h = img.height();
      w = img.width();
      channels = img.channels.size();
      out.resize(channels);
    } else if (img.height() != h || img.width() != w) {
      throw IngestionError(f.string() + ": frame is " + std::to_string(img.height()) + "x" +
                           std::to_string(img.width()) + ", expected " + std::to_string(h) + "x" +
                           std::to_string(w));
    } else if (img.channels.size() != channels) {
      throw IngestionError(f.string() + ": channel count differs from the first frame");
    }
    for (std::size_t c = 0; c < channels; ++c) out[c].emplace_back(std::move(img.channels[c]));
  }
  return out;
}

std::vector<Frame> load_frames(const std::string& pattern) {
  auto channels = load_frame_channels(pattern);
  if (channels.size() == 1) return std::move(channels.front());
  std::vector<Frame> out;
  for (std::size_t k = 0; k < channels[0].size(); ++k) {
    out.emplace_back(Eigen::MatrixXd(0.299 * channels[0][k].pixels + 0.587 * channels[1][k].pixels +
                                     0.114 * channels[2][k].pixels));
  }
  return out;
}

MaskTensor load_mask_frames(const std::string& pattern) {
  const auto frames = load_frames(pattern);
  VideoTensor v = VideoTensor::from_frames(frames);
  Eigen::MatrixXd bin = (v.matrix().array() > 0.5).cast<double>();
  return MaskTensor(v.m(), v.n(), std::move(bin));
}

void write_frame_sequence(const fs::path& dir, const std::string& prefix, const VideoTensor& frames,
                          int bit_depth) {
  fs::create_directories(dir);
  for (Index k = 0; k < frames.p(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "_%04ld.png", static_cast<long>(k + 1));
    write_png(dir / (prefix + name), Eigen::MatrixXd(frames.frame(k)), bit_depth);
  }
}

VideoTensor signed_visualization(const VideoTensor& x) {
  const double peak = x.matrix().size() ? x.matrix().cwiseAbs().maxCoeff() : 0.0;
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(x.matrix().rows(), x.matrix().cols(), 0.5);
  if (peak > 0.0) out.array() += 0.5 * x.matrix().array() / peak;
  return VideoTensor(x.m(), x.n(), std::move(out));
}

}  // namespace prpca
