#include "bendloss/io.hpp"

#include <png.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>

namespace bendloss {
namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  std::uint32_t u32le() {
    if (pos_ + 4 > bytes_.size()) throw FormatError(name_ + ": truncated", pos_);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }

  float f32le() { return std::bit_cast<float>(u32le()); }

  void expect_magic(const char magic[4]) {
    if (bytes_.size() < 4 || std::memcmp(bytes_.data(), magic, 4) != 0)
      throw FormatError(name_ + ": bad magic", 0);
    pos_ = 4;
  }

  void expect_end() {
    if (pos_ != bytes_.size()) throw FormatError(name_ + ": trailing bytes", pos_);
  }

  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

class ByteWriter {
 public:
  void u32le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32le(float v) { u32le(std::bit_cast<std::uint32_t>(v)); }
  void magic(const char m[4]) { bytes_.insert(bytes_.end(), m, m + 4); }

  void dump(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes_.data()),
              static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

void check_file_dims(std::uint32_t h, std::uint32_t w, const std::string& name,
                     std::size_t offset) {
  if (h == 0 || w == 0) throw std::invalid_argument(name + ": zero dimension");
  // 2^28 pixels per side is already far beyond any slide tile.
  if (h > (1u << 28) || w > (1u << 28)) throw FormatError(name + ": implausible dimensions", offset);
}

// --- lmap ------------------------------------------------------------------

LabelMap read_lmap(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  ByteReader r(bytes, path.filename().string());
  r.expect_magic("LMAP");
  const std::uint32_t h = r.u32le();
  const std::uint32_t w = r.u32le();
  check_file_dims(h, w, path.filename().string(), 4);
  LabelMap map(h, w);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) map(y, x) = r.u32le();
  r.expect_end();
  return map;
}

void write_lmap(const LabelMap& map, const std::filesystem::path& path) {
  ByteWriter w;
  w.magic("LMAP");
  w.u32le(static_cast<std::uint32_t>(map.rows()));
  w.u32le(static_cast<std::uint32_t>(map.cols()));
  for (Eigen::Index y = 0; y < map.rows(); ++y)
    for (Eigen::Index x = 0; x < map.cols(); ++x) w.u32le(map(y, x));
  w.dump(path);
}

// --- png16 -----------------------------------------------------------------

struct PngReadState {
  std::FILE* file = nullptr;
  std::size_t pos = 0;
  std::string error;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t n) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (std::fread(out, 1, n, st->file) != n) {
    st->error = "unexpected end of file";
    png_error(png, "read error");
  }
  st->pos += n;
}

void png_error_cb(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngReadState*>(png_get_error_ptr(png));
  if (st && st->error.empty()) st->error = msg;
  longjmp(png_jmpbuf(png), 1);
}

void png_warn_cb(png_structp, png_const_charp) {}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

LabelMap read_png16(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw std::runtime_error("cannot open " + path.string());

  std::uint8_t sig[8] = {};
  const std::size_t got = std::fread(sig, 1, 8, file.get());
  if (got != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError(path.filename().string() + ": not a PNG file", 0);

  PngReadState state{file.get(), 8, {}};
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, png_error_cb, png_warn_cb);
  if (!png) throw std::runtime_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng init failed");
  }

  std::vector<std::uint16_t> pixels;
  std::uint32_t width = 0, height = 0;

  if (setjmp(png_jmpbuf(png))) {
    const std::size_t pos = state.pos;
    const std::string msg = state.error.empty() ? "decode error" : state.error;
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.filename().string() + ": " + msg, pos);
  }

  png_set_read_fn(png, &state, png_read_cb);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth != 16 || color != PNG_COLOR_TYPE_GRAY) {
    state.error = "expected single-channel 16-bit grayscale";
    longjmp(png_jmpbuf(png), 1);
  }
  if (width == 0 || height == 0) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::invalid_argument(path.filename().string() + ": zero dimension");
  }

  pixels.resize(static_cast<std::size_t>(width) * height);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 2);
  for (std::uint32_t y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (std::uint32_t x = 0; x < width; ++x) {
      // PNG samples are big-endian.
      pixels[static_cast<std::size_t>(y) * width + x] =
          static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  LabelMap map(height, width);
  for (std::uint32_t y = 0; y < height; ++y)
    for (std::uint32_t x = 0; x < width; ++x)
      map(y, x) = pixels[static_cast<std::size_t>(y) * width + x];
  return map;
}

void write_png_rows(const std::filesystem::path& path, std::uint32_t height, std::uint32_t width,
                    int color_type, int bit_depth,
                    const std::function<void(std::uint32_t, std::uint8_t*)>& fill_row,
                    std::size_t row_bytes) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png write failed: " + path.string());
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint8_t> row(row_bytes);
  for (std::uint32_t y = 0; y < height; ++y) {
    fill_row(y, row.data());
    png_write_row(png, row.data());
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

void write_png16(const LabelMap& map, const std::filesystem::path& path) {
  for (Eigen::Index y = 0; y < map.rows(); ++y)
    for (Eigen::Index x = 0; x < map.cols(); ++x)
      if (map(y, x) > 0xFFFFu)
        throw std::overflow_error("instance id " + std::to_string(map(y, x)) +
                                  " does not fit 16-bit png16");

  const auto width = static_cast<std::uint32_t>(map.cols());
  write_png_rows(path, static_cast<std::uint32_t>(map.rows()), width, PNG_COLOR_TYPE_GRAY, 16,
                 [&](std::uint32_t y, std::uint8_t* row) {
                   for (std::uint32_t x = 0; x < width; ++x) {
                     const auto v = static_cast<std::uint16_t>(map(y, x));
                     row[2 * x] = static_cast<std::uint8_t>(v >> 8);
                     row[2 * x + 1] = static_cast<std::uint8_t>(v & 0xFF);
                   }
                 },
                 static_cast<std::size_t>(width) * 2);
}

void require_nonempty(Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (rows == 0 || cols == 0)
    throw std::invalid_argument(std::string(what) + ": refusing to write an empty grid");
}

}  // namespace

LabelMap read_label_map(const std::filesystem::path& path, LabelFormat format) {
  return format == LabelFormat::lmap ? read_lmap(path) : read_png16(path);
}

LabelMap read_label_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() >= 4 && std::memcmp(magic, "LMAP", 4) == 0)
    return read_lmap(path);
  return read_png16(path);
}

void write_label_map(const LabelMap& map, const std::filesystem::path& path, LabelFormat format) {
  require_nonempty(map.rows(), map.cols(), "label map");
  if (format == LabelFormat::lmap)
    write_lmap(map, path);
  else
    write_png16(map, path);
}

std::vector<FloatMap> read_fmap(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  ByteReader r(bytes, path.filename().string());
  r.expect_magic("FMAP");
  const std::uint32_t h = r.u32le();
  const std::uint32_t w = r.u32le();
  const std::uint32_t channels = r.u32le();
  check_file_dims(h, w, path.filename().string(), 4);
  if (channels == 0 || channels > 16)
    throw FormatError(path.filename().string() + ": bad channel count", 12);

  std::vector<FloatMap> maps(channels, FloatMap(h, w));
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x)
      for (std::uint32_t c = 0; c < channels; ++c) {
        const std::size_t offset = r.pos();
        const float v = r.f32le();
        if (!std::isfinite(v))
          throw FormatError(path.filename().string() + ": non-finite value", offset);
        maps[c](y, x) = v;
      }
  r.expect_end();
  return maps;
}

void write_fmap(const std::vector<FloatMap>& channels, const std::filesystem::path& path) {
  if (channels.empty()) throw std::invalid_argument("fmap: no channels");
  require_nonempty(channels[0].rows(), channels[0].cols(), "fmap");
  for (const auto& c : channels) {
    require_same_shape(channels[0], c, "fmap channels");
    validate_float_map(c);
  }
  ByteWriter w;
  w.magic("FMAP");
  w.u32le(static_cast<std::uint32_t>(channels[0].rows()));
  w.u32le(static_cast<std::uint32_t>(channels[0].cols()));
  w.u32le(static_cast<std::uint32_t>(channels.size()));
  for (Eigen::Index y = 0; y < channels[0].rows(); ++y)
    for (Eigen::Index x = 0; x < channels[0].cols(); ++x)
      for (const auto& c : channels) w.f32le(c(y, x));
  w.dump(path);
}

FloatMap read_float_map(const std::filesystem::path& path) {
  auto maps = read_fmap(path);
  if (maps.size() != 1)
    throw FormatError(path.filename().string() + ": expected 1 channel, found " +
                          std::to_string(maps.size()),
                      12);
  return std::move(maps[0]);
}

void write_float_map(const FloatMap& map, const std::filesystem::path& path) {
  write_fmap({map}, path);
}

FloatMapPair read_float_map_pair(const std::filesystem::path& path) {
  auto maps = read_fmap(path);
  if (maps.size() != 2)
    throw FormatError(path.filename().string() + ": expected 2 channels, found " +
                          std::to_string(maps.size()),
                      12);
  return {std::move(maps[0]), std::move(maps[1])};
}

void write_float_map_pair(const FloatMapPair& pair, const std::filesystem::path& path) {
  require_same_shape(pair.horizontal, pair.vertical, "float map pair");
  write_fmap({pair.horizontal, pair.vertical}, path);
}

void write_rgb8_png(const Grid<std::uint8_t>& r, const Grid<std::uint8_t>& g,
                    const Grid<std::uint8_t>& b, const std::filesystem::path& path) {
  require_same_shape(r, g, "rgb channels");
  require_same_shape(r, b, "rgb channels");
  require_nonempty(r.rows(), r.cols(), "rgb image");
  const auto width = static_cast<std::uint32_t>(r.cols());
  write_png_rows(path, static_cast<std::uint32_t>(r.rows()), width, PNG_COLOR_TYPE_RGB, 8,
                 [&](std::uint32_t y, std::uint8_t* row) {
                   for (std::uint32_t x = 0; x < width; ++x) {
                     row[3 * x + 0] = r(y, x);
                     row[3 * x + 1] = g(y, x);
                     row[3 * x + 2] = b(y, x);
                   }
                 },
                 static_cast<std::size_t>(width) * 3);
}

}  // namespace bendloss
