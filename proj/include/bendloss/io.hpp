#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "bendloss/grid.hpp"

namespace bendloss {

enum class LabelFormat { png16, lmap };

/// Malformed input file. offset() is the byte position the problem was
/// detected at.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& message, std::size_t offset)
      : std::runtime_error(message + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Label maps. png16 stores ids as single-channel 16-bit gray pixels; lmap is
// a raw little-endian format with 32-bit ids ("LMAP", u32 height, u32 width,
// then height*width u32 ids row-major).
LabelMap read_label_map(const std::filesystem::path& path, LabelFormat format);
void write_label_map(const LabelMap& map, const std::filesystem::path& path, LabelFormat format);

/// Sniffs png16 vs lmap from the leading magic bytes.
LabelMap read_label_map(const std::filesystem::path& path);

// FMAP: "FMAP", u32 height, width, channels (little-endian), then
// height*width*channels float32 values, row-major, channel-interleaved.
std::vector<FloatMap> read_fmap(const std::filesystem::path& path);
void write_fmap(const std::vector<FloatMap>& channels, const std::filesystem::path& path);

FloatMap read_float_map(const std::filesystem::path& path);
void write_float_map(const FloatMap& map, const std::filesystem::path& path);

/// Channel 0 is horizontal, channel 1 vertical.
FloatMapPair read_float_map_pair(const std::filesystem::path& path);
void write_float_map_pair(const FloatMapPair& pair, const std::filesystem::path& path);

/// 8-bit RGB PNG, used for inspection overlays.
void write_rgb8_png(const Grid<std::uint8_t>& r, const Grid<std::uint8_t>& g,
                    const Grid<std::uint8_t>& b, const std::filesystem::path& path);

}  // namespace bendloss
