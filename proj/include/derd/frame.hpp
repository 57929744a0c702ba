#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "derd/energy_model.hpp"

namespace derd {

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> samples;

  Plane() = default;
  Plane(int w, int h, std::uint8_t fill = 128)
      : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return samples[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return samples[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const Plane&) const = default;
};

/// One 8-bit 4:2:0 picture. Width and height are multiples of 8.
struct Frame {
  int width = 0;
  int height = 0;
  std::array<Plane, 3> planes;

  Frame() = default;
  Frame(int w, int h, std::uint8_t fill = 128);

  Plane& plane(Component c) { return planes[static_cast<std::size_t>(c)]; }
  const Plane& plane(Component c) const { return planes[static_cast<std::size_t>(c)]; }

  bool operator==(const Frame&) const = default;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws FormatError unless both dimensions are positive multiples of 8.
void requireCodableDimensions(int width, int height);

/// Reads up to max_frames pictures (0 = all) of planar 8-bit 4:2:0.
std::vector<Frame> readYuv420(const std::filesystem::path& path, int width, int height,
                              int max_frames = 0);
void writeYuv420(const std::filesystem::path& path, std::span<const Frame> frames);

/// Binary PGM (P5) or PPM (P6), 8-bit. Grey images get neutral chroma;
/// colour images are converted with BT.601 full-range weights and 2x2
/// chroma averaging.
Frame readPnm(const std::filesystem::path& path);

/// Loads .yuv (dimensions required), .pgm, or .ppm.
std::vector<Frame> loadPictures(const std::filesystem::path& path, int width, int height,
                                int max_frames = 0);

}  // namespace derd
