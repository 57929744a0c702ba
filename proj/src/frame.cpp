#include "derd/frame.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace derd {

Frame::Frame(int w, int h, std::uint8_t fill) : width(w), height(h) {
  planes[0] = Plane(w, h, fill);
  planes[1] = Plane(w / 2, h / 2, fill);
  planes[2] = Plane(w / 2, h / 2, fill);
}

void requireCodableDimensions(int width, int height) {
  if (width <= 0 || height <= 0 || width % 8 != 0 || height % 8 != 0)
    throw FormatError("frame dimensions " + std::to_string(width) + "x" +
                      std::to_string(height) + " are not positive multiples of 8");
}

std::vector<Frame> readYuv420(const std::filesystem::path& path, int width, int height,
                              int max_frames) {
  if (width <= 0 || height <= 0 || width % 2 || height % 2)
    throw FormatError("invalid 4:2:0 dimensions " + std::to_string(width) + "x" +
                      std::to_string(height));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");

  std::vector<Frame> frames;
  while (max_frames <= 0 || static_cast<int>(frames.size()) < max_frames) {
    Frame f(width, height);
    bool complete = true;
    for (auto& p : f.planes) {
      in.read(reinterpret_cast<char*>(p.samples.data()),
              static_cast<std::streamsize>(p.samples.size()));
      if (in.gcount() != static_cast<std::streamsize>(p.samples.size())) {
        complete = false;
        break;
      }
    }
    if (!complete) break;
    frames.push_back(std::move(f));
  }
  if (frames.empty())
    throw FormatError("'" + path.string() + "' holds no complete " + std::to_string(width) +
                      "x" + std::to_string(height) + " frame");
  return frames;
}

void writeYuv420(const std::filesystem::path& path, std::span<const Frame> frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (const auto& f : frames)
    for (const auto& p : f.planes)
      out.write(reinterpret_cast<const char*>(p.samples.data()),
                static_cast<std::streamsize>(p.samples.size()));
}

namespace {

int readPnmInt(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) throw FormatError("malformed PNM header");
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = in.get();
  }
  return v;  // the single whitespace after the field has been consumed
}

std::uint8_t clip8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

Frame readPnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    throw FormatError("'" + path.string() + "' is not a binary PGM/PPM file");
  const bool colour = magic[1] == '6';
  const int w = readPnmInt(in);
  const int h = readPnmInt(in);
  const int maxval = readPnmInt(in);
  if (maxval != 255) throw FormatError("only 8-bit PNM files are supported");
  if (w <= 0 || h <= 0 || w % 2 || h % 2)
    throw FormatError("PNM dimensions must be even for 4:2:0 conversion");

  const std::size_t channels = colour ? 3 : 1;
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw FormatError("'" + path.string() + "' is truncated");

  Frame f(w, h);
  if (!colour) {
    std::copy(raw.begin(), raw.end(), f.planes[0].samples.begin());
    return f;
  }
  std::vector<double> cb(static_cast<std::size_t>(w) * h), cr(cb.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double r = raw[3 * i], g = raw[3 * i + 1], b = raw[3 * i + 2];
      f.planes[0].at(x, y) = clip8(0.299 * r + 0.587 * g + 0.114 * b);
      cb[i] = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
      cr[i] = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    }
  }
  for (int y = 0; y < h / 2; ++y) {
    for (int x = 0; x < w / 2; ++x) {
      const std::size_t i0 = static_cast<std::size_t>(2 * y) * w + 2 * x;
      const std::size_t i1 = i0 + static_cast<std::size_t>(w);
      f.planes[1].at(x, y) = clip8((cb[i0] + cb[i0 + 1] + cb[i1] + cb[i1 + 1]) / 4.0);
      f.planes[2].at(x, y) = clip8((cr[i0] + cr[i0 + 1] + cr[i1] + cr[i1 + 1]) / 4.0);
    }
  }
  return f;
}

std::vector<Frame> loadPictures(const std::filesystem::path& path, int width, int height,
                                int max_frames) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".pgm" || ext == ".ppm") return {readPnm(path)};
  if (ext == ".yuv") {
    if (width <= 0 || height <= 0)
      throw FormatError("raw .yuv input needs --width and --height");
    return readYuv420(path, width, height, max_frames);
  }
  throw FormatError("unsupported input format '" + ext + "'");
}

}  // namespace derd
