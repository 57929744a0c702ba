#include "derd/intra.hpp"

#include <stdexcept>

namespace derd::intra {

namespace {

constexpr std::array<int, 35> kAngles{0,   0,   32,  26,  21,  17,  13,  9,  5,  2,  0,  -2,
                                      -5,  -9,  -13, -17, -21, -26, -32, -26, -21, -17, -13, -9,
                                      -5,  -2,  0,   2,   5,   9,   13,  17,  21,  26,  32};

int log2Size(int n) {
  switch (n) {
    case 4: return 2;
    case 8: return 3;
    case 16: return 4;
    case 32: return 5;
    default: throw std::invalid_argument("unsupported prediction size");
  }
}

void requireMode(int mode) {
  if (mode < 0 || mode >= kNumModes) throw std::out_of_range("intra mode out of range");
}

}  // namespace

ModeClass modeClass(int mode) {
  requireMode(mode);
  if (mode == kPlanar) return ModeClass::Planar;
  if (mode == kDc) return ModeClass::DC;
  return ModeClass::Angular;
}

int predictionAngle(int mode) {
  requireMode(mode);
  return kAngles[static_cast<std::size_t>(mode)];
}

int inverseAngle(int mode) {
  switch (predictionAngle(mode)) {
    case -2: return -4096;
    case -5: return -1638;
    case -9: return -910;
    case -13: return -630;
    case -17: return -482;
    case -21: return -390;
    case -26: return -315;
    case -32: return -256;
    default: return 0;
  }
}

CodedMap::CodedMap(int width, int height)
    : width_(width),
      height_(height),
      cols_((width + 3) / 4),
      rows_((height + 3) / 4),
      cells_(static_cast<std::size_t>(cols_) * rows_, 0) {}

bool CodedMap::isCoded(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
  return cells_[static_cast<std::size_t>(y / 4) * cols_ + x / 4] != 0;
}

void CodedMap::mark(int x, int y, int w, int h, bool coded) {
  for (int cy = y / 4; cy < (y + h + 3) / 4 && cy < rows_; ++cy)
    for (int cx = x / 4; cx < (x + w + 3) / 4 && cx < cols_; ++cx)
      cells_[static_cast<std::size_t>(cy) * cols_ + cx] = coded ? 1 : 0;
}

References gatherReferences(const Plane& recon, const CodedMap& coded, int x, int y, int size) {
  References r;
  r.size = size;
  auto fetch = [&](int sx, int sy) {
    return coded.isCoded(sx, sy) ? static_cast<int>(recon.at(sx, sy)) : kUnavailableSample;
  };
  r.above[0] = r.left[0] = fetch(x - 1, y - 1);
  for (int i = 0; i < 2 * size; ++i) {
    r.above[static_cast<std::size_t>(i) + 1] = fetch(x + i, y - 1);
    r.left[static_cast<std::size_t>(i) + 1] = fetch(x - 1, y + i);
  }
  return r;
}

namespace {

void predictPlanar(const References& r, std::span<std::uint8_t> out) {
  const int n = r.size;
  const int shift = log2Size(n) + 1;
  const int topRight = r.above[static_cast<std::size_t>(n) + 1];
  const int bottomLeft = r.left[static_cast<std::size_t>(n) + 1];
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const int v = (n - 1 - x) * r.left[static_cast<std::size_t>(y) + 1] + (x + 1) * topRight +
                    (n - 1 - y) * r.above[static_cast<std::size_t>(x) + 1] + (y + 1) * bottomLeft + n;
      out[static_cast<std::size_t>(y * n + x)] = static_cast<std::uint8_t>(v >> shift);
    }
  }
}

void predictDc(const References& r, std::span<std::uint8_t> out) {
  const int n = r.size;
  int sum = n;
  for (int i = 1; i <= n; ++i) sum += r.above[static_cast<std::size_t>(i)] + r.left[static_cast<std::size_t>(i)];
  const auto dc = static_cast<std::uint8_t>(sum >> (log2Size(n) + 1));
  std::fill(out.begin(), out.begin() + n * n, dc);
}

void predictAngular(const References& r, int mode, std::span<std::uint8_t> out) {
  const int n = r.size;
  const bool vertical = mode >= 18;
  const int angle = predictionAngle(mode);
  const auto& main = vertical ? r.above : r.left;
  const auto& side = vertical ? r.left : r.above;

  // ref[k + n] holds main-direction reference k, k in [-n, 2n].
  std::array<int, 3 * kMaxBlock + 1> buf{};
  int* ref = buf.data() + n;
  for (int k = 0; k <= 2 * n; ++k) ref[k] = main[static_cast<std::size_t>(k)];
  const int last = (n * angle) >> 5;
  if (angle < 0 && last < -1) {
    const int inv = inverseAngle(mode);
    for (int k = last; k <= -1; ++k)
      ref[k] = side[static_cast<std::size_t>((k * inv + 128) >> 8)];
  }

  for (int j = 0; j < n; ++j) {
    const int pos = (j + 1) * angle;
    const int idx = pos >> 5;
    const int fract = pos & 31;
    for (int i = 0; i < n; ++i) {
      int v;
      if (fract == 0)
        v = ref[i + idx + 1];
      else
        v = ((32 - fract) * ref[i + idx + 1] + fract * ref[i + idx + 2] + 16) >> 5;
      // j runs along the prediction direction: rows for vertical modes,
      // columns for horizontal ones.
      const int x = vertical ? i : j;
      const int y = vertical ? j : i;
      out[static_cast<std::size_t>(y * n + x)] = static_cast<std::uint8_t>(v);
    }
  }
}

}  // namespace

void predict(const References& refs, int mode, std::span<std::uint8_t> out) {
  requireMode(mode);
  if (out.size() < static_cast<std::size_t>(refs.size * refs.size))
    throw std::invalid_argument("prediction buffer too small");
  if (mode == kPlanar)
    predictPlanar(refs, out);
  else if (mode == kDc)
    predictDc(refs, out);
  else
    predictAngular(refs, mode, out);
}

std::array<int, 3> mostProbableModes(int left_mode, int above_mode) {
  const int a = left_mode < 0 ? kDc : left_mode;
  const int b = above_mode < 0 ? kDc : above_mode;
  if (a == b) {
    if (a < 2) return {kPlanar, kDc, kVertical};
    return {a, 2 + ((a + 29) % 32), 2 + ((a - 2 + 1) % 32)};
  }
  int c;
  if (a != kPlanar && b != kPlanar)
    c = kPlanar;
  else if (a != kDc && b != kDc)
    c = kDc;
  else
    c = kVertical;
  return {a, b, c};
}

}  // namespace derd::intra
