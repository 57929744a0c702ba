#include <array>

#include "derd/codec.hpp"
#include "derd/entropy.hpp"
#include "derd/intra.hpp"
#include "derd/syntax.hpp"
#include "picture_state.hpp"

namespace derd {

namespace {

using detail::kCtuSize;
using detail::kMinCuSize;
using syntax::Channel;

class FrameDecoder {
 public:
  FrameDecoder(std::span<const std::uint8_t> payload, int width, int height, int qp)
      : dec_(payload), width_(width), height_(height), qp_(qp), pic_(width, height) {}

  void run() {
    for (int y = 0; y < height_; y += kCtuSize)
      for (int x = 0; x < width_; x += kCtuSize) decodeCu(x, y, kCtuSize);
  }

  Frame& recon() { return pic_.recon; }
  const FeatureCounts& counts() const { return counts_; }

 private:
  void decodeCu(int x, int y, int size) {
    if (x >= width_ || y >= height_) return;
    const int half = size / 2;
    const bool inside = x + size <= width_ && y + size <= height_;
    const bool split = !inside || syntax::readSplit(dec_, ctx_, size);
    if (!split)
      leaf(x, y, size);
    else if (size == kMinCuSize)
      split8(x, y);
    else
      for (int i = 0; i < 4; ++i) decodeCu(x + (i & 1) * half, y + (i >> 1) * half, half);
  }

  // Parses one component block, reconstructs it against refs and counts it.
  void block(Component c, const intra::References& refs, int x, int y, int size, int mode,
             bool outside_mpm, bool allow_skip) {
    const auto n = static_cast<std::size_t>(size * size);
    std::array<std::int32_t, 32 * 32> levels{};
    const bool cbf = syntax::readCbf(dec_, ctx_, syntax::channelOf(c));
    bool ts = false;
    if (cbf) {
      if (allow_skip) ts = syntax::readTransformSkip(dec_, ctx_);
      syntax::readResidual(dec_, ctx_, levels, size, syntax::channelOf(c));
    }
    std::array<std::uint8_t, 32 * 32> pred;
    std::array<std::uint8_t, 32 * 32> out;
    intra::predict(refs, mode, std::span(pred).first(n));
    detail::reconstruct(pred, levels, cbf, ts, qp_, size, out);
    pic_.store(c, x, y, size, std::span(out).first(n));
    counts_ += detail::blockDelta(c, size, mode, outside_mpm, std::span(levels).first(n), cbf, ts);
  }

  void leaf(int x, int y, int size) {
    const auto mpm = pic_.mostProbable(x, y);
    const int mode = syntax::readLumaMode(dec_, ctx_, mpm);
    const int cs = size / 2;
    const auto refsY = pic_.references(Component::Y, x, y, size);
    const auto refsU = pic_.references(Component::U, x / 2, y / 2, cs);
    const auto refsV = pic_.references(Component::V, x / 2, y / 2, cs);
    block(Component::Y, refsY, x, y, size, mode, !syntax::isMostProbable(mode, mpm), false);
    block(Component::U, refsU, x / 2, y / 2, cs, mode, false, false);
    block(Component::V, refsV, x / 2, y / 2, cs, mode, false, false);
    pic_.setMode(x, y, size, mode);
  }

  void split8(int x, int y) {
    int firstMode = intra::kDc;
    for (int i = 0; i < 4; ++i) {
      const int bx = x + (i & 1) * 4;
      const int by = y + (i >> 1) * 4;
      const auto mpm = pic_.mostProbable(bx, by);
      const int mode = syntax::readLumaMode(dec_, ctx_, mpm);
      const auto refs = pic_.references(Component::Y, bx, by, 4);
      block(Component::Y, refs, bx, by, 4, mode, !syntax::isMostProbable(mode, mpm), true);
      pic_.setMode(bx, by, 4, mode);
      if (i == 0) firstMode = mode;
    }
    const auto refsU = pic_.references(Component::U, x / 2, y / 2, 4);
    block(Component::U, refsU, x / 2, y / 2, 4, firstMode, false, false);
    const auto refsV = pic_.references(Component::V, x / 2, y / 2, 4);
    block(Component::V, refsV, x / 2, y / 2, 4, firstMode, false, false);
  }

  entropy::BinDecoder dec_;
  syntax::ContextSet ctx_;
  int width_;
  int height_;
  int qp_;
  detail::PictureState pic_;
  FeatureCounts counts_;
};

}  // namespace

DecodeResult decodeStream(const Bitstream& stream) {
  const int w = static_cast<int>(stream.width);
  const int h = static_cast<int>(stream.height);
  requireCodableDimensions(w, h);
  DecodeResult out;
  for (const auto& payload : stream.payloads) {
    FrameDecoder fd(payload, w, h, static_cast<int>(stream.qp));
    fd.run();
    FeatureCounts fc = fd.counts();
    fc.n_slice = 1;
    out.counts += fc;
    out.frames.push_back(std::move(fd.recon()));
  }
  return out;
}

}  // namespace derd
