#include "picture_state.hpp"

#include <algorithm>

#include "derd/quant.hpp"
#include "derd/syntax.hpp"
#include "derd/transform.hpp"

namespace derd::detail {

PictureState::PictureState(int width, int height)
    : recon(width, height, 0),
      coded{intra::CodedMap(width, height), intra::CodedMap(width / 2, height / 2),
            intra::CodedMap(width / 2, height / 2)},
      modes(static_cast<std::size_t>((width / 4) * (height / 4)), -1),
      mode_cols(width / 4) {}

int PictureState::modeAt(int x, int y) const {
  if (x < 0 || y < 0 || x >= recon.width || y >= recon.height) return -1;
  return modes[static_cast<std::size_t>((y / 4) * mode_cols + x / 4)];
}

void PictureState::setMode(int x, int y, int size, int mode) {
  for (int cy = y / 4; cy < (y + size) / 4; ++cy)
    for (int cx = x / 4; cx < (x + size) / 4; ++cx)
      modes[static_cast<std::size_t>(cy * mode_cols + cx)] = static_cast<std::int8_t>(mode);
}

std::array<int, 3> PictureState::mostProbable(int x, int y) const {
  const int left = modeAt(x - 1, y);
  const int above = (y % kCtuSize) != 0 ? modeAt(x, y - 1) : -1;
  return intra::mostProbableModes(left, above);
}

void PictureState::store(Component c, int x, int y, int size, std::span<const std::uint8_t> samples) {
  const auto i = static_cast<std::size_t>(c);
  Plane& p = recon.planes[i];
  for (int r = 0; r < size; ++r)
    std::copy_n(samples.begin() + r * size, size,
                p.samples.begin() + static_cast<std::ptrdiff_t>((y + r) * p.width + x));
  coded[i].mark(x, y, size, size);
}

void reconstruct(std::span<const std::uint8_t> pred, std::span<const std::int32_t> levels,
                 bool cbf, bool transform_skip, int qp, int size, std::span<std::uint8_t> out) {
  const auto n = static_cast<std::size_t>(size * size);
  if (!cbf) {
    std::copy_n(pred.begin(), n, out.begin());
    return;
  }
  std::array<std::int32_t, 32 * 32> coeffs;
  std::array<std::int32_t, 32 * 32> resid;
  quant::dequantize(levels.first(n), std::span(coeffs).first(n), qp);
  if (transform_skip)
    transform::inverseSkip(coeffs, resid, size);
  else
    transform::inverse(coeffs, resid, size);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = static_cast<std::uint8_t>(std::clamp(static_cast<int>(pred[i]) + resid[i], 0, 255));
}

FeatureCounts blockDelta(Component c, int size, int mode, bool outside_mpm,
                         std::span<const std::int32_t> levels, bool cbf, bool transform_skip) {
  FeatureCounts d;
  if (cbf) d = syntax::residualCounts(levels, size, c, transform_skip);
  d.mode(intra::modeClass(mode), size) += 1;
  if (outside_mpm) d.n_nompm = 1;
  return d;
}

}  // namespace derd::detail
