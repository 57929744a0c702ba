#pragma once

// State shared by the encoder and the decoder while a picture is coded.
// Both sides reconstruct and count through these helpers so their results
// agree bit for bit.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "derd/energy_model.hpp"
#include "derd/frame.hpp"
#include "derd/intra.hpp"

namespace derd::detail {

inline constexpr int kCtuSize = 32;
inline constexpr int kMinCuSize = 8;

struct PictureState {
  Frame recon;
  std::array<intra::CodedMap, 3> coded;
  std::vector<std::int8_t> modes;  // luma mode per 4x4 cell, -1 = not coded
  int mode_cols = 0;

  PictureState(int width, int height);

  int modeAt(int x, int y) const;
  void setMode(int x, int y, int size, int mode);
  /// MPM list of the luma block at (x, y); the above neighbour is only
  /// used inside the current CTU row.
  std::array<int, 3> mostProbable(int x, int y) const;

  intra::References references(Component c, int x, int y, int size) const {
    const auto i = static_cast<std::size_t>(c);
    return intra::gatherReferences(recon.planes[i], coded[i], x, y, size);
  }

  /// Writes a reconstructed block and marks it available.
  void store(Component c, int x, int y, int size, std::span<const std::uint8_t> samples);
};

/// Prediction plus dequantized, inverse-transformed residual, clipped to
/// 8 bits. With cbf false the prediction is copied.
void reconstruct(std::span<const std::uint8_t> pred, std::span<const std::int32_t> levels,
                 bool cbf, bool transform_skip, int qp, int size, std::span<std::uint8_t> out);

/// Counts one coded component block contributes.
FeatureCounts blockDelta(Component c, int size, int mode, bool outside_mpm,
                         std::span<const std::int32_t> levels, bool cbf, bool transform_skip);

}  // namespace derd::detail
