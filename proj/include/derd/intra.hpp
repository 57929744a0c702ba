#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "derd/energy_model.hpp"
#include "derd/frame.hpp"

namespace derd::intra {

inline constexpr int kPlanar = 0;
inline constexpr int kDc = 1;
inline constexpr int kHorizontal = 10;
inline constexpr int kVertical = 26;
inline constexpr int kNumModes = 35;
inline constexpr int kMaxBlock = 32;

/// Substitute for any reference sample that cannot be used.
inline constexpr int kUnavailableSample = 128;

ModeClass modeClass(int mode);

/// Displacement per row (or column) in 1/32 sample for angular modes 2..34.
int predictionAngle(int mode);
/// Fixed-point reciprocal used to project side references for negative angles.
int inverseAngle(int mode);

/// Tracks which samples of one plane are already reconstructed, at 4x4
/// granularity.
class CodedMap {
 public:
  CodedMap() = default;
  CodedMap(int width, int height);

  bool isCoded(int x, int y) const;
  void mark(int x, int y, int w, int h, bool coded = true);

  int cols() const { return cols_; }
  int rows() const { return rows_; }
  std::vector<std::uint8_t>& cells() { return cells_; }
  const std::vector<std::uint8_t>& cells() const { return cells_; }

 private:
  int width_ = 0, height_ = 0, cols_ = 0, rows_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Neighbouring samples of an N x N block. Index 0 of both arrays is the
/// top-left corner; above[i + 1] sits over column i and left[j + 1] beside
/// row j, for i, j in [0, 2N).
struct References {
  int size = 0;
  std::array<int, 2 * kMaxBlock + 1> above{};
  std::array<int, 2 * kMaxBlock + 1> left{};
};

References gatherReferences(const Plane& recon, const CodedMap& coded, int x, int y, int size);

/// Writes size*size predicted samples in raster order.
void predict(const References& refs, int mode, std::span<std::uint8_t> out);

/// Three most probable modes from the left and above neighbours (-1 when
/// the neighbour is unavailable).
std::array<int, 3> mostProbableModes(int left_mode, int above_mode);

}  // namespace derd::intra
