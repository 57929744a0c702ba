#pragma once

// Block-level syntax shared by encoder and decoder: context set, scan
// orders, intra-mode signalling and residual coding.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "derd/energy_model.hpp"
#include "derd/entropy.hpp"

namespace derd::syntax {

using entropy::ContextModel;

enum class Channel : std::uint8_t { Luma = 0, Chroma = 1 };

inline Channel channelOf(Component c) { return c == Component::Y ? Channel::Luma : Channel::Chroma; }

struct ContextSet {
  std::array<ContextModel, 3> split{};  // 32, 16, 8
  ContextModel mpm_flag{};
  ContextModel mpm_index{};
  std::array<ContextModel, 2> cbf{};
  ContextModel transform_skip{};
  std::array<std::array<ContextModel, 64>, 8> last_subblock{};  // [channel * 4 + size]
  std::array<std::array<ContextModel, 16>, 2> last_position{};
  std::array<ContextModel, 2> coded_subblock{};
  std::array<std::array<ContextModel, 12>, 2> significant{};
  std::array<std::array<ContextModel, 4>, 2> greater1{};
  std::array<ContextModel, 2> greater2{};
};

/// Raster positions (y * 4 + x) of a 4x4 group in up-right diagonal order.
const std::array<int, 16>& coefficientScan();
/// Raster indices of the subblocks of a (size/4)^2 grid in diagonal order.
const std::vector<int>& subblockScan(int size);

/// Scan index of the last subblock holding a nonzero level, or -1.
int lastSubblock(std::span<const std::int32_t> levels, int size);
/// Coded-subblock flags a block of this content signals explicitly.
std::int64_t signalledSubblockFlags(std::span<const std::int32_t> levels, int size);

/// Decoder-visible event counts of one coded residual block.
FeatureCounts residualCounts(std::span<const std::int32_t> levels, int size, Component comp,
                             bool transform_skip);

// Writing. The residual writers require at least one nonzero level.
void writeSplit(entropy::BinEncoder& enc, ContextSet& ctx, int size, bool split);
void writeLumaMode(entropy::BinEncoder& enc, ContextSet& ctx, int mode,
                   const std::array<int, 3>& mpm);
void writeCbf(entropy::BinEncoder& enc, ContextSet& ctx, Channel ch, bool cbf);
void writeTransformSkip(entropy::BinEncoder& enc, ContextSet& ctx, bool skip);
void writeResidual(entropy::BinEncoder& enc, ContextSet& ctx, std::span<const std::int32_t> levels,
                   int size, Channel ch);

// Reading.
bool readSplit(entropy::BinDecoder& dec, ContextSet& ctx, int size);
int readLumaMode(entropy::BinDecoder& dec, ContextSet& ctx, const std::array<int, 3>& mpm);
bool readCbf(entropy::BinDecoder& dec, ContextSet& ctx, Channel ch);
bool readTransformSkip(entropy::BinDecoder& dec, ContextSet& ctx);
void readResidual(entropy::BinDecoder& dec, ContextSet& ctx, std::span<std::int32_t> levels,
                  int size, Channel ch);

bool isMostProbable(int mode, const std::array<int, 3>& mpm);

}  // namespace derd::syntax
