#pragma once

// Intra picture encoder and decoder. Pictures are split into 32x32 coding
// tree units, each coded as a quadtree down to 8x8 CUs; an 8x8 CU may be
// further split into four 4x4 luma blocks sharing one 4x4 chroma block.
// Every decision is taken by the Lagrangian objective in EncoderConfig.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "derd/bitstream.hpp"
#include "derd/energy_model.hpp"
#include "derd/frame.hpp"
#include "derd/optimizer.hpp"

namespace derd {

struct EncoderConfig {
  int qp = 25;
  Objective objective;
  bool record_decisions = false;
  bool audit = true;
};

/// One coded block. component is "YUV" for a CU leaf, "Y" for a 4x4 luma
/// block and "UV" for the shared chroma of a split 8x8 CU. bits counts
/// everything written since the previous record, split flags included.
struct DecisionRecord {
  int frame = 0;
  int x = 0;
  int y = 0;
  int size = 0;
  std::string component;
  ObjectiveKind objective = ObjectiveKind::RDO;
  int qp = 0;
  int mode = 0;
  bool transform_skip = false;
  std::uint64_t distortion = 0;
  std::uint64_t bits = 0;
  double energy_j = 0.0;
  double cost = 0.0;
};

struct EncodeResult {
  Bitstream stream;
  std::vector<Frame> reconstructions;
  FeatureCounts counts;  // whole stream, one slice per frame
  std::vector<DecisionRecord> decisions;
  std::uint64_t distortion = 0;
};

EncodeResult encodeSequence(std::span<const Frame> frames, const EncoderConfig& config);

struct DecodeResult {
  std::vector<Frame> frames;
  FeatureCounts counts;
};

/// Throws entropy::DecodeError or BitstreamError on corrupt input.
DecodeResult decodeStream(const Bitstream& stream);

/// Totals of a coded region.
struct RegionCost {
  std::uint64_t distortion = 0;
  std::uint64_t bits = 0;
  double energy_j = 0.0;
  double cost = 0.0;
};

/// Encodes one picture CTU by CTU. Each CTU may use its own QP and
/// objective, which the QP-search experiment relies on.
class FrameEncoder {
 public:
  explicit FrameEncoder(const Frame& source, int frame_index = 0,
                        std::vector<DecisionRecord>* log = nullptr);
  ~FrameEncoder();
  FrameEncoder(const FrameEncoder&) = delete;
  FrameEncoder& operator=(const FrameEncoder&) = delete;

  /// Codes the CTU with its top-left corner at (x, y) and keeps the result.
  RegionCost encodeCtu(int x, int y, int qp, const Objective& objective);
  /// Codes the CTU, reports its cost and rolls everything back.
  RegionCost tryCtu(int x, int y, int qp, const Objective& objective);

  /// Terminates the arithmetic code and returns the payload.
  std::vector<std::uint8_t> finish();

  const Frame& reconstruction() const;
  /// Block-level counts so far (no slice term).
  const FeatureCounts& counts() const;
  std::uint64_t distortion() const;

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace derd
