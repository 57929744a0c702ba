#pragma once

// Container: "DERD", six little-endian u32 header fields (version, width,
// height, frame count, objective id, QP), one length-prefixed payload per
// frame, then an optional "AUDT" section carrying the encoder's feature
// counts as JSON.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "derd/energy_model.hpp"

namespace derd {

inline constexpr std::uint32_t kBitstreamVersion = 1;

class BitstreamError : public std::runtime_error {
 public:
  BitstreamError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct Bitstream {
  std::uint32_t version = kBitstreamVersion;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t objective_id = 0;
  std::uint32_t qp = 0;
  std::vector<std::vector<std::uint8_t>> payloads;  // one per frame
  std::optional<FeatureCounts> audit;

  std::uint32_t frameCount() const { return static_cast<std::uint32_t>(payloads.size()); }

  std::vector<std::uint8_t> serialize() const;
  static Bitstream parse(std::span<const std::uint8_t> bytes);

  /// Equality of everything except the objective tag.
  bool sameCodedContent(const Bitstream& other) const;
  bool operator==(const Bitstream&) const = default;
};

void writeBitstream(const Bitstream& stream, const std::filesystem::path& path);
Bitstream readBitstream(const std::filesystem::path& path);

}  // namespace derd
