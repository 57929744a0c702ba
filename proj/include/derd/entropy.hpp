#pragma once

// Adaptive binary arithmetic coder with bit-wise renormalisation (the
// Witten-Neal-Cleary scheme with pending "follow" bits). Every
// renormalisation step eventually produces exactly one output bit, so
// committedBits() is an exact integer bit position at any point of the
// stream, which is what candidate rate measurement relies on.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace derd::entropy {

/// Probability that the next bin is 0, in units of 2^-16.
struct ContextModel {
  std::uint16_t p0 = 32768;
  bool operator==(const ContextModel&) const = default;
};

class BitWriter {
 public:
  void put(bool bit);
  std::uint64_t size() const { return bits_; }
  /// Drops everything after the first n bits.
  void truncate(std::uint64_t n);
  /// Bits [from, size()) as packed bytes, starting with bit `from`.
  std::vector<std::uint8_t> slice(std::uint64_t from) const;
  /// Replaces everything after bit `from` by a slice taken earlier.
  void restore(std::uint64_t from, std::span<const std::uint8_t> packed, std::uint64_t count);
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t bits_ = 0;
};

class BinEncoder {
 public:
  void encode(ContextModel& ctx, bool bin);
  void encodeBypass(bool bin);
  void encodeBypassBits(std::uint32_t value, int count);
  /// Terminates the arithmetic code. The encoder must not be used afterwards.
  void finish();

  /// Bits produced so far, including the pending follow bits.
  std::uint64_t committedBits() const { return out_.size() + counted_ + pending_; }

  /// While counting, output bits are only counted, not stored. Used for
  /// rate measurement followed by rewind().
  void setCounting(bool on) { counting_ = on; }

  struct State {
    std::uint32_t low = 0;
    std::uint32_t high = 0;
    std::uint64_t pending = 0;
    std::uint64_t bits = 0;
  };
  State state() const { return {low_, high_, pending_, out_.size()}; }
  /// Rewinds to an earlier state of the same stream and drops any counted
  /// bits.
  void rewind(const State& s);

  BitWriter& writer() { return out_; }
  const BitWriter& writer() const { return out_; }
  void setRegisters(const State& s) {
    low_ = s.low;
    high_ = s.high;
    pending_ = s.pending;
  }

  /// Payload bytes, zero padded to a byte boundary.
  const std::vector<std::uint8_t>& bytes() const { return out_.bytes(); }

 private:
  void encodeSplit(std::uint32_t split, bool bin);
  void renormCounting();
  void emit(bool bit);

  std::uint32_t low_ = 0;
  std::uint32_t high_ = (1u << 17) - 1;
  std::uint64_t pending_ = 0;
  BitWriter out_;
  std::uint64_t counted_ = 0;
  bool counting_ = false;
  bool finished_ = false;
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::uint64_t bit_position)
      : std::runtime_error(what + " (at bit " + std::to_string(bit_position) + ")"),
        position_(bit_position) {}
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t position_;
};

class BinDecoder {
 public:
  explicit BinDecoder(std::span<const std::uint8_t> payload);

  bool decode(ContextModel& ctx);
  bool decodeBypass();
  std::uint32_t decodeBypassBits(int count);

  std::uint64_t bitsRead() const { return read_; }

 private:
  bool decodeSplit(std::uint32_t split);
  int readBit();

  std::span<const std::uint8_t> payload_;
  std::uint64_t read_ = 0;
  std::uint32_t low_ = 0;
  std::uint32_t high_ = (1u << 17) - 1;
  std::uint32_t value_ = 0;
};

}  // namespace derd::entropy
