#include "derd/entropy.hpp"

#include <algorithm>
#include <bit>

namespace derd::entropy {

namespace {

constexpr int kPrecision = 17;
constexpr std::uint32_t kHalf = 1u << (kPrecision - 1);
constexpr std::uint32_t kQuarter = 1u << (kPrecision - 2);
constexpr std::uint32_t kThreeQuarters = 3 * kQuarter;
constexpr int kAdaptShift = 5;
constexpr std::uint16_t kMinP0 = 64;
constexpr std::uint16_t kMaxP0 = 65536 - 64;
// A valid stream is read at most kPrecision bits past its last coded bit
// plus byte padding.
constexpr std::uint64_t kMaxOverread = 64;

std::uint32_t splitPoint(std::uint32_t low, std::uint32_t high, std::uint16_t p0) {
  const std::uint64_t range = static_cast<std::uint64_t>(high) - low + 1;
  std::uint64_t split = (range * p0) >> 16;
  split = std::clamp<std::uint64_t>(split, 1, range - 1);
  return static_cast<std::uint32_t>(split);
}

void adapt(ContextModel& ctx, bool bin) {
  int p = ctx.p0;
  if (bin)
    p -= p >> kAdaptShift;
  else
    p += (65536 - p) >> kAdaptShift;
  ctx.p0 = static_cast<std::uint16_t>(std::clamp<int>(p, kMinP0, kMaxP0));
}

}  // namespace

void BitWriter::put(bool bit) {
  if ((bits_ & 7) == 0) bytes_.push_back(0);
  if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ & 7));
  ++bits_;
}

void BitWriter::truncate(std::uint64_t n) {
  if (n >= bits_) return;
  bits_ = n;
  bytes_.resize(static_cast<std::size_t>((n + 7) / 8));
  if (n & 7) bytes_.back() &= static_cast<std::uint8_t>(0xFF00u >> (n & 7));
}

std::vector<std::uint8_t> BitWriter::slice(std::uint64_t from) const {
  std::vector<std::uint8_t> out;
  if (from >= bits_) return out;
  const std::uint64_t count = bits_ - from;
  out.assign(static_cast<std::size_t>((count + 7) / 8), 0);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t src = from + i;
    if ((bytes_[static_cast<std::size_t>(src >> 3)] >> (7 - (src & 7))) & 1)
      out[static_cast<std::size_t>(i >> 3)] |= static_cast<std::uint8_t>(0x80u >> (i & 7));
  }
  return out;
}

void BitWriter::restore(std::uint64_t from, std::span<const std::uint8_t> packed,
                        std::uint64_t count) {
  truncate(from);
  for (std::uint64_t i = 0; i < count; ++i)
    put((packed[static_cast<std::size_t>(i >> 3)] >> (7 - (i & 7))) & 1);
}

void BinEncoder::emit(bool bit) {
  if (counting_) {
    counted_ += 1 + pending_;
    pending_ = 0;
    return;
  }
  out_.put(bit);
  for (; pending_ > 0; --pending_) out_.put(!bit);
}

void BinEncoder::encodeSplit(std::uint32_t split, bool bin) {
  if (!bin)
    high_ = low_ + split - 1;
  else
    low_ += split;
  if (counting_) {
    renormCounting();
    return;
  }
  for (;;) {
    if (high_ < kHalf) {
      emit(false);
    } else if (low_ >= kHalf) {
      emit(true);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
  }
}

// Same register evolution as the bitwise loop, done in two word-level
// steps: k leading bits on which low and high agree are output, then m
// underflow steps delete the second bit while low reads 01.. and high 10..
void BinEncoder::renormCounting() {
  constexpr std::uint32_t kMask = (1u << kPrecision) - 1;
  const std::uint32_t diff = (low_ ^ high_) & kMask;
  const int k = diff == 0 ? kPrecision : std::countl_zero(diff) - (32 - kPrecision);
  if (k > 0) {
    counted_ += static_cast<std::uint64_t>(k) + pending_;
    pending_ = 0;
    low_ = (low_ << k) & kMask;
    high_ = ((high_ << k) | ((1u << k) - 1)) & kMask;
  }
  const std::uint32_t under = (low_ & ~high_) & (kHalf - 1);
  const int m = std::countl_one(under << (32 - kPrecision + 1));
  if (m > 0) {
    pending_ += static_cast<std::uint64_t>(m);
    low_ = (low_ << m) & (kHalf - 1);
    high_ = (((high_ << m) | ((1u << m) - 1)) & (kHalf - 1)) | kHalf;
  }
}

void BinEncoder::encode(ContextModel& ctx, bool bin) {
  encodeSplit(splitPoint(low_, high_, ctx.p0), bin);
  adapt(ctx, bin);
}

void BinEncoder::encodeBypass(bool bin) { encodeSplit(splitPoint(low_, high_, 32768), bin); }

void BinEncoder::encodeBypassBits(std::uint32_t value, int count) {
  for (int i = count - 1; i >= 0; --i) encodeBypass((value >> i) & 1);
}

void BinEncoder::finish() {
  if (finished_) return;
  // Two more bits select a point inside [low, high]: 01 if low < 1/4,
  // otherwise 10. The decoder pads with zeros.
  ++pending_;
  emit(low_ >= kQuarter);
  finished_ = true;
}

void BinEncoder::rewind(const State& s) {
  out_.truncate(s.bits);
  counted_ = 0;
  setRegisters(s);
  finished_ = false;
}

BinDecoder::BinDecoder(std::span<const std::uint8_t> payload) : payload_(payload) {
  for (int i = 0; i < kPrecision; ++i) value_ = (value_ << 1) | static_cast<std::uint32_t>(readBit());
}

int BinDecoder::readBit() {
  const std::uint64_t pos = read_++;
  const std::uint64_t total = static_cast<std::uint64_t>(payload_.size()) * 8;
  if (pos >= total) {
    if (pos - total >= kMaxOverread) throw DecodeError("truncated payload", pos);
    return 0;
  }
  return (payload_[static_cast<std::size_t>(pos >> 3)] >> (7 - (pos & 7))) & 1;
}

bool BinDecoder::decodeSplit(std::uint32_t split) {
  bool bin;
  if (value_ < low_ + split) {
    bin = false;
    high_ = low_ + split - 1;
  } else {
    bin = true;
    low_ += split;
  }
  for (;;) {
    if (high_ < kHalf) {
      // nothing to subtract
    } else if (low_ >= kHalf) {
      value_ -= kHalf;
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      value_ -= kQuarter;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
    value_ = (value_ << 1) | static_cast<std::uint32_t>(readBit());
  }
  return bin;
}

bool BinDecoder::decode(ContextModel& ctx) {
  const bool bin = decodeSplit(splitPoint(low_, high_, ctx.p0));
  adapt(ctx, bin);
  return bin;
}

bool BinDecoder::decodeBypass() { return decodeSplit(splitPoint(low_, high_, 32768)); }

std::uint32_t BinDecoder::decodeBypassBits(int count) {
  std::uint32_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | (decodeBypass() ? 1u : 0u);
  return v;
}

}  // namespace derd::entropy
