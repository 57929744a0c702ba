#include "derd/syntax.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace derd::syntax {

using entropy::BinDecoder;
using entropy::BinEncoder;

namespace {

int log2Int(int v) {
  int l = 0;
  while ((1 << l) < v) ++l;
  return l;
}

std::vector<int> diagonalScan(int dim) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(dim * dim));
  for (int d = 0; d <= 2 * (dim - 1); ++d)
    for (int y = std::min(d, dim - 1); y >= 0; --y) {
      const int x = d - y;
      if (x < dim) order.push_back(y * dim + x);
    }
  return order;
}

std::size_t splitContext(int size) {
  switch (size) {
    case 32: return 0;
    case 16: return 1;
    case 8: return 2;
    default: throw std::invalid_argument("no split flag at this size");
  }
}

std::size_t ch(Channel c) { return static_cast<std::size_t>(c); }

// Raster index inside the N x N block of every (subblock, coefficient)
// scan pair, indexed s * 16 + p.
const int* scanToRaster(int size) {
  static const auto tables = [] {
    std::array<std::vector<int>, 4> t;
    for (std::size_t l = 0; l < 4; ++l) {
      const int n = kBlockSizes[l];
      const int sbRow = n / 4;
      const auto sbScan = diagonalScan(sbRow);
      const auto cScan = diagonalScan(4);
      for (const int sb : sbScan)
        for (const int pos : cScan)
          t[l].push_back(((sb / sbRow) * 4 + pos / 4) * n + (sb % sbRow) * 4 + pos % 4);
    }
    return t;
  }();
  return tables[sizeIndex(size)].data();
}

constexpr std::array<int, 16> kCoeffScan{0, 4, 1, 8, 5, 2, 12, 9, 6, 3, 13, 10, 7, 14, 11, 15};

std::size_t significanceContext(int s, int p) {
  if (s == 0 && p == 0) return 0;
  const int pos = kCoeffScan[static_cast<std::size_t>(p)];
  const int diag = pos % 4 + pos / 4;
  return static_cast<std::size_t>(1 + std::min(diag, 4) + (s == 0 ? 0 : 5));
}

void writeTree(BinEncoder& enc, std::span<ContextModel> ctxs, std::uint32_t value, int bits) {
  std::size_t node = 1;
  for (int i = bits - 1; i >= 0; --i) {
    const bool b = (value >> i) & 1;
    enc.encode(ctxs[node], b);
    node = node * 2 + (b ? 1 : 0);
  }
}

std::uint32_t readTree(BinDecoder& dec, std::span<ContextModel> ctxs, int bits) {
  std::size_t node = 1;
  std::uint32_t v = 0;
  for (int i = 0; i < bits; ++i) {
    const bool b = dec.decode(ctxs[node]);
    node = node * 2 + (b ? 1 : 0);
    v = (v << 1) | (b ? 1u : 0u);
  }
  return v;
}

void writeExpGolomb(BinEncoder& enc, std::uint32_t v) {
  int k = 0;
  while (v >= (1u << k)) {
    enc.encodeBypass(true);
    v -= 1u << k;
    ++k;
  }
  enc.encodeBypass(false);
  enc.encodeBypassBits(v, k);
}

std::uint32_t readExpGolomb(BinDecoder& dec) {
  std::uint32_t v = 0;
  int k = 0;
  while (dec.decodeBypass()) {
    v += 1u << k;
    if (++k > 24) throw entropy::DecodeError("exp-Golomb prefix too long", dec.bitsRead());
  }
  return v + dec.decodeBypassBits(k);
}

std::size_t lastSubblockContext(Channel c, int size) {
  return ch(c) * 4 + sizeIndex(size);
}

double log2Magnitude(int a) {
  static const auto table = [] {
    std::array<double, 256> t{};
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = std::log2(static_cast<double>(i));
    return t;
  }();
  return a < 256 ? table[static_cast<std::size_t>(a)] : std::log2(static_cast<double>(a));
}

}  // namespace

const std::array<int, 16>& coefficientScan() {
  static const std::array<int, 16> scan = [] {
    std::array<int, 16> a{};
    const auto v = diagonalScan(4);
    std::copy(v.begin(), v.end(), a.begin());
    return a;
  }();
  return scan;
}

const std::vector<int>& subblockScan(int size) {
  static const std::array<std::vector<int>, 4> scans{diagonalScan(1), diagonalScan(2),
                                                     diagonalScan(4), diagonalScan(8)};
  return scans[sizeIndex(size)];
}

int lastSubblock(std::span<const std::int32_t> levels, int size) {
  const int* order = scanToRaster(size);
  for (int i = size * size - 1; i >= 0; --i)
    if (levels[static_cast<std::size_t>(order[i])] != 0) return i / 16;
  return -1;
}

std::int64_t signalledSubblockFlags(std::span<const std::int32_t> levels, int size) {
  return std::max(0, lastSubblock(levels, size) - 1);
}

FeatureCounts residualCounts(std::span<const std::int32_t> levels, int size, Component comp,
                             bool transform_skip) {
  FeatureCounts n;
  n.comp(comp, size) = 1;
  const auto count = static_cast<std::size_t>(size * size);
  for (std::size_t i = 0; i < count; ++i) {
    const int a = std::abs(levels[i]);
    if (a == 0) continue;
    ++n.n_coeff;
    if (a > 1) {
      ++n.n_g1;
      n.sum_log2_val += log2Magnitude(a);
    }
  }
  n.n_csbf = signalledSubblockFlags(levels, size);
  n.n_tsf = transform_skip ? 1 : 0;
  return n;
}

bool isMostProbable(int mode, const std::array<int, 3>& mpm) {
  return std::find(mpm.begin(), mpm.end(), mode) != mpm.end();
}

void writeSplit(BinEncoder& enc, ContextSet& ctx, int size, bool split) {
  enc.encode(ctx.split[splitContext(size)], split);
}

bool readSplit(BinDecoder& dec, ContextSet& ctx, int size) {
  return dec.decode(ctx.split[splitContext(size)]);
}

void writeLumaMode(BinEncoder& enc, ContextSet& ctx, int mode, const std::array<int, 3>& mpm) {
  const auto it = std::find(mpm.begin(), mpm.end(), mode);
  if (it != mpm.end()) {
    enc.encode(ctx.mpm_flag, true);
    const auto idx = it - mpm.begin();
    enc.encode(ctx.mpm_index, idx > 0);
    if (idx > 0) enc.encodeBypass(idx > 1);
    return;
  }
  enc.encode(ctx.mpm_flag, false);
  auto sorted = mpm;
  std::sort(sorted.begin(), sorted.end());
  int rem = mode;
  for (int i = 2; i >= 0; --i)
    if (rem > sorted[static_cast<std::size_t>(i)]) --rem;
  enc.encodeBypassBits(static_cast<std::uint32_t>(rem), 5);
}

int readLumaMode(BinDecoder& dec, ContextSet& ctx, const std::array<int, 3>& mpm) {
  if (dec.decode(ctx.mpm_flag)) {
    if (!dec.decode(ctx.mpm_index)) return mpm[0];
    return dec.decodeBypass() ? mpm[2] : mpm[1];
  }
  auto sorted = mpm;
  std::sort(sorted.begin(), sorted.end());
  int mode = static_cast<int>(dec.decodeBypassBits(5));
  for (int i = 0; i < 3; ++i)
    if (mode >= sorted[static_cast<std::size_t>(i)]) ++mode;
  return mode;
}

void writeCbf(BinEncoder& enc, ContextSet& ctx, Channel c, bool cbf) { enc.encode(ctx.cbf[ch(c)], cbf); }
bool readCbf(BinDecoder& dec, ContextSet& ctx, Channel c) { return dec.decode(ctx.cbf[ch(c)]); }

void writeTransformSkip(BinEncoder& enc, ContextSet& ctx, bool skip) {
  enc.encode(ctx.transform_skip, skip);
}
bool readTransformSkip(BinDecoder& dec, ContextSet& ctx) { return dec.decode(ctx.transform_skip); }

void writeResidual(BinEncoder& enc, ContextSet& ctx, std::span<const std::int32_t> levels, int size,
                   Channel c) {
  const int numSb = (size / 4) * (size / 4);
  const int* order = scanToRaster(size);
  auto level = [&](int s, int p) { return levels[static_cast<std::size_t>(order[s * 16 + p])]; };
  int last = size * size - 1;
  while (last >= 0 && levels[static_cast<std::size_t>(order[last])] == 0) --last;
  if (last < 0) throw std::logic_error("writeResidual called on an all-zero block");
  const int lastS = last / 16;
  const int lastP = last % 16;

  if (numSb > 1)
    writeTree(enc, ctx.last_subblock[lastSubblockContext(c, size)],
              static_cast<std::uint32_t>(lastS), log2Int(numSb));
  writeTree(enc, ctx.last_position[ch(c)], static_cast<std::uint32_t>(lastP), 4);

  std::array<int, 16> sigPos{};
  for (int s = lastS; s >= 0; --s) {
    const bool signalled = s < lastS && s > 0;
    if (signalled) {
      bool any = false;
      for (int p = 0; p < 16 && !any; ++p)
        any = level(s, p) != 0;
      enc.encode(ctx.coded_subblock[ch(c)], any);
      if (!any) continue;
    }
    int numSig = 0;
    int start = 15;
    if (s == lastS) {
      sigPos[static_cast<std::size_t>(numSig++)] = lastP;
      start = lastP - 1;
    }
    for (int p = start; p >= 0; --p) {
      const bool sig = level(s, p) != 0;
      if (!(p == 0 && signalled && numSig == 0))
        enc.encode(ctx.significant[ch(c)][significanceContext(s, p)], sig);
      if (sig) sigPos[static_cast<std::size_t>(numSig++)] = p;
    }
    std::size_t c1 = 1;
    for (int i = 0; i < numSig; ++i) {
      const int a = std::abs(level(s, sigPos[static_cast<std::size_t>(i)]));
      const bool gt1 = a > 1;
      enc.encode(ctx.greater1[ch(c)][c1], gt1);
      if (gt1) {
        c1 = 0;
        const bool gt2 = a > 2;
        enc.encode(ctx.greater2[ch(c)], gt2);
        if (gt2) writeExpGolomb(enc, static_cast<std::uint32_t>(a - 3));
      } else if (c1 > 0 && c1 < 3) {
        ++c1;
      }
    }
    for (int i = 0; i < numSig; ++i)
      enc.encodeBypass(level(s, sigPos[static_cast<std::size_t>(i)]) < 0);
  }
}

void readResidual(BinDecoder& dec, ContextSet& ctx, std::span<std::int32_t> levels, int size,
                  Channel c) {
  const int numSb = (size / 4) * (size / 4);
  const int* order = scanToRaster(size);
  std::fill(levels.begin(), levels.begin() + size * size, 0);
  const int lastS = numSb > 1
                        ? static_cast<int>(readTree(dec, ctx.last_subblock[lastSubblockContext(c, size)],
                                                    log2Int(numSb)))
                        : 0;
  const int lastP = static_cast<int>(readTree(dec, ctx.last_position[ch(c)], 4));

  std::array<int, 16> sigPos{};
  for (int s = lastS; s >= 0; --s) {
    const bool signalled = s < lastS && s > 0;
    if (signalled && !dec.decode(ctx.coded_subblock[ch(c)])) continue;
    int numSig = 0;
    int start = 15;
    if (s == lastS) {
      sigPos[static_cast<std::size_t>(numSig++)] = lastP;
      start = lastP - 1;
    }
    for (int p = start; p >= 0; --p) {
      bool sig;
      if (p == 0 && signalled && numSig == 0)
        sig = true;
      else
        sig = dec.decode(ctx.significant[ch(c)][significanceContext(s, p)]);
      if (sig) sigPos[static_cast<std::size_t>(numSig++)] = p;
    }
    std::array<int, 16> mags{};
    std::size_t c1 = 1;
    for (int i = 0; i < numSig; ++i) {
      int a = 1;
      if (dec.decode(ctx.greater1[ch(c)][c1])) {
        c1 = 0;
        a = 2;
        if (dec.decode(ctx.greater2[ch(c)])) a = 3 + static_cast<int>(readExpGolomb(dec));
      } else if (c1 > 0 && c1 < 3) {
        ++c1;
      }
      mags[static_cast<std::size_t>(i)] = a;
    }
    for (int i = 0; i < numSig; ++i) {
      const bool negative = dec.decodeBypass();
      const int a = mags[static_cast<std::size_t>(i)];
      levels[static_cast<std::size_t>(order[s * 16 + sigPos[static_cast<std::size_t>(i)]])] = negative ? -a : a;
    }
  }
}

}  // namespace derd::syntax
