#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "derd/bitstream.hpp"
#include "derd/codec.hpp"
#include "derd/entropy.hpp"
#include "derd/harness.hpp"
#include "derd/intra.hpp"
#include "derd/quant.hpp"
#include "derd/syntax.hpp"
#include "derd/transform.hpp"
#include "doctest.h"

using namespace derd;

namespace {

// Angular prediction transcribed sample by sample from the mode equations:
// reference array built from the main side, extended through the inverse
// angle for negative angles, then two-tap interpolation at 1/32 accuracy.
std::vector<int> angularOracle(const intra::References& r, int mode) {
  static const int angles[] = {0,   0,   32,  26,  21,  17,  13,  9,  5,  2,  0,  -2,
                               -5,  -9,  -13, -17, -21, -26, -32, -26, -21, -17, -13, -9,
                               -5,  -2,  0,   2,   5,   9,   13,  17,  21,  26,  32};
  static const int inverse[] = {-256, -315, -390, -482, -630, -910, -1638, -4096};
  const int n = r.size;
  const int angle = angles[mode];
  const bool ver = mode >= 18;
  auto mainRef = [&](int k) { return ver ? r.above[static_cast<std::size_t>(k)] : r.left[static_cast<std::size_t>(k)]; };
  auto sideRef = [&](int k) { return ver ? r.left[static_cast<std::size_t>(k)] : r.above[static_cast<std::size_t>(k)]; };
  std::vector<int> ref(static_cast<std::size_t>(4 * n + 1));
  const int off = 2 * n;
  for (int k = 0; k <= 2 * n; ++k) ref[static_cast<std::size_t>(off + k)] = mainRef(k);
  if (angle < 0) {
    int inv = 0;
    const int negs[] = {-32, -26, -21, -17, -13, -9, -5, -2};
    for (int i = 0; i < 8; ++i)
      if (negs[i] == angle) inv = inverse[i];
    for (int k = -1; k >= (n * angle) / 32; --k)
      ref[static_cast<std::size_t>(off + k)] = sideRef(-1 + ((k * inv + 128) >> 8) + 1);
  }
  std::vector<int> out(static_cast<std::size_t>(n * n));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const int along = ver ? y : x, across = ver ? x : y;
      const int p = (along + 1) * angle;
      const int i = p >> 5, f = p & 31;
      const int a = ref[static_cast<std::size_t>(off + across + i + 1)];
      const int b = ref[static_cast<std::size_t>(off + across + i + 2)];
      out[static_cast<std::size_t>(y * n + x)] = f == 0 ? a : ((32 - f) * a + f * b + 16) >> 5;
    }
  return out;
}

std::vector<int> planarOracle(const intra::References& r) {
  const int n = r.size;
  std::vector<int> out(static_cast<std::size_t>(n * n));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const int h = (n - 1 - x) * r.left[static_cast<std::size_t>(y + 1)] + (x + 1) * r.above[static_cast<std::size_t>(n + 1)];
      const int v = (n - 1 - y) * r.above[static_cast<std::size_t>(x + 1)] + (y + 1) * r.left[static_cast<std::size_t>(n + 1)];
      out[static_cast<std::size_t>(y * n + x)] = (h + v + n) / (2 * n);
    }
  return out;
}

intra::References randomRefs(int n, std::mt19937& rng) {
  intra::References r;
  r.size = n;
  for (int i = 0; i <= 2 * n; ++i) {
    r.above[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 256);
    r.left[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 256);
  }
  r.left[0] = r.above[0];
  return r;
}

double floatDct(const std::vector<int>& res, int n, int k, int l) {
  double s = 0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      s += res[static_cast<std::size_t>(y * n + x)] * std::cos(std::numbers::pi * (2 * y + 1) * k / (2.0 * n)) *
           std::cos(std::numbers::pi * (2 * x + 1) * l / (2.0 * n));
  const double ck = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
  const double cl = l == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
  return s * ck * cl;
}

Frame smallPattern(int w, int h, std::uint64_t seed) { return generatePattern(PatternKind::Text, w, h, seed); }

}  // namespace

TEST_CASE("intra: DC of constant neighbours") {
  intra::References r;
  r.size = 8;
  r.above.fill(128);
  r.left.fill(128);
  std::vector<std::uint8_t> out(64);
  intra::predict(r, intra::kDc, out);
  CHECK(std::all_of(out.begin(), out.end(), [](std::uint8_t v) { return v == 128; }));
}

TEST_CASE("intra: horizontal copies the left column") {
  std::mt19937 rng(1);
  auto r = randomRefs(16, rng);
  std::vector<std::uint8_t> out(256);
  intra::predict(r, intra::kHorizontal, out);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) CHECK(out[static_cast<std::size_t>(y * 16 + x)] == r.left[static_cast<std::size_t>(y + 1)]);
}

TEST_CASE("intra: every mode matches the reference transcription") {
  std::mt19937 rng(2);
  for (int n : {4, 8, 16, 32})
    for (int trial = 0; trial < 5; ++trial) {
      const auto r = randomRefs(n, rng);
      std::vector<std::uint8_t> out(static_cast<std::size_t>(n * n));
      for (int mode = 0; mode < intra::kNumModes; ++mode) {
        intra::predict(r, mode, out);
        std::vector<int> want;
        if (mode == intra::kPlanar) {
          want = planarOracle(r);
        } else if (mode == intra::kDc) {
          int s = 0;
          for (int i = 1; i <= n; ++i) s += r.above[static_cast<std::size_t>(i)] + r.left[static_cast<std::size_t>(i)];
          want.assign(static_cast<std::size_t>(n * n), (s + n) / (2 * n));
        } else {
          want = angularOracle(r, mode);
        }
        const std::vector<int> got(out.begin(), out.end());
        CHECK_MESSAGE(got == want, "size " << n << " mode " << mode);
      }
    }
}

TEST_CASE("intra: unavailable neighbours read as 128") {
  Plane p(16, 16, 7);
  intra::CodedMap m(16, 16);
  const auto r = intra::gatherReferences(p, m, 4, 4, 4);
  CHECK(std::all_of(r.above.begin(), r.above.begin() + 9, [](int v) { return v == 128; }));
  m.mark(0, 0, 8, 4);
  const auto s = intra::gatherReferences(p, m, 4, 4, 4);
  CHECK(s.above[1] == 7);
  CHECK(s.above[5] == 128);  // x = 8 not yet coded
  CHECK(s.left[1] == 128);
}

TEST_CASE("intra: most probable modes") {
  CHECK(intra::mostProbableModes(-1, -1) == std::array<int, 3>{0, 1, 26});
  CHECK(intra::mostProbableModes(10, 10) == std::array<int, 3>{10, 9, 11});
  CHECK(intra::mostProbableModes(0, 26) == std::array<int, 3>{0, 26, 1});
  CHECK(intra::mostProbableModes(5, 7) == std::array<int, 3>{5, 7, 0});
}

TEST_CASE("transform: zero and DC") {
  for (int n : {4, 8, 16, 32}) {
    const auto count = static_cast<std::size_t>(n * n);
    std::vector<std::int32_t> r(count, 0), c(count), back(count);
    transform::forward(r, c, n);
    CHECK(std::all_of(c.begin(), c.end(), [](int v) { return v == 0; }));
    transform::inverse(c, back, n);
    CHECK(std::all_of(back.begin(), back.end(), [](int v) { return v == 0; }));
    std::fill(r.begin(), r.end(), 37);
    transform::forward(r, c, n);
    CHECK(c[0] != 0);
    CHECK(std::count(c.begin(), c.end(), 0) == static_cast<long>(count - 1));
  }
}

TEST_CASE("transform: close to the floating-point DCT and round trip within one") {
  std::mt19937 rng(3);
  for (int n : {4, 8, 16, 32}) {
    const auto count = static_cast<std::size_t>(n * n);
    double worstCoeff = 0;
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<int> res(count);
      for (auto& v : res) v = static_cast<int>(rng() % 511) - 255;
      if (trial == 0) std::fill(res.begin(), res.end(), 255);
      if (trial == 1) std::fill(res.begin(), res.end(), -255);
      std::vector<std::int32_t> in(res.begin(), res.end()), c(count), back(count);
      transform::forward(in, c, n);
      if (trial < 4)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const double want = floatDct(res, n, k, l) * (1 << transform::kCoeffFractionBits);
            worstCoeff = std::max(worstCoeff, std::abs(c[static_cast<std::size_t>(k * n + l)] - want));
          }
      transform::inverse(c, back, n);
      int worst = 0;
      for (std::size_t i = 0; i < count; ++i) worst = std::max(worst, std::abs(back[i] - in[i]));
      CHECK(worst <= 1);
    }
    // One orthonormal unit plus the relative error of the rounded basis.
    CHECK(worstCoeff <= (1 << transform::kCoeffFractionBits) + 3e-4 * 255 * n * (1 << transform::kCoeffFractionBits));
  }
  std::vector<std::int32_t> a(36), b(36);
  CHECK_THROWS_AS(transform::forward(a, b, 6), std::invalid_argument);
}

TEST_CASE("transform skip is exact") {
  std::vector<std::int32_t> r{-255, 3, 0, 9, 1, 2, 3, 4, -5, 6, 7, 8, 100, -100, 255, 0}, c(16), back(16);
  transform::forwardSkip(r, c, 4);
  transform::inverseSkip(c, back, 4);
  CHECK(back == r);
  CHECK_THROWS(transform::forwardSkip(r, c, 8));
}

TEST_CASE("quantizer") {
  std::vector<std::int32_t> zeros(64, 0), lv(64), dq(64);
  quant::quantize(zeros, lv, 30);
  CHECK(std::all_of(lv.begin(), lv.end(), [](int v) { return v == 0; }));

  CHECK(quant::stepSize(4) == 1.0);
  std::vector<std::int32_t> ints(64);
  for (int i = 0; i < 64; ++i) ints[static_cast<std::size_t>(i)] = (i - 32) * (1 << transform::kCoeffFractionBits);
  quant::quantize(ints, lv, 4, 0.0);
  quant::dequantize(lv, dq, 4);
  CHECK(dq == ints);
  for (int i = 0; i < 64; ++i) CHECK(lv[static_cast<std::size_t>(i)] == i - 32);

  CHECK(quant::stepSize(10) == doctest::Approx(2.0).epsilon(1e-2));
  std::mt19937 rng(4);
  for (int qp = 0; qp <= 51; ++qp) {
    std::vector<std::int32_t> c(256);
    for (auto& v : c) v = static_cast<std::int32_t>(rng() % 200001) - 100000;
    lv.assign(256, 0);
    quant::quantize(c, lv, qp);
    dq.assign(256, 0);
    quant::dequantize(lv, dq, qp);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(dq[i] - c[i]) <= quant::coefficientStep(qp) + 1);
  }
  CHECK_THROWS_AS(quant::quantize(zeros, lv, 52), std::out_of_range);
}

TEST_CASE("entropy coder: empty, deterministic, lossless, truncation") {
  entropy::BinEncoder e0;
  e0.finish();
  const std::vector<std::uint8_t> empty = e0.bytes();
  entropy::BinDecoder d0(empty);
  CHECK(d0.bitsRead() == 17);

  std::mt19937 rng(5);
  std::vector<int> bins(5000), ctxIdx(5000);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    ctxIdx[i] = static_cast<int>(rng() % 5);
    bins[i] = (rng() % 10) < static_cast<unsigned>(ctxIdx[i] * 2) ? 1 : 0;
  }
  auto encode = [&] {
    entropy::BinEncoder e;
    std::array<entropy::ContextModel, 4> ctx{};
    for (std::size_t i = 0; i < bins.size(); ++i) {
      if (ctxIdx[i] == 4)
        e.encodeBypass(bins[i] != 0);
      else
        e.encode(ctx[static_cast<std::size_t>(ctxIdx[i])], bins[i] != 0);
    }
    e.finish();
    return e.bytes();
  };
  const auto a = encode();
  CHECK(a == encode());
  entropy::BinDecoder d(a);
  std::array<entropy::ContextModel, 4> ctx{};
  bool same = true;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const bool b = ctxIdx[i] == 4 ? d.decodeBypass() : d.decode(ctx[static_cast<std::size_t>(ctxIdx[i])]);
    same = same && b == (bins[i] != 0);
  }
  CHECK(same);

  const std::vector<std::uint8_t> cut(a.begin(), a.begin() + static_cast<long>(a.size() / 4));
  entropy::BinDecoder t(cut);
  std::array<entropy::ContextModel, 4> c2{};
  CHECK_THROWS_AS(
      [&] {
        for (std::size_t i = 0; i < bins.size(); ++i)
          if (ctxIdx[i] == 4)
            t.decodeBypass();
          else
            t.decode(c2[static_cast<std::size_t>(ctxIdx[i])]);
      }(),
      entropy::DecodeError);
}

TEST_CASE("counting mode reports the bits real coding would write") {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    entropy::BinEncoder real, counted;
    counted.setCounting(true);
    entropy::ContextModel c1{}, c2{};
    for (int i = 0; i < 3000; ++i) {
      const bool b = rng() % 7 == 0;
      real.encode(c1, b);
      counted.encode(c2, b);
      CHECK(real.committedBits() == counted.committedBits());
    }
  }
}

TEST_CASE("residual syntax round trip and counts") {
  std::mt19937 rng(7);
  for (int n : {4, 8, 16, 32})
    for (int trial = 0; trial < 30; ++trial) {
      const auto count = static_cast<std::size_t>(n * n);
      std::vector<std::int32_t> lv(count, 0);
      const int density = static_cast<int>(rng() % 4) + 1;
      for (auto& v : lv)
        if (rng() % (density * 3) == 0) v = static_cast<int>(rng() % 41) - 20;
      if (trial % 7 == 0) std::fill(lv.begin(), lv.end(), 0), lv[count - 1] = -300000;
      if (std::all_of(lv.begin(), lv.end(), [](int v) { return v == 0; })) lv[0] = 1;
      const auto ch = trial % 2 ? syntax::Channel::Chroma : syntax::Channel::Luma;
      entropy::BinEncoder e;
      syntax::ContextSet ce;
      syntax::writeResidual(e, ce, lv, n, ch);
      e.finish();
      const auto bytes = e.bytes();
      entropy::BinDecoder d(bytes);
      syntax::ContextSet cd;
      std::vector<std::int32_t> back(count);
      syntax::readResidual(d, cd, back, n, ch);
      CHECK(back == lv);

      const auto fc = syntax::residualCounts(lv, n, Component::Y, false);
      std::int64_t nz = 0, g1 = 0;
      double lg = 0;
      for (const int v : lv)
        if (v) {
          ++nz;
          if (std::abs(v) > 1) ++g1;
          lg += std::log2(std::abs(v));
        }
      CHECK(fc.n_coeff == nz);
      CHECK(fc.n_g1 == g1);
      CHECK(fc.sum_log2_val == doctest::Approx(lg).epsilon(1e-12));
      if (n == 4) CHECK(fc.n_csbf == 0);
    }
}

TEST_CASE("codec round trip, counts audit and determinism") {
  const Frame f = smallPattern(64, 64, 3);
  for (const auto kind : {ObjectiveKind::RDO, ObjectiveKind::DEDO, ObjectiveKind::DERDO})
    for (int qp : {0, 15, 25, 37, 51}) {
      EncoderConfig cfg;
      cfg.qp = qp;
      cfg.objective = Objective::forKind(kind, qp, syntheticDefaultProfile());
      cfg.record_decisions = true;
      const auto r = encodeSequence(std::span(&f, 1), cfg);
      const auto d = decodeStream(Bitstream::parse(r.stream.serialize()));
      CHECK(d.frames == r.reconstructions);
      CHECK(d.counts == r.counts);
      CHECK(r.stream.audit == r.counts);
      CHECK(r.counts.n_slice == 1);
      std::uint64_t sse = 0;
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < f.planes[c].samples.size(); ++i) {
          const int e = f.planes[c].samples[i] - r.reconstructions[0].planes[c].samples[i];
          sse += static_cast<std::uint64_t>(e * e);
        }
      CHECK(sse == r.distortion);
      std::uint64_t logged = 0;
      for (const auto& rec : r.decisions) logged += rec.distortion;
      CHECK(logged == r.distortion);
      CHECK(encodeSequence(std::span(&f, 1), cfg).stream == r.stream);
    }
}

TEST_CASE("codec: flat grey at QP 51 has no coefficients") {
  const Frame f(64, 32, 128);
  EncoderConfig cfg;
  cfg.qp = 51;
  cfg.objective = Objective::rdo(51, syntheticDefaultProfile());
  const auto r = encodeSequence(std::span(&f, 1), cfg);
  CHECK(r.counts.n_coeff == 0);
  CHECK(r.reconstructions[0] == f);
}

TEST_CASE("codec: multi-frame sequences and partial CTUs") {
  std::vector<Frame> frames{smallPattern(72, 40, 1), smallPattern(72, 40, 2)};
  EncoderConfig cfg;
  cfg.qp = 30;
  cfg.objective = Objective::derdo(30, syntheticDefaultProfile());
  const auto r = encodeSequence(frames, cfg);
  const auto d = decodeStream(r.stream);
  CHECK(d.frames == r.reconstructions);
  CHECK(d.counts == r.counts);
  CHECK(r.counts.n_slice == 2);
}

TEST_CASE("codec: input validation") {
  CHECK_THROWS_AS(requireCodableDimensions(30, 32), FormatError);
  const Frame f(32, 32);
  EncoderConfig cfg;
  cfg.qp = 60;
  CHECK_THROWS(encodeSequence(std::span(&f, 1), cfg));
}

TEST_CASE("bitstream container errors") {
  const Frame f = smallPattern(32, 32, 9);
  EncoderConfig cfg;
  cfg.qp = 25;
  cfg.objective = Objective::rdo(25, syntheticDefaultProfile());
  const auto bytes = encodeSequence(std::span(&f, 1), cfg).stream.serialize();
  CHECK(Bitstream::parse(bytes).frameCount() == 1);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(Bitstream::parse(bad), BitstreamError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(Bitstream::parse(trailing), BitstreamError);
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + 10);
  CHECK_THROWS_AS(Bitstream::parse(cut), BitstreamError);
}

TEST_CASE("tryCtu leaves no trace") {
  const Frame f = smallPattern(64, 32, 4);
  const auto obj = Objective::derdo(25, syntheticDefaultProfile());
  FrameEncoder a(f), b(f);
  a.tryCtu(0, 0, 40, obj);
  a.tryCtu(0, 0, 10, Objective::dedo(10, syntheticDefaultProfile()));
  const auto ca = a.encodeCtu(0, 0, 25, obj);
  const auto cb = b.encodeCtu(0, 0, 25, obj);
  CHECK(ca.cost == cb.cost);
  a.encodeCtu(32, 0, 25, obj);
  b.encodeCtu(32, 0, 25, obj);
  CHECK(a.finish() == b.finish());
  CHECK(a.reconstruction() == b.reconstruction());
  CHECK(a.counts() == b.counts());
}
