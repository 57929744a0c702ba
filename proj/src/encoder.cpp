#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>

#include "derd/codec.hpp"
#include "derd/entropy.hpp"
#include "derd/intra.hpp"
#include "derd/quant.hpp"
#include "derd/syntax.hpp"
#include "derd/transform.hpp"
#include "picture_state.hpp"

namespace derd {

namespace {

using detail::kCtuSize;
using detail::kMinCuSize;
using syntax::Channel;

constexpr double kInf = std::numeric_limits<double>::infinity();

// One component block coded with one mode.
struct Trial {
  int mode = 0;
  bool transform_skip = false;
  bool cbf = false;
  std::uint64_t sse = 0;
  std::array<std::uint8_t, 32 * 32> recon;
  std::array<std::int32_t, 32 * 32> levels;
  FeatureCounts delta;
};

struct SourceBlock {
  int size = 0;
  std::array<std::uint8_t, 32 * 32> samples;
};

SourceBlock sourceBlock(const Plane& p, int x, int y, int size) {
  SourceBlock b;
  b.size = size;
  for (int r = 0; r < size; ++r)
    std::copy_n(p.samples.begin() + static_cast<std::ptrdiff_t>((y + r) * p.width + x), size,
                b.samples.begin() + r * size);
  return b;
}

template <class T>
std::vector<T> copyRect(const std::vector<T>& v, int stride, int x, int y, int w, int h) {
  std::vector<T> out(static_cast<std::size_t>(w * h));
  for (int r = 0; r < h; ++r)
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>((y + r) * stride + x), w, out.begin() + r * w);
  return out;
}

template <class T>
void pasteRect(std::vector<T>& v, int stride, int x, int y, int w, int h, const std::vector<T>& src) {
  for (int r = 0; r < h; ++r)
    std::copy_n(src.begin() + r * w, w, v.begin() + static_cast<std::ptrdiff_t>((y + r) * stride + x));
}

}  // namespace

class FrameEncoder::Impl {
 public:
  Impl(const Frame& source, int frame_index, std::vector<DecisionRecord>* log)
      : src_(source),
        width_(source.width),
        height_(source.height),
        frame_index_(frame_index),
        log_(log),
        pic_(source.width, source.height) {
    requireCodableDimensions(source.width, source.height);
  }

  RegionCost encodeCtu(int x, int y, int qp, const Objective& objective) {
    if (x % kCtuSize || y % kCtuSize || x < 0 || y < 0 || x >= width_ || y >= height_)
      throw std::invalid_argument("CTU origin must be a 32-aligned position inside the picture");
    quant::requireQp(qp);
    objective.validate();
    qp_ = qp;
    obj_ = &objective;
    const Totals start = totals();
    decide(x, y, kCtuSize);
    const RegionCost c = regionCost(start);
    obj_ = nullptr;
    return c;
  }

  RegionCost tryCtu(int x, int y, int qp, const Objective& objective) {
    const Snapshot base = capture(x, y, kCtuSize, enc_.state().bits, logSize());
    const RegionCost c = encodeCtu(x, y, qp, objective);
    restore(base);
    return c;
  }

  std::vector<std::uint8_t> finish() {
    enc_.finish();
    return enc_.bytes();
  }

  const Frame& reconstruction() const { return pic_.recon; }
  const FeatureCounts& counts() const { return counts_; }
  std::uint64_t distortion() const { return dist_; }

 private:
  struct Totals {
    std::uint64_t dist = 0;
    std::uint64_t bits = 0;
    double energy = 0.0;
  };

  struct Snapshot {
    int x = 0, y = 0, w = 0, h = 0;  // luma rectangle, clipped to the picture
    std::array<std::vector<std::uint8_t>, 3> samples;
    std::array<std::vector<std::uint8_t>, 3> cells;
    std::vector<std::int8_t> modes;
    entropy::BinEncoder::State enc;
    std::uint64_t tail_from = 0;
    std::vector<std::uint8_t> tail;
    syntax::ContextSet ctx;
    FeatureCounts counts;
    std::uint64_t dist = 0;
    double energy = 0.0;
    std::uint64_t row_bits = 0;
    std::size_t log_from = 0;
    std::vector<DecisionRecord> log_tail;
  };

  Totals totals() const { return {dist_, enc_.committedBits(), energy_}; }

  RegionCost regionCost(const Totals& start) const {
    RegionCost c;
    c.distortion = dist_ - start.dist;
    c.bits = enc_.committedBits() - start.bits;
    c.energy_j = energy_ - start.energy;
    c.cost = evaluateCost(static_cast<double>(c.distortion), static_cast<double>(c.bits), c.energy_j,
                          *obj_)
                 .cost;
    return c;
  }

  std::size_t logSize() const { return log_ ? log_->size() : 0; }

  Snapshot capture(int x, int y, int size, std::uint64_t tail_from, std::size_t log_from) const {
    Snapshot s;
    s.x = x;
    s.y = y;
    s.w = std::min(size, width_ - x);
    s.h = std::min(size, height_ - y);
    for (std::size_t c = 0; c < 3; ++c) {
      const int div = c == 0 ? 1 : 2;
      const Plane& p = pic_.recon.planes[c];
      s.samples[c] = copyRect(p.samples, p.width, x / div, y / div, s.w / div, s.h / div);
      const auto& map = pic_.coded[c];
      s.cells[c] = copyRect(map.cells(), map.cols(), x / div / 4, y / div / 4, s.w / div / 4,
                            s.h / div / 4);
    }
    s.modes = copyRect(pic_.modes, pic_.mode_cols, x / 4, y / 4, s.w / 4, s.h / 4);
    s.enc = enc_.state();
    s.tail_from = tail_from;
    s.tail = enc_.writer().slice(tail_from);
    s.ctx = ctx_;
    s.counts = counts_;
    s.dist = dist_;
    s.energy = energy_;
    s.row_bits = row_bits_;
    s.log_from = log_from;
    if (log_) s.log_tail.assign(log_->begin() + static_cast<std::ptrdiff_t>(log_from), log_->end());
    return s;
  }

  void restore(const Snapshot& s) {
    for (std::size_t c = 0; c < 3; ++c) {
      const int div = c == 0 ? 1 : 2;
      Plane& p = pic_.recon.planes[c];
      pasteRect(p.samples, p.width, s.x / div, s.y / div, s.w / div, s.h / div, s.samples[c]);
      auto& map = pic_.coded[c];
      pasteRect(map.cells(), map.cols(), s.x / div / 4, s.y / div / 4, s.w / div / 4, s.h / div / 4,
                s.cells[c]);
    }
    pasteRect(pic_.modes, pic_.mode_cols, s.x / 4, s.y / 4, s.w / 4, s.h / 4, s.modes);
    enc_.rewind(s.enc);  // clears the finished state and drops later bits
    enc_.writer().restore(s.tail_from, s.tail, s.enc.bits - s.tail_from);
    enc_.setRegisters(s.enc);
    ctx_ = s.ctx;
    counts_ = s.counts;
    dist_ = s.dist;
    energy_ = s.energy;
    row_bits_ = s.row_bits;
    if (log_) {
      log_->resize(s.log_from);
      log_->insert(log_->end(), s.log_tail.begin(), s.log_tail.end());
    }
  }

  // Rate of a syntax writer, measured on the live coder and rolled back.
  template <class Write>
  std::uint64_t measure(Write&& write) {
    const auto state = enc_.state();
    const syntax::ContextSet saved = ctx_;
    const std::uint64_t before = enc_.committedBits();
    enc_.setCounting(true);
    write();
    const std::uint64_t bits = enc_.committedBits() - before;
    enc_.setCounting(false);
    enc_.rewind(state);
    ctx_ = saved;
    return bits;
  }

  // Codes one block. When dropped is given and the block has coefficients,
  // it also receives the same prediction with the residual discarded.
  void runTrial(Component c, const SourceBlock& src, const intra::References& refs, int mode,
                bool transform_skip, bool outside_mpm, Trial& t, Trial* dropped = nullptr) const {
    const int size = src.size;
    const auto n = static_cast<std::size_t>(size * size);
    std::array<std::uint8_t, 32 * 32> pred;
    std::array<std::int32_t, 32 * 32> resid;
    std::array<std::int32_t, 32 * 32> coeffs;
    intra::predict(refs, mode, std::span(pred).first(n));
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      resid[i] = static_cast<int>(src.samples[i]) - static_cast<int>(pred[i]);
      any = any || resid[i] != 0;
    }
    t.mode = mode;
    t.transform_skip = transform_skip;
    if (!any) {
      std::fill_n(t.levels.begin(), n, 0);
      t.cbf = false;
    } else {
      if (transform_skip)
        transform::forwardSkip(std::span(resid).first(n), std::span(coeffs).first(n), size);
      else
        transform::forward(std::span(resid).first(n), std::span(coeffs).first(n), size);
      quant::quantize(std::span(coeffs).first(n), std::span(t.levels).first(n), qp_);
      t.cbf = std::any_of(t.levels.begin(), t.levels.begin() + static_cast<std::ptrdiff_t>(n),
                          [](std::int32_t v) { return v != 0; });
    }
    detail::reconstruct(pred, t.levels, t.cbf, transform_skip, qp_, size, t.recon);
    std::uint64_t sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int d = static_cast<int>(src.samples[i]) - static_cast<int>(t.recon[i]);
      sse += static_cast<std::uint64_t>(d * d);
    }
    t.sse = sse;
    t.delta = detail::blockDelta(c, size, mode, outside_mpm, std::span(t.levels).first(n), t.cbf,
                                 transform_skip && t.cbf);
    if (!dropped) return;
    if (!t.cbf) {
      *dropped = t;
      return;
    }
    dropped->mode = mode;
    dropped->transform_skip = false;
    dropped->cbf = false;
    std::fill_n(dropped->levels.begin(), n, 0);
    std::copy_n(pred.begin(), n, dropped->recon.begin());
    sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int d = static_cast<int>(src.samples[i]) - static_cast<int>(pred[i]);
      sse += static_cast<std::uint64_t>(d * d);
    }
    dropped->sse = sse;
    dropped->delta = detail::blockDelta(c, size, mode, outside_mpm, std::span(dropped->levels).first(n),
                                        false, false);
  }

  void writeChromaResidual(Channel ch, const Trial& t, int size) {
    syntax::writeCbf(enc_, ctx_, ch, t.cbf);
    if (t.cbf) syntax::writeResidual(enc_, ctx_, std::span(t.levels).first(static_cast<std::size_t>(size * size)), size, ch);
  }

  void writeLeaf(int size, const std::array<int, 3>& mpm, const std::array<Trial, 3>& t) {
    syntax::writeLumaMode(enc_, ctx_, t[0].mode, mpm);
    writeChromaResidual(Channel::Luma, t[0], size);
    writeChromaResidual(Channel::Chroma, t[1], size / 2);
    writeChromaResidual(Channel::Chroma, t[2], size / 2);
  }

  void writeLuma4(const std::array<int, 3>& mpm, const Trial& t) {
    syntax::writeLumaMode(enc_, ctx_, t.mode, mpm);
    syntax::writeCbf(enc_, ctx_, Channel::Luma, t.cbf);
    if (t.cbf) {
      syntax::writeTransformSkip(enc_, ctx_, t.transform_skip);
      syntax::writeResidual(enc_, ctx_, std::span(t.levels).first(16), 4, Channel::Luma);
    }
  }

  void record(int x, int y, int size, const char* component, const Trial& t, std::uint64_t dist,
              double energy) {
    const std::uint64_t now = enc_.committedBits();
    const std::uint64_t bits = now - row_bits_;
    row_bits_ = now;
    if (!log_) return;
    DecisionRecord r;
    r.frame = frame_index_;
    r.x = x;
    r.y = y;
    r.size = size;
    r.component = component;
    r.objective = obj_->kind;
    r.qp = qp_;
    r.mode = t.mode;
    r.transform_skip = t.transform_skip && t.cbf;
    r.distortion = dist;
    r.bits = bits;
    r.energy_j = energy;
    r.cost = evaluateCost(static_cast<double>(dist), static_cast<double>(bits), energy, *obj_).cost;
    log_->push_back(std::move(r));
  }

  void commitBlock(Component c, int x, int y, int size, const Trial& t) {
    pic_.store(c, x, y, size, std::span(t.recon).first(static_cast<std::size_t>(size * size)));
    counts_ += t.delta;
  }

  // Candidates are visited in order of their rate-free cost D + lambda_e * E,
  // which bounds J from below, so rate is measured only while a candidate
  // can still win. Ties go to the earlier candidate in index order.
  struct Ranked {
    double lower = 0.0;
    double energy = 0.0;
    std::uint64_t distortion = 0;
    int index = 0;
  };

  template <class Write>
  int pickBest(std::vector<Ranked>& ranked, Write&& write) {
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
      return a.lower < b.lower || (a.lower == b.lower && a.index < b.index);
    });
    int best = -1;
    double bestJ = kInf;
    for (const Ranked& r : ranked) {
      if (r.lower > bestJ || (r.lower == bestJ && r.index > best)) break;
      std::uint64_t bits = 0;
      if (obj_->lambda_r > 0.0) bits = measure([&] { write(r.index); });
      const double j =
          evaluateCost(static_cast<double>(r.distortion), static_cast<double>(bits), r.energy, *obj_).cost;
      if (j < bestJ || (j == bestJ && r.index < best)) {
        bestJ = j;
        best = r.index;
      }
    }
    return best;
  }

  // Whole CU coded with one mode for luma and chroma.
  void codeLeaf(int x, int y, int size) {
    const auto mpm = pic_.mostProbable(x, y);
    const int cs = size / 2;
    const std::array<intra::References, 3> refs{pic_.references(Component::Y, x, y, size),
                                                pic_.references(Component::U, x / 2, y / 2, cs),
                                                pic_.references(Component::V, x / 2, y / 2, cs)};
    const std::array<SourceBlock, 3> src{sourceBlock(src_.plane(Component::Y), x, y, size),
                                         sourceBlock(src_.plane(Component::U), x / 2, y / 2, cs),
                                         sourceBlock(src_.plane(Component::V), x / 2, y / 2, cs)};
    // Candidate 2 * mode codes the residuals, 2 * mode + 1 drops all of them.
    auto& trials = leafTrials_;
    std::vector<Ranked> ranked;
    ranked.reserve(2 * intra::kNumModes);
    auto rank = [&](int idx) {
      const auto& cur = trials[static_cast<std::size_t>(idx)];
      const std::uint64_t d = cur[0].sse + cur[1].sse + cur[2].sse;
      FeatureCounts delta = cur[0].delta;
      delta += cur[1].delta;
      delta += cur[2].delta;
      const double e = estimateBlockEnergy(obj_->profile, delta);
      ranked.push_back({evaluateCost(static_cast<double>(d), 0.0, e, *obj_).cost, e, d, idx});
    };
    for (int mode = 0; mode < intra::kNumModes; ++mode) {
      auto& cur = trials[static_cast<std::size_t>(2 * mode)];
      auto& drop = trials[static_cast<std::size_t>(2 * mode + 1)];
      const bool outside = !syntax::isMostProbable(mode, mpm);
      for (std::size_t c = 0; c < 3; ++c)
        runTrial(kComponents[c], src[c], refs[c], mode, false, c == 0 && outside, cur[c], &drop[c]);
      rank(2 * mode);
      if (cur[0].cbf || cur[1].cbf || cur[2].cbf) rank(2 * mode + 1);
    }
    const int bestIdx = pickBest(ranked, [&](int i) {
      writeLeaf(size, mpm, trials[static_cast<std::size_t>(i)]);
    });
    const auto& winner = *std::find_if(ranked.begin(), ranked.end(),
                                       [&](const Ranked& r) { return r.index == bestIdx; });
    const auto& best = trials[static_cast<std::size_t>(bestIdx)];
    writeLeaf(size, mpm, best);
    commitBlock(Component::Y, x, y, size, best[0]);
    commitBlock(Component::U, x / 2, y / 2, cs, best[1]);
    commitBlock(Component::V, x / 2, y / 2, cs, best[2]);
    pic_.setMode(x, y, size, best[0].mode);
    dist_ += winner.distortion;
    energy_ += winner.energy;
    record(x, y, size, "YUV", best[0], winner.distortion, winner.energy);
  }

  // 8x8 CU as four 4x4 luma blocks plus one 4x4 block per chroma plane.
  // Luma candidate index is 3 * mode + v with v = 0 for the transformed
  // residual, 1 for transform skip and 2 for no residual.
  void codeSplit8(int x, int y) {
    auto& trials = lumaTrials_;
    int firstMode = intra::kDc;
    std::vector<Ranked> ranked;
    ranked.reserve(2 * intra::kNumModes);
    for (int i = 0; i < 4; ++i) {
      const int bx = x + (i & 1) * 4;
      const int by = y + (i >> 1) * 4;
      const auto mpm = pic_.mostProbable(bx, by);
      const auto refs = pic_.references(Component::Y, bx, by, 4);
      const auto src = sourceBlock(src_.plane(Component::Y), bx, by, 4);
      ranked.clear();
      auto rank = [&](int idx) {
        const auto& cur = trials[static_cast<std::size_t>(idx)];
        const double e = estimateBlockEnergy(obj_->profile, cur.delta);
        ranked.push_back({evaluateCost(static_cast<double>(cur.sse), 0.0, e, *obj_).cost, e, cur.sse, idx});
      };
      for (int mode = 0; mode < intra::kNumModes; ++mode) {
        const bool outside = !syntax::isMostProbable(mode, mpm);
        auto& dct = trials[static_cast<std::size_t>(3 * mode)];
        auto& skip = trials[static_cast<std::size_t>(3 * mode + 1)];
        auto& drop = trials[static_cast<std::size_t>(3 * mode + 2)];
        runTrial(Component::Y, src, refs, mode, false, outside, dct, &drop);
        runTrial(Component::Y, src, refs, mode, true, outside, skip);
        rank(3 * mode);
        // Uncoded variants equal to an earlier candidate are left out.
        if (skip.cbf) rank(3 * mode + 1);
        if (dct.cbf) rank(3 * mode + 2);
      }
      const int bestIdx = pickBest(ranked, [&](int k) { writeLuma4(mpm, trials[static_cast<std::size_t>(k)]); });
      const auto& winner = *std::find_if(ranked.begin(), ranked.end(),
                                         [&](const Ranked& r) { return r.index == bestIdx; });
      const auto& best = trials[static_cast<std::size_t>(bestIdx)];
      writeLuma4(mpm, best);
      commitBlock(Component::Y, bx, by, 4, best);
      pic_.setMode(bx, by, 4, best.mode);
      dist_ += best.sse;
      energy_ += winner.energy;
      record(bx, by, 4, "Y", best, best.sse, winner.energy);
      if (i == 0) firstMode = best.mode;
    }

    // Chroma follows the first luma mode; each plane chooses between its
    // residual (candidate 0) and none (candidate 1).
    auto& chroma = chromaTrials_;
    std::uint64_t d = 0;
    double e = 0.0;
    for (std::size_t c = 1; c < 3; ++c) {
      const auto refs = pic_.references(kComponents[c], x / 2, y / 2, 4);
      const auto src = sourceBlock(src_.plane(kComponents[c]), x / 2, y / 2, 4);
      runTrial(kComponents[c], src, refs, firstMode, false, false, chroma[0], &chroma[1]);
      ranked.clear();
      for (int v = 0; v < (chroma[0].cbf ? 2 : 1); ++v) {
        const auto& cur = chroma[static_cast<std::size_t>(v)];
        const double ev = estimateBlockEnergy(obj_->profile, cur.delta);
        ranked.push_back({evaluateCost(static_cast<double>(cur.sse), 0.0, ev, *obj_).cost, ev, cur.sse, v});
      }
      const int v = pickBest(ranked, [&](int k) {
        writeChromaResidual(Channel::Chroma, chroma[static_cast<std::size_t>(k)], 4);
      });
      const auto& best = chroma[static_cast<std::size_t>(v)];
      writeChromaResidual(Channel::Chroma, best, 4);
      commitBlock(kComponents[c], x / 2, y / 2, 4, best);
      d += best.sse;
      e += estimateBlockEnergy(obj_->profile, best.delta);
    }
    dist_ += d;
    energy_ += e;
    record(x, y, 4, "UV", chroma[0], d, e);
  }

  void decide(int x, int y, int size) {
    if (x >= width_ || y >= height_) return;
    const int half = size / 2;
    if (x + size > width_ || y + size > height_) {
      // Only CUs above the minimum size can straddle the picture border.
      for (int i = 0; i < 4; ++i) decide(x + (i & 1) * half, y + (i >> 1) * half, half);
      return;
    }
    const Totals start = totals();
    const Snapshot base = capture(x, y, size, enc_.state().bits, logSize());

    syntax::writeSplit(enc_, ctx_, size, false);
    codeLeaf(x, y, size);
    const double leafJ = regionCost(start).cost;
    const Snapshot leaf = capture(x, y, size, base.enc.bits, base.log_from);

    restore(base);
    syntax::writeSplit(enc_, ctx_, size, true);
    if (size == kMinCuSize)
      codeSplit8(x, y);
    else
      for (int i = 0; i < 4; ++i) decide(x + (i & 1) * half, y + (i >> 1) * half, half);
    const double splitJ = regionCost(start).cost;
    if (!(splitJ < leafJ)) restore(leaf);
  }

  const Frame& src_;
  int width_;
  int height_;
  int frame_index_;
  std::vector<DecisionRecord>* log_;
  detail::PictureState pic_;
  entropy::BinEncoder enc_;
  syntax::ContextSet ctx_;
  FeatureCounts counts_;
  std::uint64_t dist_ = 0;
  double energy_ = 0.0;
  std::uint64_t row_bits_ = 0;
  int qp_ = 0;
  const Objective* obj_ = nullptr;
  std::vector<std::array<Trial, 3>> leafTrials_ = std::vector<std::array<Trial, 3>>(2 * intra::kNumModes);
  std::vector<Trial> lumaTrials_ = std::vector<Trial>(3 * intra::kNumModes);
  std::array<Trial, 2> chromaTrials_{};
};

FrameEncoder::FrameEncoder(const Frame& source, int frame_index, std::vector<DecisionRecord>* log)
    : impl_(std::make_unique<Impl>(source, frame_index, log)) {}
FrameEncoder::~FrameEncoder() = default;

RegionCost FrameEncoder::encodeCtu(int x, int y, int qp, const Objective& objective) {
  return impl_->encodeCtu(x, y, qp, objective);
}
RegionCost FrameEncoder::tryCtu(int x, int y, int qp, const Objective& objective) {
  return impl_->tryCtu(x, y, qp, objective);
}
std::vector<std::uint8_t> FrameEncoder::finish() { return impl_->finish(); }
const Frame& FrameEncoder::reconstruction() const { return impl_->reconstruction(); }
const FeatureCounts& FrameEncoder::counts() const { return impl_->counts(); }
std::uint64_t FrameEncoder::distortion() const { return impl_->distortion(); }

EncodeResult encodeSequence(std::span<const Frame> frames, const EncoderConfig& config) {
  if (frames.empty()) throw std::invalid_argument("no frames to encode");
  config.objective.validate();
  quant::requireQp(config.qp);
  EncodeResult out;
  out.stream.width = static_cast<std::uint32_t>(frames[0].width);
  out.stream.height = static_cast<std::uint32_t>(frames[0].height);
  out.stream.objective_id = static_cast<std::uint32_t>(config.objective.kind);
  out.stream.qp = static_cast<std::uint32_t>(config.qp);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].width != frames[0].width || frames[f].height != frames[0].height)
      throw FormatError("all frames of a sequence must share one size");
    FrameEncoder fe(frames[f], static_cast<int>(f), config.record_decisions ? &out.decisions : nullptr);
    for (int y = 0; y < frames[f].height; y += kCtuSize)
      for (int x = 0; x < frames[f].width; x += kCtuSize) fe.encodeCtu(x, y, config.qp, config.objective);
    out.stream.payloads.push_back(fe.finish());
    FeatureCounts fc = fe.counts();
    fc.n_slice = 1;
    out.counts += fc;
    out.distortion += fe.distortion();
    out.reconstructions.push_back(fe.reconstruction());
  }
  if (config.audit) out.stream.audit = out.counts;
  return out;
}

}  // namespace derd
