#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "derd/harness.hpp"

namespace derd {

namespace {

std::uint8_t clip(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

void fillGradient(Frame& f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double a = angle(rng), phase = angle(rng), period = 40.0 + 80.0 * unit(rng);
  const double ca = std::cos(a), sa = std::sin(a);
  const double diag = std::hypot(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      const double t = (x * ca + y * sa) / diag;
      const double ripple = 12.0 * std::sin(2 * std::numbers::pi * (x * sa - y * ca) / period + phase);
      f.planes[0].at(x, y) = clip(128.0 + 100.0 * t + ripple);
    }
  const double cu = angle(rng), cv = angle(rng);
  for (int y = 0; y < f.height / 2; ++y)
    for (int x = 0; x < f.width / 2; ++x) {
      const double u = static_cast<double>(x) / (f.width / 2.0), v = static_cast<double>(y) / (f.height / 2.0);
      f.planes[1].at(x, y) = clip(128.0 + 40.0 * std::cos(cu) * (u - 0.5) + 30.0 * std::sin(cu) * (v - 0.5));
      f.planes[2].at(x, y) = clip(128.0 + 30.0 * std::cos(cv) * (v - 0.5) - 40.0 * std::sin(cv) * (u - 0.5));
    }
}

// Rows of 5x7 pseudo-glyphs on a light page with a few tinted banners.
void fillText(Frame& f, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> bit(0, 1);
  std::uniform_int_distribution<int> ink(10, 60);
  std::uniform_int_distribution<int> paper(200, 240);
  const int page = paper(rng);
  std::fill(f.planes[0].samples.begin(), f.planes[0].samples.end(), static_cast<std::uint8_t>(page));
  std::uniform_int_distribution<int> scaleDist(1, 2);
  int y = 6;
  while (y + 16 < f.height) {
    const int scale = scaleDist(rng);
    const int gw = 6 * scale, gh = 9 * scale;
    if (y + gh >= f.height) break;
    const int shade = ink(rng);
    int x = 6;
    while (x + gw < f.width - 6) {
      if (bit(rng) && bit(rng) && bit(rng)) {  // word gap
        x += gw;
        continue;
      }
      std::array<std::array<bool, 5>, 7> g{};
      for (auto& row : g)
        for (auto& px : row) px = bit(rng) != 0;
      for (int gy = 0; gy < 7 * scale; ++gy)
        for (int gx = 0; gx < 5 * scale; ++gx)
          if (g[static_cast<std::size_t>(gy / scale)][static_cast<std::size_t>(gx / scale)])
            f.planes[0].at(x + gx, y + gy) = static_cast<std::uint8_t>(shade);
      x += gw;
    }
    y += gh + 4 * scale;
  }
  std::uniform_int_distribution<int> tint(90, 170);
  std::uniform_int_distribution<int> bandY(0, f.height / 2 - 8);
  for (int b = 0; b < 3; ++b) {
    const int top = bandY(rng) & ~3, u = tint(rng), v = tint(rng);
    for (int cy = top; cy < std::min(top + 12, f.height / 2); ++cy)
      for (int cx = 0; cx < f.width / 2; ++cx) {
        f.planes[1].at(cx, cy) = static_cast<std::uint8_t>(u);
        f.planes[2].at(cx, cy) = static_cast<std::uint8_t>(v);
      }
  }
}

// Smooth background with rectangular patches of Gaussian noise.
void fillNoise(Frame& f, std::mt19937_64& rng) {
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      f.planes[0].at(x, y) = clip(96.0 + 64.0 * x / f.width + 32.0 * y / f.height);
  std::uniform_int_distribution<int> px(0, f.width - 1), py(0, f.height - 1);
  std::uniform_int_distribution<int> side(16, 96);
  std::uniform_real_distribution<double> sigma(4.0, 24.0);
  const int patches = std::max(1, f.width * f.height / 9000);
  for (int p = 0; p < patches; ++p) {
    const int x0 = px(rng), y0 = py(rng), w = side(rng), h = side(rng);
    std::normal_distribution<double> n(0.0, sigma(rng));
    for (int y = y0; y < std::min(f.height, y0 + h); ++y)
      for (int x = x0; x < std::min(f.width, x0 + w); ++x) f.planes[0].at(x, y) = clip(f.planes[0].at(x, y) + n(rng));
    for (int y = y0 / 2; y < std::min(f.height / 2, (y0 + h) / 2); ++y)
      for (int x = x0 / 2; x < std::min(f.width / 2, (x0 + w) / 2); ++x) {
        f.planes[1].at(x, y) = clip(128.0 + 0.5 * n(rng));
        f.planes[2].at(x, y) = clip(128.0 + 0.5 * n(rng));
      }
  }
}

}  // namespace

std::string_view toString(PatternKind kind) {
  switch (kind) {
    case PatternKind::Gradient: return "gradient";
    case PatternKind::Text: return "text";
    case PatternKind::Noise: return "noise";
  }
  return "?";
}

Frame generatePattern(PatternKind kind, int width, int height, std::uint64_t seed) {
  requireCodableDimensions(width, height);
  Frame f(width, height);
  std::mt19937_64 rng(seed);
  switch (kind) {
    case PatternKind::Gradient: fillGradient(f, rng); break;
    case PatternKind::Text: fillText(f, rng); break;
    case PatternKind::Noise: fillNoise(f, rng); break;
  }
  return f;
}

ExperimentConfig generateCorpus(const std::filesystem::path& dir, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  ExperimentConfig cfg;
  constexpr std::array<std::pair<int, int>, 2> kSizes{{{416, 240}, {832, 480}}};
  constexpr std::array<PatternKind, 3> kKinds{PatternKind::Gradient, PatternKind::Text, PatternKind::Noise};
  std::uint64_t s = seed;
  for (const auto& [w, h] : kSizes)
    for (const auto kind : kKinds) {
      const Frame f = generatePattern(kind, w, h, s++);
      CorpusEntry e;
      e.label = std::string(toString(kind)) + "_" + std::to_string(w) + "x" + std::to_string(h);
      e.path = e.label + ".yuv";
      e.width = w;
      e.height = h;
      writeYuv420(dir / e.path, std::span(&f, 1));
      cfg.corpus.push_back(std::move(e));
    }
  cfg.output_dir = "results";
  std::ofstream out(dir / "corpus.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "corpus.json").string());
  nlohmann::json j = toJson(cfg);
  j["seed"] = seed;
  out << j.dump(2) << '\n';
  for (auto& e : cfg.corpus) e.path = dir / e.path;
  cfg.output_dir = dir / cfg.output_dir;
  return cfg;
}

}  // namespace derd
