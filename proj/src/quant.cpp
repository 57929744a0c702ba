#include "derd/quant.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "derd/transform.hpp"

namespace derd::quant {

namespace {

constexpr std::array<std::int64_t, 6> kQuantScales{26214, 23302, 20560, 18396, 16384, 14564};
constexpr std::array<std::int64_t, 6> kDequantScales{40, 45, 51, 57, 64, 72};
constexpr std::int64_t kMaxLevel = (1 << 22) - 1;
constexpr std::int64_t kMaxCoeff = 1 << 24;

// Dequantized value = level * scale << (qp / 6), normalised from the
// 6-bit table precision to the coefficient domain.
constexpr int kDequantShift = 6 - transform::kCoeffFractionBits;

}  // namespace

void requireQp(int qp) {
  if (qp < kMinQp || qp > kMaxQp)
    throw std::out_of_range("QP " + std::to_string(qp) + " outside [0, 51]");
}

double stepSize(int qp) {
  requireQp(qp);
  return static_cast<double>(kDequantScales[static_cast<std::size_t>(qp % 6)]) *
         std::ldexp(1.0, qp / 6) / 64.0;
}

double coefficientStep(int qp) { return stepSize(qp) * (1 << transform::kCoeffFractionBits); }

void quantize(std::span<const std::int32_t> coeffs, std::span<std::int32_t> levels, int qp,
              double rounding) {
  requireQp(qp);
  if (levels.size() < coeffs.size()) throw std::invalid_argument("level buffer too small");
  if (rounding < 0.0 || rounding >= 1.0) throw std::invalid_argument("rounding offset outside [0, 1)");
  const int qbits = 14 + qp / 6 + transform::kCoeffFractionBits;
  const std::int64_t scale = kQuantScales[static_cast<std::size_t>(qp % 6)];
  const auto offset = static_cast<std::int64_t>(rounding * std::ldexp(1.0, qbits));
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const std::int64_t c = coeffs[i];
    std::int64_t level = (std::llabs(c) * scale + offset) >> qbits;
    if (level > kMaxLevel) level = kMaxLevel;
    levels[i] = static_cast<std::int32_t>(c < 0 ? -level : level);
  }
}

void dequantize(std::span<const std::int32_t> levels, std::span<std::int32_t> coeffs, int qp) {
  requireQp(qp);
  if (coeffs.size() < levels.size()) throw std::invalid_argument("coefficient buffer too small");
  const std::int64_t scale = kDequantScales[static_cast<std::size_t>(qp % 6)] << (qp / 6);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::int64_t l = levels[i];
    if (l == 0) {
      coeffs[i] = 0;
      continue;
    }
    std::int64_t mag = std::llabs(l);
    if (mag > kMaxLevel) mag = kMaxLevel;
    std::int64_t v = (mag * scale + (1 << (kDequantShift - 1))) >> kDequantShift;
    if (v > kMaxCoeff) v = kMaxCoeff;
    coeffs[i] = static_cast<std::int32_t>(l < 0 ? -v : v);
  }
}

}  // namespace derd::quant
