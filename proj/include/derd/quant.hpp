#pragma once

#include <cstdint>
#include <span>

namespace derd::quant {

inline constexpr int kMinQp = 0;
inline constexpr int kMaxQp = 51;
/// Deadzone rounding offset for intra blocks, as a fraction of the step.
inline constexpr double kIntraRounding = 1.0 / 3.0;

void requireQp(int qp);

/// Quantizer step in orthonormal-coefficient units, 2^((QP - 4) / 6), as
/// realised by the integer scaling tables.
double stepSize(int qp);
/// The same step in the fixed-point coefficient domain of derd::transform.
double coefficientStep(int qp);

/// Uniform deadzone quantizer: level = sign(c) * floor(|c| / step + rounding).
void quantize(std::span<const std::int32_t> coeffs, std::span<std::int32_t> levels, int qp,
              double rounding = kIntraRounding);
void dequantize(std::span<const std::int32_t> levels, std::span<std::int32_t> coeffs, int qp);

}  // namespace derd::quant
