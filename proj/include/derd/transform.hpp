#pragma once

#include <cstdint>
#include <span>

namespace derd::transform {

/// Coefficients carry this many fractional bits relative to an orthonormal
/// DCT of the residual.
inline constexpr int kCoeffFractionBits = 4;
/// Basis entries are the orthonormal DCT-II scaled by 2^kBasisBits and
/// rounded, with row symmetries kept exact.
inline constexpr int kBasisBits = 12;

/// Integer DCT-II basis entry T[k][n] of the N-point transform,
/// N in {4, 8, 16, 32}.
int basis(int size, int k, int n);

/// Residual (raster order, size*size) to coefficients. Throws
/// std::invalid_argument for unsupported sizes.
void forward(std::span<const std::int32_t> residual, std::span<std::int32_t> coeffs, int size);

/// Coefficients back to residual. For any 8-bit residual the round trip
/// through forward() reproduces every sample within +-1.
void inverse(std::span<const std::int32_t> coeffs, std::span<std::int32_t> residual, int size);

/// Transform skip (4x4 only): the residual is carried in the coefficient
/// domain with the same fixed-point scaling.
void forwardSkip(std::span<const std::int32_t> residual, std::span<std::int32_t> coeffs, int size);
void inverseSkip(std::span<const std::int32_t> coeffs, std::span<std::int32_t> residual, int size);

}  // namespace derd::transform
