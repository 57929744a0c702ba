#include "derd/transform.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace derd::transform {

namespace {

constexpr int kMaxN = 32;

int log2Size(int size) {
  switch (size) {
    case 4: return 2;
    case 8: return 3;
    case 16: return 4;
    case 32: return 5;
    default: throw std::invalid_argument("unsupported transform size " + std::to_string(size));
  }
}

// Basis of one size: dc entry plus a cosine table over (2j+1)k mod 4N with
// the quarter-wave symmetries imposed exactly, so every row is exactly
// symmetric or antisymmetric.
struct Basis {
  int n = 0;
  int dc = 0;
  std::vector<int> wave;  // 4n entries
  std::int64_t bound = 0;  // max abs row or column sum

  int at(int k, int j) const {
    if (k == 0) return dc;
    return wave[static_cast<std::size_t>(((2 * j + 1) * k) % (4 * n))];
  }
};

Basis makeBasis(int n) {
  Basis b;
  b.n = n;
  const double scale = std::ldexp(1.0, kBasisBits);
  b.dc = static_cast<int>(std::lround(scale / std::sqrt(static_cast<double>(n))));
  b.wave.assign(static_cast<std::size_t>(4 * n), 0);
  const double amp = scale * std::sqrt(2.0 / n);
  for (int m = 0; m <= n; ++m)
    b.wave[static_cast<std::size_t>(m)] =
        static_cast<int>(std::lround(amp * std::cos(std::numbers::pi * m / (2.0 * n))));
  b.wave[static_cast<std::size_t>(n)] = 0;
  for (int m = n + 1; m <= 2 * n; ++m)
    b.wave[static_cast<std::size_t>(m)] = -b.wave[static_cast<std::size_t>(2 * n - m)];
  for (int m = 2 * n + 1; m < 4 * n; ++m)
    b.wave[static_cast<std::size_t>(m)] = b.wave[static_cast<std::size_t>(4 * n - m)];
  for (int k = 0; k < n; ++k) {
    std::int64_t row = 0, col = 0;
    for (int j = 0; j < n; ++j) {
      row += std::abs(b.at(k, j));
      col += std::abs(b.at(j, k));
    }
    b.bound = std::max({b.bound, row, col});
  }
  return b;
}

const Basis& basisFor(int size) {
  static const std::array<Basis, 4> all{makeBasis(4), makeBasis(8), makeBasis(16), makeBasis(32)};
  return all[static_cast<std::size_t>(log2Size(size) - 2)];
}

template <class T>
T roundShift(T v, int s) {
  return (v + (T{1} << (s - 1))) >> s;
}

void requireSpans(std::size_t a, std::size_t b, int size) {
  const auto need = static_cast<std::size_t>(size * size);
  if (a < need || b < need) throw std::invalid_argument("transform buffer too small");
}

// The scratch arrays below are written before they are read, which GCC
// cannot always prove through the recursion.
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wmaybe-uninitialized"

// Forward butterfly on columns. With n = N / step input rows of width w it
// writes out[k][x] = sum_j T[k][j] * in[j][x] for every k = step * m.
template <class T>
void forwardColumns(const Basis& b, const T* in, T* out, int n, int w, int step) {
  if (n == 1) {
    for (int x = 0; x < w; ++x) out[x] = b.dc * in[x];
    return;
  }
  const int h = n / 2;
  std::array<T, kMaxN / 2 * kMaxN> e;
  std::array<T, kMaxN / 2 * kMaxN> o;
  for (int j = 0; j < h; ++j) {
    const T* lo = in + j * w;
    const T* hi = in + (n - 1 - j) * w;
    for (int x = 0; x < w; ++x) {
      e[static_cast<std::size_t>(j * w + x)] = lo[x] + hi[x];
      o[static_cast<std::size_t>(j * w + x)] = lo[x] - hi[x];
    }
  }
  forwardColumns(b, e.data(), out, h, w, 2 * step);
  for (int i = 0; i < h; ++i) {
    const int k = step * (2 * i + 1);
    T* dst = out + k * w;
    std::fill_n(dst, w, T{0});
    for (int j = 0; j < h; ++j) {
      const T c = b.at(k, j);
      const T* src = o.data() + j * w;
      for (int x = 0; x < w; ++x) dst[x] += c * src[x];
    }
  }
}

// Inverse butterfly on columns: out[j][x] = sum_k T[k][j] * in[k][x] over
// the rows k = step * m of in, for j < n = N / step.
template <class T>
void inverseColumns(const Basis& b, const T* in, T* out, int n, int w, int step) {
  if (n == 1) {
    for (int x = 0; x < w; ++x) out[x] = b.dc * in[x];
    return;
  }
  const int h = n / 2;
  std::array<T, kMaxN / 2 * kMaxN> e;
  std::array<T, kMaxN / 2 * kMaxN> o;
  inverseColumns(b, in, e.data(), h, w, 2 * step);
  std::fill_n(o.begin(), h * w, T{0});
  for (int i = 0; i < h; ++i) {
    const int k = step * (2 * i + 1);
    const T* src = in + k * w;
    if (std::all_of(src, src + w, [](T v) { return v == 0; })) continue;
    for (int j = 0; j < h; ++j) {
      const T c = b.at(k, j);
      T* dst = o.data() + j * w;
      for (int x = 0; x < w; ++x) dst[x] += c * src[x];
    }
  }
  for (int j = 0; j < h; ++j)
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(j * w + x);
      out[j * w + x] = e[i] + o[i];
      out[(n - 1 - j) * w + x] = e[i] - o[i];
    }
}

template <bool Inverse, class T>
void columns(const Basis& b, const T* in, T* out, int n) {
  if constexpr (Inverse)
    inverseColumns(b, in, out, n, n, 1);
  else
    forwardColumns(b, in, out, n, n, 1);
}

#pragma GCC diagnostic pop

// Column pass, rounding shift, row pass, rounding shift. Each pass runs in
// 32-bit arithmetic when its partial sums provably fit and in 64-bit
// otherwise; both give the same result.
template <bool Inverse>
void separable(std::span<const std::int32_t> in, std::span<std::int32_t> out, int n, int shift1,
               int shift2) {
  const Basis& b = basisFor(n);
  const auto count = static_cast<std::size_t>(n * n);
  constexpr std::int64_t kLimit = std::int64_t{1} << 31;

  std::int64_t inMax = 0;
  for (std::size_t i = 0; i < count; ++i) inMax = std::max<std::int64_t>(inMax, std::llabs(in[i]));

  // Intermediate kept transposed so the row pass is again a column pass.
  std::array<std::int64_t, kMaxN * kMaxN> mid;
  if (inMax * b.bound < kLimit) {
    std::array<std::int32_t, kMaxN * kMaxN> dst;
    columns<Inverse>(b, in.data(), dst.data(), n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        mid[static_cast<std::size_t>(x * n + y)] = roundShift(dst[static_cast<std::size_t>(y * n + x)], shift1);
  } else {
    std::array<std::int64_t, kMaxN * kMaxN> src;
    std::array<std::int64_t, kMaxN * kMaxN> dst;
    std::copy_n(in.begin(), count, src.begin());
    columns<Inverse>(b, src.data(), dst.data(), n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        mid[static_cast<std::size_t>(x * n + y)] = roundShift(dst[static_cast<std::size_t>(y * n + x)], shift1);
  }

  std::int64_t midMax = 0;
  for (std::size_t i = 0; i < count; ++i) midMax = std::max<std::int64_t>(midMax, std::llabs(mid[i]));

  if (midMax * b.bound < kLimit) {
    std::array<std::int32_t, kMaxN * kMaxN> src;
    std::array<std::int32_t, kMaxN * kMaxN> dst;
    for (std::size_t i = 0; i < count; ++i) src[i] = static_cast<std::int32_t>(mid[i]);
    columns<Inverse>(b, src.data(), dst.data(), n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        out[static_cast<std::size_t>(y * n + x)] = roundShift(dst[static_cast<std::size_t>(x * n + y)], shift2);
  } else {
    std::array<std::int64_t, kMaxN * kMaxN> dst;
    columns<Inverse>(b, mid.data(), dst.data(), n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        out[static_cast<std::size_t>(y * n + x)] =
            static_cast<std::int32_t>(roundShift(dst[static_cast<std::size_t>(x * n + y)], shift2));
  }
}

// The intermediate of both directions carries kMidBits fractional bits.
constexpr int kMidBits = 6;

}  // namespace

int basis(int size, int k, int n) {
  const Basis& b = basisFor(size);
  if (k < 0 || k >= size || n < 0 || n >= size) throw std::out_of_range("basis index");
  return b.at(k, n);
}

void forward(std::span<const std::int32_t> residual, std::span<std::int32_t> coeffs, int size) {
  requireSpans(residual.size(), coeffs.size(), size);
  separable<false>(residual, coeffs, size, kBasisBits - kMidBits,
                   kBasisBits + kMidBits - kCoeffFractionBits);
}

void inverse(std::span<const std::int32_t> coeffs, std::span<std::int32_t> residual, int size) {
  requireSpans(coeffs.size(), residual.size(), size);
  separable<true>(coeffs, residual, size, kBasisBits + kCoeffFractionBits - kMidBits,
                  kBasisBits + kMidBits);
}

void forwardSkip(std::span<const std::int32_t> residual, std::span<std::int32_t> coeffs, int size) {
  if (size != 4) throw std::invalid_argument("transform skip is limited to 4x4 blocks");
  requireSpans(residual.size(), coeffs.size(), size);
  for (std::size_t i = 0; i < 16; ++i) coeffs[i] = residual[i] * (1 << kCoeffFractionBits);
}

void inverseSkip(std::span<const std::int32_t> coeffs, std::span<std::int32_t> residual, int size) {
  if (size != 4) throw std::invalid_argument("transform skip is limited to 4x4 blocks");
  requireSpans(coeffs.size(), residual.size(), size);
  for (std::size_t i = 0; i < 16; ++i) residual[i] = roundShift(coeffs[i], kCoeffFractionBits);
}

}  // namespace derd::transform
