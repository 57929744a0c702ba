#include "derd/kernels.hpp"

#include <stdexcept>

namespace derd::kernels {

namespace {

void requireSameSize(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("sse: sample arrays differ in size");
}

}  // namespace

std::uint64_t sse(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  requireSameSize(a.size(), b.size());
  const auto n = static_cast<std::int64_t>(a.size());
  std::uint64_t total = 0;
#pragma omp parallel for reduction(+ : total) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
    total += static_cast<std::uint64_t>(d * d);
  }
  return total;
}

std::uint64_t sseSerial(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  requireSameSize(a.size(), b.size());
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
    total += static_cast<std::uint64_t>(d * d);
  }
  return total;
}

std::vector<double> estimateBatch(const SpecificEnergyProfile& profile,
                                  std::span<const FeatureCounts> counts) {
  std::vector<double> out(counts.size());
  const auto n = static_cast<std::int64_t>(counts.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = estimateDecodingEnergy(profile, counts[i]);
  return out;
}

std::vector<double> estimateBatchSerial(const SpecificEnergyProfile& profile,
                                        std::span<const FeatureCounts> counts) {
  std::vector<double> out;
  out.reserve(counts.size());
  for (const auto& c : counts) out.push_back(estimateDecodingEnergy(profile, c));
  return out;
}

namespace {

void checkShape(std::span<const double> x, std::span<const double> y, std::size_t rows,
                std::size_t cols) {
  if (x.size() != rows * cols || y.size() != rows)
    throw std::invalid_argument("normalEquations: shape mismatch");
}

}  // namespace

NormalEquations normalEquations(std::span<const double> x, std::span<const double> y,
                                std::size_t rows, std::size_t cols) {
  checkShape(x, y, rows, cols);
  NormalEquations ne{cols, std::vector<double>(cols * cols), std::vector<double>(cols)};
  // One output entry per iteration; the sample loop stays serial so the sum
  // order matches the reference exactly.
  const auto entries = static_cast<std::int64_t>(cols * (cols + 1) / 2 + cols);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t e = 0; e < entries; ++e) {
    std::size_t idx = static_cast<std::size_t>(e);
    if (idx < cols) {
      double s = 0.0;
      for (std::size_t r = 0; r < rows; ++r) s += x[r * cols + idx] * y[r];
      ne.rhs[idx] = s;
      continue;
    }
    idx -= cols;
    std::size_t i = 0;
    while (idx >= cols - i) {
      idx -= cols - i;
      ++i;
    }
    const std::size_t j = i + idx;
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += x[r * cols + i] * x[r * cols + j];
    ne.gram[i * cols + j] = s;
    ne.gram[j * cols + i] = s;
  }
  return ne;
}

NormalEquations normalEquationsSerial(std::span<const double> x, std::span<const double> y,
                                      std::size_t rows, std::size_t cols) {
  checkShape(x, y, rows, cols);
  NormalEquations ne{cols, std::vector<double>(cols * cols), std::vector<double>(cols)};
  for (std::size_t i = 0; i < cols; ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += x[r * cols + i] * y[r];
    ne.rhs[i] = s;
  }
  for (std::size_t i = 0; i < cols; ++i) {
    for (std::size_t j = i; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < rows; ++r) s += x[r * cols + i] * x[r * cols + j];
      ne.gram[i * cols + j] = s;
      ne.gram[j * cols + i] = s;
    }
  }
  return ne;
}

}  // namespace derd::kernels
