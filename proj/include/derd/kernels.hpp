#pragma once

// Data-parallel kernels. Each OpenMP kernel has a serial twin that the tests
// and the benchmark compare against; both produce bit-identical results
// because the parallel versions only split independent outputs or integer
// reductions.

#include <cstdint>
#include <span>
#include <vector>

#include "derd/energy_model.hpp"

namespace derd::kernels {

/// Sum of squared differences between two equally sized sample arrays.
std::uint64_t sse(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
std::uint64_t sseSerial(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Full-stream estimate for every entry.
std::vector<double> estimateBatch(const SpecificEnergyProfile& profile,
                                  std::span<const FeatureCounts> counts);
std::vector<double> estimateBatchSerial(const SpecificEnergyProfile& profile,
                                        std::span<const FeatureCounts> counts);

/// Normal equations of a row-major design matrix X (rows x cols) against y:
/// gram = X^T X (row-major cols x cols), rhs = X^T y.
struct NormalEquations {
  std::size_t cols = 0;
  std::vector<double> gram;
  std::vector<double> rhs;
};

NormalEquations normalEquations(std::span<const double> x, std::span<const double> y,
                                std::size_t rows, std::size_t cols);
NormalEquations normalEquationsSerial(std::span<const double> x, std::span<const double> y,
                                      std::size_t rows, std::size_t cols);

}  // namespace derd::kernels
