#pragma once

// CTU-level QP search under the energy-distortion objective. For every
// energy multiplier each 32x32 CTU is coded at every QP of a window and the
// cheapest QP is kept; the chosen QPs form a histogram per multiplier.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "derd/energy_model.hpp"
#include "derd/frame.hpp"

namespace derd {

struct LambdaGridPoint {
  double lambda_e = 0.0;
  int center_qp = 0;  // window centre
};

/// Eleven multipliers 2.85e6 * 2^((q - 12) / 3) for q = 5, 9, ..., 45,
/// spanning 5.65e5 to 5.84e9, each centred on its q.
std::vector<LambdaGridPoint> defaultLambdaGrid();

struct QpSearchConfig {
  std::vector<LambdaGridPoint> grid = defaultLambdaGrid();
  int half_window = 5;
  /// Search all of [0, 51] instead of centre +- half_window.
  bool full_window = false;
  SpecificEnergyProfile profile = syntheticDefaultProfile();
  int jobs = 1;
};

struct QpSequence {
  std::string label;
  std::vector<Frame> frames;
};

struct QpHistogram {
  double lambda_e = 0.0;
  int window_lo = 0;
  int window_hi = 0;
  std::map<int, long long> counts;  // chosen QP -> number of CTUs
  long long total = 0;

  double frequency(int qp) const;
  /// Most frequent QP; the lower one on ties.
  int dominant() const;
};

struct QpSearchResult {
  std::vector<QpHistogram> aggregate;  // one per grid point, all sequences
  std::map<std::string, std::vector<QpHistogram>> per_sequence;
  /// Least-squares slope of log2(lambda_e) against the dominant QP.
  double slope = 0.0;
};

/// Throws std::invalid_argument for an empty sequence set or grid.
QpSearchResult qpSearchExperiment(std::span<const QpSequence> sequences, const QpSearchConfig& config);

/// Slope of the least-squares line through (x_i, y_i).
double olsSlope(std::span<const double> x, std::span<const double> y);

/// Rows "scope,lambda_e,qp,relative_frequency"; scope is "all" or a label.
void writeQpHistogramCsv(const QpSearchResult& result, const std::filesystem::path& path);

}  // namespace derd
