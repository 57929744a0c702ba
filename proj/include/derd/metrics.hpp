#pragma once

// Quality, Bjontegaard-delta and transmission-energy evaluation.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "derd/frame.hpp"

namespace derd {

// PSNR

/// Mean squared error between two planes of equal size.
double planeMse(const Plane& reference, const Plane& reconstruction);
/// 10 log10(255^2 / mse); +infinity for mse == 0.
double psnrFromMse(double mse);
/// (6 Y + U + V) / 8.
double combinePsnrYuv(double y, double u, double v);

struct PsnrYuv {
  double y = 0.0;
  double u = 0.0;
  double v = 0.0;
  /// True when any plane is reproduced exactly; the combined value is then
  /// undefined and the point is left out of BD fits.
  bool lossless = false;
  double yuv = 0.0;  // NaN when lossless
};

/// Per-plane MSE pooled over all frames before conversion to PSNR.
PsnrYuv psnrYuv(std::span<const Frame> reference, std::span<const Frame> reconstruction);
PsnrYuv psnrYuv(const Frame& reference, const Frame& reconstruction);

// Bjontegaard delta

struct RateQualityEnergyPoint {
  int qp = 0;
  double bits = 0.0;
  double psnr_yuv = 0.0;
  double energy_j = 0.0;
};

class BdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BDCurve {
  std::vector<RateQualityEnergyPoint> points;  // sorted by QP

  /// Needs at least four points, strictly monotone finite PSNR and
  /// positive metrics on the requested axis. Throws BdError.
  void validate(bool energy_axis) const;
};

enum class BdAxis { Rate, Energy };

/// Mean percent difference of the test metric over the anchor at equal
/// quality: a cubic fit of log10(metric) against PSNR per curve, integrated
/// exactly over the common PSNR interval, mapped by (10^mean - 1) * 100.
/// Negative values are savings.
double bdDelta(const BDCurve& anchor, const BDCurve& test, BdAxis axis);

/// Same computation on raw (PSNR, metric) samples.
double bdDelta(std::span<const double> anchor_psnr, std::span<const double> anchor_metric,
               std::span<const double> test_psnr, std::span<const double> test_metric);

/// Mean log10 difference behind bdDelta, test minus anchor.
double bdMeanLogDifference(std::span<const double> anchor_psnr, std::span<const double> anchor_metric,
                           std::span<const double> test_psnr, std::span<const double> test_metric);

// Transmission energy

/// Per-bit WiFi energy E_b = a / Th + b, with Th in Mbit/s and E_b in nJ.
struct TransmissionModel {
  long double a = 305.3L;  // nJ * Mbit/s per bit
  long double b = 13.1L;   // nJ per bit

  void validate() const;
  double perBitEnergy(double throughput_mbps) const;
};

double perBitTransmissionEnergy(double throughput_mbps, const TransmissionModel& model = {});

struct StreamingEnergy {
  double throughput_mbps = 0.0;
  double per_bit_nj = 0.0;
  double transmission_j = 0.0;
  double decoding_j = 0.0;
  double total_j = 0.0;
};

/// Throughput R * fps / frames, transmission energy R * E_b, plus the
/// point's decoding energy. A zero-rate stream costs nothing to send.
StreamingEnergy streamingEnergy(const RateQualityEnergyPoint& point, const TransmissionModel& model,
                                double frame_rate, std::int64_t frame_count);

}  // namespace derd
