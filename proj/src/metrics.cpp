#include "derd/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace derd {

namespace {

constexpr double kPeak = 255.0;

void requireSameSize(const Plane& a, const Plane& b) {
  if (a.width != b.width || a.height != b.height || a.samples.size() != b.samples.size())
    throw std::invalid_argument("planes differ in size");
}

std::uint64_t planeSse(const Plane& a, const Plane& b) {
  requireSameSize(a, b);
  std::uint64_t sse = 0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const int d = static_cast<int>(a.samples[i]) - static_cast<int>(b.samples[i]);
    sse += static_cast<std::uint64_t>(d * d);
  }
  return sse;
}

// Least-squares cubic through (x, y), returned lowest order first. The
// abscissa is centred and scaled for conditioning; the polynomial is then
// expressed back in x.
std::array<double, 4> fitCubic(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const double lo = *std::min_element(x.begin(), x.end());
  const double hi = *std::max_element(x.begin(), x.end());
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  Eigen::MatrixXd v(n, 4);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (x[static_cast<std::size_t>(i)] - mid) / half;
    v(i, 0) = 1.0;
    v(i, 1) = t;
    v(i, 2) = t * t;
    v(i, 3) = t * t * t;
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector4d c = v.colPivHouseholderQr().solve(rhs);
  // p(x) = sum c_k ((x - mid) / half)^k, expanded.
  const double s = 1.0 / half;
  const double m = -mid / half;
  std::array<double, 4> p{};
  p[0] = c(0) + c(1) * m + c(2) * m * m + c(3) * m * m * m;
  p[1] = c(1) * s + 2 * c(2) * m * s + 3 * c(3) * m * m * s;
  p[2] = c(2) * s * s + 3 * c(3) * m * s * s;
  p[3] = c(3) * s * s * s;
  return p;
}

double integrate(const std::array<double, 4>& p, double lo, double hi) {
  auto prim = [&](double x) {
    return ((p[3] / 4 * x + p[2] / 3) * x + p[1] / 2) * x * x + p[0] * x;
  };
  return prim(hi) - prim(lo);
}

void validateSamples(std::span<const double> psnr, std::span<const double> metric, const char* which) {
  const std::string name(which);
  if (psnr.size() != metric.size()) throw BdError(name + " curve: PSNR and metric counts differ");
  if (psnr.size() < 4) throw BdError(name + " curve needs at least four points");
  for (std::size_t i = 0; i < psnr.size(); ++i) {
    if (!std::isfinite(psnr[i])) throw BdError(name + " curve has a non-finite PSNR");
    if (!(metric[i] > 0.0) || !std::isfinite(metric[i]))
      throw BdError(name + " curve has a non-positive metric");
  }
  bool up = true, down = true;
  for (std::size_t i = 1; i < psnr.size(); ++i) {
    up = up && psnr[i] > psnr[i - 1];
    down = down && psnr[i] < psnr[i - 1];
  }
  if (!up && !down) throw BdError(name + " curve PSNR is not strictly monotone");
}

}  // namespace

double planeMse(const Plane& reference, const Plane& reconstruction) {
  return static_cast<double>(planeSse(reference, reconstruction)) /
         static_cast<double>(reference.samples.size());
}

double psnrFromMse(double mse) {
  if (mse < 0.0 || !std::isfinite(mse)) throw std::invalid_argument("MSE must be finite and non-negative");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPeak * kPeak / mse);
}

double combinePsnrYuv(double y, double u, double v) { return (6.0 * y + u + v) / 8.0; }

PsnrYuv psnrYuv(std::span<const Frame> reference, std::span<const Frame> reconstruction) {
  if (reference.size() != reconstruction.size() || reference.empty())
    throw std::invalid_argument("PSNR needs equally many reference and reconstructed frames");
  std::array<std::uint64_t, 3> sse{};
  std::array<std::uint64_t, 3> count{};
  for (std::size_t f = 0; f < reference.size(); ++f)
    for (std::size_t c = 0; c < 3; ++c) {
      sse[c] += planeSse(reference[f].planes[c], reconstruction[f].planes[c]);
      count[c] += reference[f].planes[c].samples.size();
    }
  PsnrYuv r;
  std::array<double, 3> p{};
  for (std::size_t c = 0; c < 3; ++c)
    p[c] = psnrFromMse(static_cast<double>(sse[c]) / static_cast<double>(count[c]));
  r.y = p[0];
  r.u = p[1];
  r.v = p[2];
  r.lossless = std::isinf(r.y) || std::isinf(r.u) || std::isinf(r.v);
  r.yuv = r.lossless ? std::numeric_limits<double>::quiet_NaN() : combinePsnrYuv(r.y, r.u, r.v);
  return r;
}

PsnrYuv psnrYuv(const Frame& reference, const Frame& reconstruction) {
  return psnrYuv(std::span(&reference, 1), std::span(&reconstruction, 1));
}

void BDCurve::validate(bool energy_axis) const {
  std::vector<double> psnr, metric;
  for (const auto& p : points) {
    psnr.push_back(p.psnr_yuv);
    metric.push_back(energy_axis ? p.energy_j : p.bits);
  }
  validateSamples(psnr, metric, "BD");
}

double bdMeanLogDifference(std::span<const double> anchor_psnr, std::span<const double> anchor_metric,
                           std::span<const double> test_psnr, std::span<const double> test_metric) {
  validateSamples(anchor_psnr, anchor_metric, "anchor");
  validateSamples(test_psnr, test_metric, "test");
  const auto [aLo, aHi] = std::minmax_element(anchor_psnr.begin(), anchor_psnr.end());
  const auto [tLo, tHi] = std::minmax_element(test_psnr.begin(), test_psnr.end());
  const double lo = std::max(*aLo, *tLo);
  const double hi = std::min(*aHi, *tHi);
  if (!(hi > lo)) throw BdError("curves share no PSNR interval");
  std::vector<double> la, lt;
  for (const double m : anchor_metric) la.push_back(std::log10(m));
  for (const double m : test_metric) lt.push_back(std::log10(m));
  const auto pa = fitCubic(anchor_psnr, la);
  const auto pt = fitCubic(test_psnr, lt);
  return (integrate(pt, lo, hi) - integrate(pa, lo, hi)) / (hi - lo);
}

double bdDelta(std::span<const double> anchor_psnr, std::span<const double> anchor_metric,
               std::span<const double> test_psnr, std::span<const double> test_metric) {
  const double d = bdMeanLogDifference(anchor_psnr, anchor_metric, test_psnr, test_metric);
  return (std::pow(10.0, d) - 1.0) * 100.0;
}

double bdDelta(const BDCurve& anchor, const BDCurve& test, BdAxis axis) {
  const bool energy = axis == BdAxis::Energy;
  std::vector<double> ap, am, tp, tm;
  for (const auto& p : anchor.points) {
    ap.push_back(p.psnr_yuv);
    am.push_back(energy ? p.energy_j : p.bits);
  }
  for (const auto& p : test.points) {
    tp.push_back(p.psnr_yuv);
    tm.push_back(energy ? p.energy_j : p.bits);
  }
  return bdDelta(ap, am, tp, tm);
}

void TransmissionModel::validate() const {
  if (!(a > 0) || !(b > 0) || !std::isfinite(static_cast<double>(a)) || !std::isfinite(static_cast<double>(b)))
    throw std::invalid_argument("transmission model parameters must be positive");
}

double TransmissionModel::perBitEnergy(double throughput_mbps) const {
  validate();
  if (!(throughput_mbps > 0.0) || !std::isfinite(throughput_mbps))
    throw std::invalid_argument("throughput must be positive");
  return static_cast<double>(a / static_cast<long double>(throughput_mbps) + b);
}

double perBitTransmissionEnergy(double throughput_mbps, const TransmissionModel& model) {
  return model.perBitEnergy(throughput_mbps);
}

StreamingEnergy streamingEnergy(const RateQualityEnergyPoint& point, const TransmissionModel& model,
                                double frame_rate, std::int64_t frame_count) {
  if (frame_count <= 0) throw std::invalid_argument("frame count must be positive");
  if (!(frame_rate > 0.0)) throw std::invalid_argument("frame rate must be positive");
  if (point.bits < 0.0) throw std::invalid_argument("negative bit count");
  StreamingEnergy s;
  s.decoding_j = point.energy_j;
  s.throughput_mbps = point.bits * frame_rate / static_cast<double>(frame_count) / 1e6;
  if (point.bits > 0.0) {
    s.per_bit_nj = model.perBitEnergy(s.throughput_mbps);
    s.transmission_j = point.bits * s.per_bit_nj * 1e-9;
  }
  s.total_j = s.decoding_j + s.transmission_j;
  return s;
}

}  // namespace derd
