#include "derd/qp_search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "derd/codec.hpp"
#include "derd/optimizer.hpp"
#include "derd/quant.hpp"

namespace derd {

namespace {

constexpr int kCtu = 32;

struct Window {
  int lo = 0;
  int hi = 0;
};

Window windowFor(const LambdaGridPoint& p, const QpSearchConfig& cfg) {
  if (cfg.full_window) return {quant::kMinQp, quant::kMaxQp};
  return {std::max(quant::kMinQp, p.center_qp - cfg.half_window),
          std::min(quant::kMaxQp, p.center_qp + cfg.half_window)};
}

// Chosen QP of every CTU of one frame, coded greedily in raster order so
// later CTUs predict from the winners.
std::vector<int> searchFrame(const Frame& frame, double lambda_e, Window w,
                             const SpecificEnergyProfile& profile) {
  FrameEncoder enc(frame);
  std::vector<int> chosen;
  std::vector<Objective> objectives;
  for (int qp = w.lo; qp <= w.hi; ++qp) {
    Objective o;
    o.kind = ObjectiveKind::DEDO;
    o.lambda_e = lambda_e;
    o.profile = profile;
    objectives.push_back(std::move(o));
  }
  for (int y = 0; y < frame.height; y += kCtu)
    for (int x = 0; x < frame.width; x += kCtu) {
      int best = w.lo;
      double bestCost = std::numeric_limits<double>::infinity();
      for (int qp = w.lo; qp <= w.hi; ++qp) {
        const double c = enc.tryCtu(x, y, qp, objectives[static_cast<std::size_t>(qp - w.lo)]).cost;
        if (c < bestCost) {
          bestCost = c;
          best = qp;
        }
      }
      enc.encodeCtu(x, y, best, objectives[static_cast<std::size_t>(best - w.lo)]);
      chosen.push_back(best);
    }
  return chosen;
}

}  // namespace

std::vector<LambdaGridPoint> defaultLambdaGrid() {
  std::vector<LambdaGridPoint> g;
  for (int q = 5; q <= 45; q += 4) g.push_back({2.85e6 * std::exp2((q - 12) / 3.0), q});
  return g;
}

double QpHistogram::frequency(int qp) const {
  if (total == 0) return 0.0;
  const auto it = counts.find(qp);
  return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

int QpHistogram::dominant() const {
  int best = window_lo;
  long long n = -1;
  for (const auto& [qp, c] : counts)
    if (c > n) {
      n = c;
      best = qp;
    }
  return best;
}

double olsSlope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope needs two or more points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / sxx;
}

QpSearchResult qpSearchExperiment(std::span<const QpSequence> sequences, const QpSearchConfig& config) {
  if (sequences.empty()) throw std::invalid_argument("QP search needs at least one sequence");
  if (config.grid.empty()) throw std::invalid_argument("QP search needs a lambda grid");
  for (const auto& s : sequences)
    if (s.frames.empty()) throw std::invalid_argument("sequence " + s.label + " has no frames");
  config.profile.validate();

  struct Job {
    std::size_t seq, frame, point;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < sequences.size(); ++s)
    for (std::size_t f = 0; f < sequences[s].frames.size(); ++f)
      for (std::size_t p = 0; p < config.grid.size(); ++p) jobs.push_back({s, f, p});

  std::vector<std::vector<int>> chosen(jobs.size());
  const int threads = std::max(1, config.jobs);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& j = jobs[i];
    const auto& pt = config.grid[j.point];
    chosen[i] = searchFrame(sequences[j.seq].frames[j.frame], pt.lambda_e, windowFor(pt, config),
                            config.profile);
  }

  auto empty = [&] {
    std::vector<QpHistogram> h;
    for (const auto& pt : config.grid) {
      const Window w = windowFor(pt, config);
      h.push_back({pt.lambda_e, w.lo, w.hi, {}, 0});
    }
    return h;
  };
  QpSearchResult r;
  r.aggregate = empty();
  for (const auto& s : sequences) r.per_sequence.emplace(s.label, empty());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& seq = r.per_sequence[sequences[jobs[i].seq].label][jobs[i].point];
    auto& all = r.aggregate[jobs[i].point];
    for (const int qp : chosen[i]) {
      ++seq.counts[qp];
      ++seq.total;
      ++all.counts[qp];
      ++all.total;
    }
  }
  std::vector<double> qps, logs;
  for (const auto& h : r.aggregate) {
    qps.push_back(h.dominant());
    logs.push_back(std::log2(h.lambda_e));
  }
  r.slope = qps.size() >= 2 ? olsSlope(qps, logs) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

void writeQpHistogramCsv(const QpSearchResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "scope,lambda_e,qp,relative_frequency\n";
  auto emit = [&](const std::string& scope, const std::vector<QpHistogram>& hs) {
    for (const auto& h : hs)
      for (int qp = h.window_lo; qp <= h.window_hi; ++qp)
        out << scope << ',' << h.lambda_e << ',' << qp << ',' << h.frequency(qp) << '\n';
  };
  emit("all", result.aggregate);
  for (const auto& [label, hs] : result.per_sequence) emit(label, hs);
}

}  // namespace derd
