#include <random>

#include "derd/codec.hpp"
#include "derd/harness.hpp"
#include "derd/intra.hpp"
#include "derd/optimizer.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace derd;

namespace {

EncodeResult encode(const Frame& f, const Objective& o, int qp) {
  EncoderConfig cfg;
  cfg.qp = qp;
  cfg.objective = o;
  cfg.record_decisions = true;
  return encodeSequence(std::span(&f, 1), cfg);
}

bool sameDecisions(const std::vector<DecisionRecord>& a, const std::vector<DecisionRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].x != b[i].x || a[i].y != b[i].y || a[i].size != b[i].size || a[i].mode != b[i].mode ||
        a[i].transform_skip != b[i].transform_skip || a[i].component != b[i].component)
      return false;
  return true;
}

}  // namespace

TEST_CASE("rate multiplier law") {
  CHECK(lambdaRFromQp(12) == doctest::Approx(0.57).epsilon(1e-15));
  CHECK(lambdaRFromQp(15) == doctest::Approx(1.14).epsilon(1e-15));
  CHECK(lambdaRFromQp(9) == doctest::Approx(0.285).epsilon(1e-15));
  CHECK_THROWS(lambdaRFromQp(-1));
  CHECK_THROWS(lambdaRFromQp(52));
}

TEST_CASE("energy multiplier law") {
  CHECK(lambdaEFromQp(12) == doctest::Approx(5.7e6).epsilon(1e-15));
  CHECK(lambdaEFromQp(45) == doctest::Approx(0.57e7 * 2048).epsilon(1e-15));
  for (int qp = 0; qp <= 51; ++qp)
    CHECK(lambdaEFromQp(qp) / lambdaRFromQp(qp) == doctest::Approx(1e7).epsilon(1e-14));
}

TEST_CASE("objective invariants") {
  const auto p = syntheticDefaultProfile();
  CHECK_NOTHROW(Objective::rdo(20, p).validate());
  CHECK_NOTHROW(Objective::dedo(20, p).validate());
  CHECK_NOTHROW(Objective::derdo(20, p).validate());
  Objective bad = Objective::rdo(20, p);
  bad.lambda_e = 1.0;
  CHECK_THROWS(bad.validate());
  bad = Objective::dedo(20, p);
  bad.lambda_r = 1.0;
  CHECK_THROWS(bad.validate());
  bad = Objective::derdo(20, p);
  bad.lambda_r = 0.0;
  CHECK_THROWS(bad.validate());
  CHECK((parseObjective("DeRdO") == ObjectiveKind::DERDO));
  CHECK_THROWS(parseObjective("fast"));
}

TEST_CASE("cost assembly") {
  const auto p = syntheticDefaultProfile();
  auto o = Objective::derdo(27, p);
  o.lambda_e = 0.0;
  const auto c = evaluateCost(100.0, 37.0, 1e-5, o);
  CHECK(c.cost == 100.0 + o.lambda_r * 37.0);
  CHECK(c.energy_term == 0.0);

  const auto d = evaluateCost(100.0, 37.0, 2e-6, Objective::dedo(27, p));
  CHECK(d.rate_term == 0.0);
  CHECK(d.cost == 100.0 + lambdaEFromQp(27) * 2e-6);

  const auto full = Objective::derdo(27, p);
  const auto e = evaluateCost(100.0, 37.0, 2e-6, full);
  CHECK(e.cost == (100.0 + full.lambda_r * 37.0) + full.lambda_e * 2e-6);
}

TEST_CASE("candidate energy excludes stream constants") {
  const auto p = syntheticDefaultProfile();
  FeatureCounts n;
  n.n_slice = 5;
  n.n_coeff = 3;
  const auto c = evaluateCandidate(0.0, 0.0, n, Objective::dedo(30, p));
  CHECK(c.energy_j == doctest::Approx(3 * p.e_coeff).epsilon(1e-15));
}

TEST_CASE("a transform-skip candidate wins an otherwise equal comparison") {
  const auto p = syntheticDefaultProfile();
  FeatureCounts plain;
  plain.comp(Component::Y, 4) = 1;
  plain.n_coeff = 2;
  FeatureCounts skip = plain;
  skip.n_tsf = 1;
  for (const auto& o : {Objective::dedo(30, p), Objective::derdo(30, p)}) {
    const std::vector<CostBreakdown> cands{evaluateCandidate(50, 12, plain, o), evaluateCandidate(50, 12, skip, o)};
    CHECK(cands[1].cost < cands[0].cost);
    CHECK(selectBest(cands) == 1);
    // Hand evaluation of the energy difference.
    CHECK(cands[0].energy_j - cands[1].energy_j == doctest::Approx(p.e_tsf).epsilon(1e-12));
  }
}

TEST_CASE("selectBest agrees with exhaustive search and keeps the earliest tie") {
  std::mt19937_64 rng(21);
  const auto p = oracle::randomProfile(rng);
  const auto o = Objective::derdo(33, p);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CostBreakdown> cands;
    std::uniform_real_distribution<double> u(0, 1000);
    for (int i = 0; i < 12; ++i) cands.push_back(evaluateCandidate(u(rng), std::floor(u(rng)), oracle::randomCounts(rng, 20), o));
    if (trial % 5 == 0) cands[7] = cands[2];
    std::size_t want = 0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      bool best = true;
      for (std::size_t j = 0; j < cands.size(); ++j)
        if (cands[j].cost < cands[i].cost || (cands[j].cost == cands[i].cost && j < i)) best = false;
      if (best) want = i;
    }
    CHECK(selectBest(cands) == want);
  }
  CHECK_THROWS(selectBest(std::span<const CostBreakdown>{}));
}

TEST_CASE("flat block at high QP: no split, flat prediction, no coefficients") {
  const Frame f(32, 32, 128);
  const auto p = syntheticDefaultProfile();
  for (const auto kind : {ObjectiveKind::RDO, ObjectiveKind::DEDO, ObjectiveKind::DERDO}) {
    const auto r = encode(f, Objective::forKind(kind, 45, p), 45);
    REQUIRE(r.decisions.size() == 1);
    CHECK(r.decisions[0].size == 32);
    CHECK(r.counts.n_coeff == 0);
    // Planar and DC both predict the flat block exactly; the rate objective
    // prefers planar (first most probable mode), the energy objectives DC.
    if (kind == ObjectiveKind::RDO)
      CHECK(r.decisions[0].mode == intra::kPlanar);
    else
      CHECK(r.decisions[0].mode == intra::kDc);
  }
}

TEST_CASE("costly transforms push the energy objective to skip or drop residuals") {
  auto p = syntheticDefaultProfile();
  for (auto& row : p.e_comp_size)
    for (auto& v : row) v = 100.0;
  const Frame f = generatePattern(PatternKind::Text, 64, 64, 8);
  const auto r = encode(f, Objective::dedo(25, p), 25);
  std::int64_t transforms = 0;
  for (const auto& row : r.counts.n_comp_size)
    for (const auto v : row) transforms += v;
  CHECK(transforms - r.counts.n_tsf == 0);
  const auto base = encode(f, Objective::dedo(25, syntheticDefaultProfile()), 25);
  std::int64_t baseTransforms = 0;
  for (const auto& row : base.counts.n_comp_size)
    for (const auto v : row) baseTransforms += v;
  CHECK(baseTransforms > 0);
}

TEST_CASE("energy-rate objective with zero energy weight reproduces RDO") {
  const auto p = syntheticDefaultProfile();
  for (const auto kind : {PatternKind::Gradient, PatternKind::Text, PatternKind::Noise})
    for (int qp : {15, 32, 45}) {
      const Frame f = generatePattern(kind, 96, 64, 30 + static_cast<int>(kind));
      auto d = Objective::derdo(qp, p);
      d.lambda_e = 0.0;
      const auto a = encode(f, Objective::rdo(qp, p), qp);
      const auto b = encode(f, d, qp);
      CHECK(a.stream.sameCodedContent(b.stream));
      CHECK(sameDecisions(a.decisions, b.decisions));
    }
}

TEST_CASE("scaling the profile against the energy weight leaves decisions unchanged") {
  const auto p = syntheticDefaultProfile();
  const Frame f = generatePattern(PatternKind::Noise, 96, 64, 44);
  for (const double k : {4.0, 0.125}) {
    for (const auto kind : {ObjectiveKind::DEDO, ObjectiveKind::DERDO}) {
      const auto base = Objective::forKind(kind, 30, p);
      Objective scaled = Objective::forKind(kind, 30, p.scaled(k));
      scaled.lambda_e = base.lambda_e / k;
      const auto a = encode(f, base, 30);
      const auto b = encode(f, scaled, 30);
      CHECK(a.stream.sameCodedContent(b.stream));
    }
  }
}

TEST_CASE("energy and rate ordering between objectives at equal QP") {
  const auto p = syntheticDefaultProfile();
  double eR = 0, eD = 0, eDR = 0, rR = 0, rD = 0, rDR = 0;
  for (const auto kind : {PatternKind::Gradient, PatternKind::Text, PatternKind::Noise})
    for (int qp : {20, 35}) {
      const Frame f = generatePattern(kind, 96, 64, 50 + static_cast<int>(kind));
      const auto a = encode(f, Objective::rdo(qp, p), qp);
      const auto b = encode(f, Objective::dedo(qp, p), qp);
      const auto c = encode(f, Objective::derdo(qp, p), qp);
      eR += estimateDecodingEnergy(p, a.counts);
      eD += estimateDecodingEnergy(p, b.counts);
      eDR += estimateDecodingEnergy(p, c.counts);
      rR += streamBits(a.stream);
      rD += streamBits(b.stream);
      rDR += streamBits(c.stream);
    }
  CHECK(eD <= eDR);
  CHECK(eDR <= eR);
  CHECK(rR <= rDR);
  CHECK(rR <= rD);
}
