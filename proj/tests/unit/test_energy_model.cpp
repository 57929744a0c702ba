#include <filesystem>
#include <fstream>

#include "derd/energy_model.hpp"
#include "derd/kernels.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace derd;

namespace {

SpecificEnergyProfile zeroProfile() {
  SpecificEnergyProfile p;
  p.name = "zero";
  return p;
}

}  // namespace

TEST_CASE("estimate: offset only") {
  auto p = zeroProfile();
  p.e0 = 1.0;
  CHECK(estimateDecodingEnergy(p, FeatureCounts{}) == 1.0);
}

TEST_CASE("estimate: slice term") {
  auto p = zeroProfile();
  p.e0 = 1.0;
  p.e_slice = 2.0;
  FeatureCounts n;
  n.n_slice = 3;
  CHECK(estimateDecodingEnergy(p, n) == 7.0);
}

TEST_CASE("estimate: transform skip is subtracted") {
  auto p = zeroProfile();
  p.e_tsf = 0.5;
  FeatureCounts n;
  n.n_tsf = 2;
  CHECK(estimateDecodingEnergy(p, n) == -1.0);
}

TEST_CASE("estimate: magnitude term") {
  auto p = zeroProfile();
  p.e_val = 1.0;
  FeatureCounts n;
  n.n_coeff = 1;
  n.n_g1 = 1;
  n.sum_log2_val = std::log2(4.0);
  CHECK(estimateDecodingEnergy(p, n) == 2.0);
}

TEST_CASE("estimate matches the term-by-term oracle") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto p = oracle::randomProfile(rng);
    const auto n = oracle::randomCounts(rng);
    CHECK(oracle::relativeError(estimateDecodingEnergy(p, n), oracle::energy(p, n)) < 1e-12);
  }
}

TEST_CASE("block estimate drops the stream constants") {
  std::mt19937_64 rng(12);
  const auto p = oracle::randomProfile(rng);
  const auto n = oracle::randomCounts(rng);
  const double full = estimateDecodingEnergy(p, n);
  const double block = estimateBlockEnergy(p, n);
  CHECK(full - block == doctest::Approx(p.e0 + p.e_slice * static_cast<double>(n.n_slice)).epsilon(1e-12));
}

TEST_CASE("accumulate is elementwise and the estimate is linear") {
  std::mt19937_64 rng(13);
  const auto p = oracle::randomProfile(rng);
  const auto a = oracle::randomCounts(rng);
  const auto b = oracle::randomCounts(rng);
  CHECK(accumulate(a, FeatureCounts{}) == a);
  FeatureCounts one;
  one.n_coeff = 1;
  CHECK(accumulate(one, one).n_coeff == 2);
  const auto s = accumulate(a, b);
  CHECK(s.n_csbf == a.n_csbf + b.n_csbf);
  CHECK(s.n_comp_size[2][3] == a.n_comp_size[2][3] + b.n_comp_size[2][3]);
  const double lhs = estimateDecodingEnergy(p, s) + p.e0;
  const double rhs = estimateDecodingEnergy(p, a) + estimateDecodingEnergy(p, b);
  CHECK(oracle::relativeError(lhs, rhs) < 1e-12);
}

TEST_CASE("monotone in every count, anti-monotone in n_tsf") {
  std::mt19937_64 rng(14);
  const auto p = oracle::randomProfile(rng);
  auto n = oracle::randomCounts(rng, 1000);
  const double base = estimateDecodingEnergy(p, n);
  auto bump = [&](auto mutate) {
    FeatureCounts m = n;
    mutate(m);
    return estimateDecodingEnergy(p, m);
  };
  CHECK(bump([](FeatureCounts& m) { ++m.n_slice; }) >= base);
  CHECK(bump([](FeatureCounts& m) { ++m.n_coeff; }) >= base);
  CHECK(bump([](FeatureCounts& m) { ++m.n_csbf; }) >= base);
  CHECK(bump([](FeatureCounts& m) { ++m.n_nompm; }) >= base);
  CHECK(bump([](FeatureCounts& m) { ++m.mode(ModeClass::Angular, 16); }) >= base);
  CHECK(bump([](FeatureCounts& m) { ++m.comp(Component::V, 4); }) >= base);
  CHECK(bump([](FeatureCounts& m) { ++m.n_tsf; }) <= base);
}

TEST_CASE("structural errors") {
  FeatureCounts n;
  n.n_coeff = -1;
  CHECK_THROWS_AS(estimateDecodingEnergy(zeroProfile(), n), ModelError);
  FeatureCounts g;
  g.n_g1 = 2;
  g.n_coeff = 1;
  CHECK_THROWS_AS(g.validate(), ModelError);
  auto p = zeroProfile();
  p.e_g1 = -1.0;
  CHECK_THROWS_AS(p.validate(), ModelError);
  p.e_g1 = std::nan("");
  CHECK_THROWS_AS(p.validate(), ModelError);
}

TEST_CASE("scaled profile scales every energy") {
  const auto p = syntheticDefaultProfile();
  const auto q = p.scaled(3.0);
  CHECK(q.e0 == 3.0 * p.e0);
  CHECK(q.e_tsf == 3.0 * p.e_tsf);
  CHECK(q.comp(Component::U, 32) == 3.0 * p.comp(Component::U, 32));
}

TEST_CASE("profile and feature log serialization round trip exactly") {
  std::mt19937_64 rng(15);
  const auto p = oracle::randomProfile(rng);
  const auto n = oracle::randomCounts(rng);
  CHECK(profileFromJson(toJson(p)) == p);
  CHECK(countsFromJson(toJson(n)) == n);
  const auto dir = std::filesystem::temp_directory_path() / "derd_unit_profile";
  std::filesystem::create_directories(dir);
  saveProfile(p, dir / "p.json");
  CHECK(loadProfile(dir / "p.json") == p);
  saveFeatureLog(n, dir / "n.json");
  CHECK(loadFeatureLog(dir / "n.json") == n);
}

TEST_CASE("profile json rejects unknown and missing keys") {
  auto j = toJson(syntheticDefaultProfile());
  auto extra = j;
  extra["e_bogus"] = 1.0;
  CHECK_THROWS_AS(profileFromJson(extra), ModelError);
  auto missing = j;
  missing.erase("e_g1");
  CHECK_THROWS_AS(profileFromJson(missing), ModelError);
  auto badSize = j;
  badSize["e_mode_size"]["DC"].erase("8");
  CHECK_THROWS_AS(profileFromJson(badSize), ModelError);
}

TEST_CASE("shipped profile file equals the built-in profile") {
  const auto path = std::filesystem::path(DERD_SOURCE_DIR) / "data/profiles/synthetic_default.json";
  CHECK(loadProfile(path) == syntheticDefaultProfile());
}

TEST_CASE("fit: single free parameter") {
  FitOptions opt;
  for (const auto& name : parameterNames())
    if (name != "e_slice") opt.fixed[name] = 0.0;
  FeatureCounts n;
  n.n_slice = 2;
  const std::vector<FitSample> s{{n, 4.0}};
  const auto fit = fitProfile(s, opt);
  CHECK(fit.profile.e_slice == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(fit.free_parameters == 1);
}

TEST_CASE("fit: noise-free samples recover the truth") {
  std::mt19937_64 rng(16);
  const auto truth = oracle::randomProfile(rng);
  std::vector<FitSample> samples;
  for (int i = 0; i < 120; ++i) {
    auto c = oracle::randomCounts(rng, 5000);
    samples.push_back({c, oracle::energy(truth, c)});
  }
  const auto fit = fitProfile(samples);
  const auto want = toParameters(truth);
  const auto got = toParameters(fit.profile);
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(oracle::relativeError(got[i], want[i]) < 1e-9);
  CHECK(fit.maxRelativeError() < 1e-9);
}

TEST_CASE("fit: noisy samples stay within a few percent") {
  std::mt19937_64 rng(17);
  const auto truth = oracle::randomProfile(rng);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<FitSample> samples;
  for (int i = 0; i < 200; ++i) {
    auto c = oracle::randomCounts(rng, 5000);
    samples.push_back({c, oracle::energy(truth, c) * (1.0 + noise(rng))});
  }
  FitOptions opt;
  opt.non_negative = true;
  const auto fit = fitProfile(samples, opt);
  CHECK(fit.meanRelativeError() < 0.03);
  for (const double v : toParameters(fit.profile)) CHECK(v >= 0.0);
}

TEST_CASE("fit: underdetermined and unidentifiable inputs") {
  std::mt19937_64 rng(18);
  std::vector<FitSample> few;
  for (int i = 0; i < 5; ++i) few.push_back({oracle::randomCounts(rng), 1.0});
  CHECK_THROWS_AS(fitProfile(few), FitError);

  const auto truth = oracle::randomProfile(rng);
  std::vector<FitSample> samples;
  for (int i = 0; i < 80; ++i) {
    auto c = oracle::randomCounts(rng, 5000);
    c.n_nompm = 0;
    samples.push_back({c, oracle::energy(truth, c)});
  }
  const auto fit = fitProfile(samples);
  REQUIRE(fit.unidentifiable.size() == 1);
  CHECK(fit.unidentifiable[0] == "e_nompm");
}

TEST_CASE("parallel kernels agree with their serial twins") {
  std::mt19937_64 rng(19);
  std::vector<std::uint8_t> a(100003), b(a.size());
  for (auto& v : a) v = static_cast<std::uint8_t>(rng());
  for (auto& v : b) v = static_cast<std::uint8_t>(rng());
  CHECK(kernels::sse(a, b) == kernels::sseSerial(a, b));

  const auto p = oracle::randomProfile(rng);
  std::vector<FeatureCounts> counts;
  for (int i = 0; i < 500; ++i) counts.push_back(oracle::randomCounts(rng));
  CHECK(kernels::estimateBatch(p, counts) == kernels::estimateBatchSerial(p, counts));

  const std::size_t rows = 300, cols = 7;
  std::vector<double> x(rows * cols), y(rows);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& v : x) v = u(rng);
  for (auto& v : y) v = u(rng);
  const auto par = kernels::normalEquations(x, y, rows, cols);
  const auto ser = kernels::normalEquationsSerial(x, y, rows, cols);
  CHECK(par.gram == ser.gram);
  CHECK(par.rhs == ser.rhs);
}
