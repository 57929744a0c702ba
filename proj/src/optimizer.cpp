#include "derd/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "derd/quant.hpp"

namespace derd {

std::string_view toString(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::RDO: return "rdo";
    case ObjectiveKind::DEDO: return "dedo";
    case ObjectiveKind::DERDO: return "derdo";
  }
  return "?";
}

ObjectiveKind parseObjective(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "rdo") return ObjectiveKind::RDO;
  if (lower == "dedo") return ObjectiveKind::DEDO;
  if (lower == "derdo") return ObjectiveKind::DERDO;
  throw std::invalid_argument("unknown objective '" + std::string(text) + "'");
}

double lambdaRFromQp(int qp) {
  quant::requireQp(qp);
  return 0.57 * std::exp2((qp - 12) / 3.0);
}

double lambdaEFromQp(int qp) {
  quant::requireQp(qp);
  return 0.57e7 * std::exp2((qp - 12) / 3.0);
}

Objective Objective::rdo(int qp, SpecificEnergyProfile profile) {
  return {ObjectiveKind::RDO, lambdaRFromQp(qp), 0.0, std::move(profile)};
}

Objective Objective::dedo(int qp, SpecificEnergyProfile profile) {
  return {ObjectiveKind::DEDO, 0.0, lambdaEFromQp(qp), std::move(profile)};
}

Objective Objective::derdo(int qp, SpecificEnergyProfile profile) {
  return {ObjectiveKind::DERDO, lambdaRFromQp(qp), lambdaEFromQp(qp), std::move(profile)};
}

Objective Objective::forKind(ObjectiveKind kind, int qp, SpecificEnergyProfile profile) {
  switch (kind) {
    case ObjectiveKind::RDO: return rdo(qp, std::move(profile));
    case ObjectiveKind::DEDO: return dedo(qp, std::move(profile));
    case ObjectiveKind::DERDO: return derdo(qp, std::move(profile));
  }
  throw std::invalid_argument("bad objective kind");
}

void Objective::validate() const {
  if (!std::isfinite(lambda_r) || !std::isfinite(lambda_e) || lambda_r < 0.0 || lambda_e < 0.0)
    throw std::invalid_argument("Lagrange multipliers must be finite and non-negative");
  switch (kind) {
    case ObjectiveKind::RDO:
      if (lambda_e != 0.0) throw std::invalid_argument("RDO requires lambda_e = 0");
      break;
    case ObjectiveKind::DEDO:
      if (lambda_r != 0.0) throw std::invalid_argument("DEDO requires lambda_r = 0");
      break;
    case ObjectiveKind::DERDO:
      if (lambda_r <= 0.0) throw std::invalid_argument("DERDO requires lambda_r > 0");
      break;
  }
  profile.validate();
}

CostBreakdown evaluateCost(double distortion, double bits, double energy_j,
                           const Objective& objective) {
  CostBreakdown c;
  c.distortion = distortion;
  c.bits = bits;
  c.energy_j = energy_j;
  c.rate_term = objective.lambda_r * bits;
  c.energy_term = objective.lambda_e * energy_j;
  c.cost = (distortion + c.rate_term) + c.energy_term;
  return c;
}

CostBreakdown evaluateCandidate(double distortion, double bits, const FeatureCounts& delta,
                                const Objective& objective) {
  return evaluateCost(distortion, bits, estimateBlockEnergy(objective.profile, delta), objective);
}

std::size_t selectBest(std::span<const CostBreakdown> candidates) {
  if (candidates.empty()) throw std::invalid_argument("no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].cost < candidates[best].cost) best = i;
  return best;
}

}  // namespace derd
