#pragma once

// Lagrangian costs for the three decision objectives and the lambda laws.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "derd/energy_model.hpp"

namespace derd {

enum class ObjectiveKind : std::uint8_t { RDO = 0, DEDO = 1, DERDO = 2 };

std::string_view toString(ObjectiveKind kind);
/// Accepts "rdo", "dedo", "derdo" in any letter case.
ObjectiveKind parseObjective(std::string_view text);

/// 0.57 * 2^((QP - 12) / 3).
double lambdaRFromQp(int qp);
/// 0.57e7 * 2^((QP - 12) / 3).
double lambdaEFromQp(int qp);

struct Objective {
  ObjectiveKind kind = ObjectiveKind::RDO;
  double lambda_r = 0.0;
  double lambda_e = 0.0;
  SpecificEnergyProfile profile;

  /// Multipliers from the lambda laws at this QP.
  static Objective rdo(int qp, SpecificEnergyProfile profile);
  static Objective dedo(int qp, SpecificEnergyProfile profile);
  static Objective derdo(int qp, SpecificEnergyProfile profile);
  static Objective forKind(ObjectiveKind kind, int qp, SpecificEnergyProfile profile);

  /// RDO needs lambda_e == 0, DEDO lambda_r == 0, DERDO lambda_r > 0 and
  /// lambda_e >= 0. Throws std::invalid_argument otherwise.
  void validate() const;
};

struct CostBreakdown {
  double distortion = 0.0;  // sum of squared errors
  double bits = 0.0;
  double energy_j = 0.0;
  double rate_term = 0.0;    // lambda_r * bits
  double energy_term = 0.0;  // lambda_e * energy_j
  double cost = 0.0;         // (distortion + rate_term) + energy_term
};

/// Cost of a candidate from its distortion, rate and block-level count
/// delta. The energy excludes the per-stream constants.
CostBreakdown evaluateCandidate(double distortion, double bits, const FeatureCounts& delta,
                                const Objective& objective);
CostBreakdown evaluateCost(double distortion, double bits, double energy_j,
                           const Objective& objective);

/// Index of the cheapest entry; the earliest one wins ties. Throws
/// std::invalid_argument on an empty list.
std::size_t selectBest(std::span<const CostBreakdown> candidates);

}  // namespace derd
