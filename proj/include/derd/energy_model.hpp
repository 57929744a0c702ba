#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace derd {

enum class ModeClass : std::uint8_t { DC = 0, Planar = 1, Angular = 2 };
enum class Component : std::uint8_t { Y = 0, U = 1, V = 2 };

inline constexpr std::array<int, 4> kBlockSizes{4, 8, 16, 32};
inline constexpr std::size_t kNumSizes = kBlockSizes.size();
inline constexpr std::size_t kNumModeClasses = 3;
inline constexpr std::size_t kNumComponents = 3;

inline constexpr std::array<ModeClass, kNumModeClasses> kModeClasses{
    ModeClass::DC, ModeClass::Planar, ModeClass::Angular};
inline constexpr std::array<Component, kNumComponents> kComponents{
    Component::Y, Component::U, Component::V};

std::string_view toString(ModeClass c);
std::string_view toString(Component c);

/// Index of a block size in kBlockSizes; throws std::invalid_argument otherwise.
std::size_t sizeIndex(int size);

/// Row per mode class (or component), column per block size.
template <class T>
using SizeTable = std::array<std::array<T, kNumSizes>, 3>;

/// Raised when a profile or count record violates its structural contract
/// (missing or unknown keys, negative counts, non-finite energies).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-function decoding energies in joules. The transform-skip energy is
/// stored as a non-negative magnitude; the estimator subtracts it.
struct SpecificEnergyProfile {
  std::string name;
  std::string provenance;

  double e0 = 0.0;
  double e_slice = 0.0;
  SizeTable<double> e_mode_size{};  // [ModeClass][size]
  SizeTable<double> e_comp_size{};  // [Component][size]
  double e_coeff = 0.0;
  double e_g1 = 0.0;
  double e_val = 0.0;
  double e_csbf = 0.0;
  double e_nompm = 0.0;
  double e_tsf = 0.0;

  double& mode(ModeClass c, int size) {
    return e_mode_size[static_cast<std::size_t>(c)][sizeIndex(size)];
  }
  double mode(ModeClass c, int size) const {
    return e_mode_size[static_cast<std::size_t>(c)][sizeIndex(size)];
  }
  double& comp(Component c, int size) {
    return e_comp_size[static_cast<std::size_t>(c)][sizeIndex(size)];
  }
  double comp(Component c, int size) const {
    return e_comp_size[static_cast<std::size_t>(c)][sizeIndex(size)];
  }

  void validate() const;

  /// Every specific energy (including e0) multiplied by k.
  SpecificEnergyProfile scaled(double k) const;

  bool operator==(const SpecificEnergyProfile&) const = default;
};

/// How often each modeled decoder function runs for one stream or one block.
struct FeatureCounts {
  std::int64_t n_slice = 0;
  SizeTable<std::int64_t> n_mode_size{};
  SizeTable<std::int64_t> n_comp_size{};
  std::int64_t n_coeff = 0;
  std::int64_t n_g1 = 0;
  double sum_log2_val = 0.0;
  std::int64_t n_csbf = 0;
  std::int64_t n_nompm = 0;
  std::int64_t n_tsf = 0;

  std::int64_t& mode(ModeClass c, int size) {
    return n_mode_size[static_cast<std::size_t>(c)][sizeIndex(size)];
  }
  std::int64_t& comp(Component c, int size) {
    return n_comp_size[static_cast<std::size_t>(c)][sizeIndex(size)];
  }

  FeatureCounts& operator+=(const FeatureCounts& other);
  bool operator==(const FeatureCounts&) const = default;

  /// Throws ModelError on negative counts, n_g1 > n_coeff, or a log-sum that
  /// is negative, non-finite, or nonzero without any |c| > 1.
  void validate() const;
};

FeatureCounts accumulate(const FeatureCounts& a, const FeatureCounts& b);

/// Linear decoding-energy estimate: offset plus every specific energy times
/// its count, with the transform-skip term subtracted. May be negative for
/// degenerate profiles.
double estimateDecodingEnergy(const SpecificEnergyProfile& profile,
                              const FeatureCounts& counts);

/// Same estimate without the per-stream constants (e0 and the slice term).
/// This is the quantity a block-level decision can influence.
double estimateBlockEnergy(const SpecificEnergyProfile& profile,
                           const FeatureCounts& counts);

// Flat parameter view, used by calibration and the batch kernels. The
// design row carries -n_tsf so that the dot product equals the estimate.
inline constexpr std::size_t kNumEnergyParameters = 32;
using ParameterVector = std::array<double, kNumEnergyParameters>;

const std::array<std::string, kNumEnergyParameters>& parameterNames();
std::size_t parameterIndex(std::string_view name);
ParameterVector toParameters(const SpecificEnergyProfile& profile);
SpecificEnergyProfile fromParameters(const ParameterVector& params,
                                     std::string name = {},
                                     std::string provenance = {});
ParameterVector designRow(const FeatureCounts& counts);

// Calibration.

struct FitSample {
  FeatureCounts counts;
  double measured_j = 0.0;
};

struct FitOptions {
  bool non_negative = false;
  /// Parameters held at a given value instead of being estimated, by name.
  std::map<std::string, double> fixed;
  double rank_tolerance = 1e-10;
  int max_projection_sweeps = 200000;
};

struct EnergyProfileFit {
  SpecificEnergyProfile profile;
  std::vector<double> residuals;                      // estimate - measured
  std::vector<std::optional<double>> relative_errors;  // only for measured > 0
  std::vector<std::string> unidentifiable;  // all-zero columns, left at zero
  std::size_t free_parameters = 0;
  std::size_t rank = 0;
  double condition_number = 0.0;  // of the column-scaled normal matrix
  int projection_sweeps = 0;

  double meanRelativeError() const;
  double maxRelativeError() const;
};

/// Raised for underdetermined or rank-deficient calibration problems.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::vector<std::string> parameters)
      : std::runtime_error(what), parameters_(std::move(parameters)) {}
  const std::vector<std::string>& parameters() const { return parameters_; }

 private:
  std::vector<std::string> parameters_;
};

EnergyProfileFit fitProfile(std::span<const FitSample> samples,
                            const FitOptions& options = {});

// Serialization. Unknown keys are rejected.

nlohmann::json toJson(const SpecificEnergyProfile& profile);
SpecificEnergyProfile profileFromJson(const nlohmann::json& j);
nlohmann::json toJson(const FeatureCounts& counts);
FeatureCounts countsFromJson(const nlohmann::json& j);

SpecificEnergyProfile loadProfile(const std::filesystem::path& path);
void saveProfile(const SpecificEnergyProfile& profile,
                 const std::filesystem::path& path);
FeatureCounts loadFeatureLog(const std::filesystem::path& path);
void saveFeatureLog(const FeatureCounts& counts,
                    const std::filesystem::path& path);

/// Built-in synthetic profile; identical to data/profiles/synthetic_default.json.
SpecificEnergyProfile syntheticDefaultProfile();

}  // namespace derd
