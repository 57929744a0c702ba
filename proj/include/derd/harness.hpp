#pragma once

// Experiment orchestration: corpus generation, configuration, curve
// evaluation with BD reports, and the QP-search experiment driver.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "derd/bitstream.hpp"
#include "derd/energy_model.hpp"
#include "derd/frame.hpp"
#include "derd/metrics.hpp"
#include "derd/optimizer.hpp"
#include "derd/qp_search.hpp"
#include "json.hpp"

namespace derd {

struct CorpusEntry {
  std::filesystem::path path;
  int width = 0;
  int height = 0;
  int frames = 1;
  double fps = 30.0;
  std::string label;
};

struct ExperimentConfig {
  std::vector<CorpusEntry> corpus;
  std::vector<int> qps{15, 25, 35, 45};
  std::vector<ObjectiveKind> objectives{ObjectiveKind::RDO, ObjectiveKind::DEDO, ObjectiveKind::DERDO};
  std::optional<std::filesystem::path> profile_path;  // built-in profile when empty
  std::filesystem::path output_dir = "results";
  std::vector<LambdaGridPoint> lambda_grid = defaultLambdaGrid();
  int jobs = 1;

  /// Paths exist, QPs in range, labels unique, RDO among the objectives.
  void validate() const;
};

/// Relative corpus paths are resolved against base_dir.
ExperimentConfig experimentConfigFromJson(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json toJson(const ExperimentConfig& config);
ExperimentConfig loadExperimentConfig(const std::filesystem::path& path);

// Synthetic corpus

enum class PatternKind { Gradient, Text, Noise };

std::string_view toString(PatternKind kind);
Frame generatePattern(PatternKind kind, int width, int height, std::uint64_t seed);

/// Writes gradient, text and noise pictures at 416x240 and 832x480 as .yuv
/// files plus corpus.json (a loadable ExperimentConfig) into dir.
ExperimentConfig generateCorpus(const std::filesystem::path& dir, std::uint64_t seed);

// Evaluation

struct CurveRow {
  std::string label;
  ObjectiveKind objective = ObjectiveKind::RDO;
  int qp = 0;
  double bits = 0.0;
  PsnrYuv psnr;
  double energy_j = 0.0;  // estimated decoding energy of the decoded stream
  int frames = 1;
  double fps = 30.0;
  bool round_trip = false;  // decoded pictures and counts equal the encoder's
};

struct EvaluationResult {
  std::vector<CurveRow> rows;  // sorted by label, objective, QP
  nlohmann::json bd_report;
  nlohmann::json streaming_report;
};

/// Encodes every (sequence, objective, QP), decodes it back and assembles
/// curves and reports with RDO as the anchor.
EvaluationResult evaluate(const ExperimentConfig& config, const SpecificEnergyProfile& profile,
                          const TransmissionModel& transmission = {});
EvaluationResult evaluate(const ExperimentConfig& config, const std::vector<std::vector<Frame>>& sequences,
                          const SpecificEnergyProfile& profile, const TransmissionModel& transmission = {});

/// curves.csv, one curve_<label>_<objective>.csv per curve, bd_report.json
/// and streaming_report.json.
void writeEvaluation(const EvaluationResult& result, const std::filesystem::path& dir);

/// Columns qp, bits, psnr_yuv, energy_j.
void writeCurveCsv(const std::vector<RateQualityEnergyPoint>& points, const std::filesystem::path& path);
std::vector<RateQualityEnergyPoint> readCurveCsv(const std::filesystem::path& path);

/// Serialized stream size in bits without the audit section.
double streamBits(const Bitstream& stream);

std::vector<Frame> loadCorpusEntry(const CorpusEntry& entry);

}  // namespace derd
