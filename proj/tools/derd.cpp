#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "derd/bitstream.hpp"
#include "derd/codec.hpp"
#include "derd/energy_model.hpp"
#include "derd/harness.hpp"
#include "derd/metrics.hpp"
#include "derd/qp_search.hpp"

namespace fs = std::filesystem;
using namespace derd;

namespace {

constexpr int kExitProfile = 2;

struct ProfileMissing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --profile, then DERD_PROFILE, then the built-in profile.
std::optional<fs::path> profilePath(const std::string& flag) {
  if (!flag.empty()) return fs::path(flag);
  if (const char* env = std::getenv("DERD_PROFILE"); env && *env) return fs::path(env);
  return std::nullopt;
}

SpecificEnergyProfile resolveProfile(const std::optional<fs::path>& path) {
  if (!path) return syntheticDefaultProfile();
  if (!fs::exists(*path)) throw ProfileMissing("profile not found: " + path->string());
  try {
    return loadProfile(*path);
  } catch (const std::exception& e) {
    throw ProfileMissing("cannot read profile " + path->string() + ": " + e.what());
  }
}

void writeDecisions(const std::vector<DecisionRecord>& log, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "frame,x,y,size,component,objective,qp,mode,transform_skip,distortion,bits,energy_j,cost\n";
  for (const auto& d : log)
    out << d.frame << ',' << d.x << ',' << d.y << ',' << d.size << ',' << d.component << ','
        << toString(d.objective) << ',' << d.qp << ',' << d.mode << ',' << (d.transform_skip ? 1 : 0) << ','
        << d.distortion << ',' << d.bits << ',' << d.energy_j << ',' << d.cost << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-aware intra codec and evaluation harness"};
  app.require_subcommand(1);

  std::string input, out, profileFlag, objective = "rdo";
  int width = 0, height = 0, frames = 0, qp = 25, jobs = 1;
  double fps = 30.0;
  std::optional<double> lambdaE;
  std::uint64_t seed = 1;
  bool fullWindow = false, nonNegative = false;

  auto* enc = app.add_subcommand("encode", "Encode a .yuv/.pgm/.ppm input");
  enc->add_option("--input", input)->required();
  enc->add_option("--width", width);
  enc->add_option("--height", height);
  enc->add_option("--frames", frames, "Frames to read, 0 for all");
  enc->add_option("--fps", fps);
  enc->add_option("--qp", qp)->check(CLI::Range(0, 51));
  enc->add_option("--objective", objective)->check(CLI::IsMember({"rdo", "dedo", "derdo"}, CLI::ignore_case));
  enc->add_option("--profile", profileFlag);
  enc->add_option("--lambda-e", lambdaE, "Override the energy multiplier");
  enc->add_option("--out", out)->required();

  auto* dec = app.add_subcommand("decode", "Decode a bitstream to raw 4:2:0");
  dec->add_option("--input", input)->required();
  dec->add_option("--out", out)->required();

  auto* eval = app.add_subcommand("evaluate", "Encode a corpus at a QP ladder and report BD metrics");
  eval->add_option("--input", input, "Experiment config JSON")->required();
  eval->add_option("--profile", profileFlag);
  eval->add_option("--out", out, "Output directory (overrides config)");
  eval->add_option("--jobs", jobs);

  auto* lam = app.add_subcommand("lambda-experiment", "CTU-level QP search over an energy-multiplier grid");
  lam->add_option("--input", input, "Experiment config JSON")->required();
  lam->add_option("--profile", profileFlag);
  lam->add_option("--lambda-e", lambdaE, "Run a single multiplier, centred on its QP");
  lam->add_option("--out", out, "Histogram CSV")->required();
  lam->add_option("--jobs", jobs);
  lam->add_flag("--full-window", fullWindow, "Search all QPs");

  auto* fit = app.add_subcommand("fit-profile", "Least-squares profile from feature logs and energies");
  fit->add_option("--input", input, "CSV with columns feature_log,energy_j")->required();
  fit->add_option("--out", out)->required();
  fit->add_flag("--non-negative", nonNegative);

  auto* gen = app.add_subcommand("gen-corpus", "Write the synthetic corpus");
  gen->add_option("--out", out)->required();
  gen->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*enc) {
      const SpecificEnergyProfile profile = resolveProfile(profilePath(profileFlag));
      const auto pictures = loadPictures(input, width, height, frames);
      EncoderConfig cfg;
      cfg.qp = qp;
      cfg.objective = Objective::forKind(parseObjective(objective), qp, profile);
      if (lambdaE) cfg.objective.lambda_e = *lambdaE;
      cfg.record_decisions = true;
      const EncodeResult r = encodeSequence(pictures, cfg);
      writeBitstream(r.stream, out);
      writeDecisions(r.decisions, out + ".decisions.csv");
      saveFeatureLog(r.counts, out + ".features.json");
      const PsnrYuv p = psnrYuv(pictures, r.reconstructions);
      const double bits = streamBits(r.stream);
      const double energy = estimateDecodingEnergy(profile, r.counts);
      const auto se = streamingEnergy({qp, bits, p.yuv, energy}, {}, fps, static_cast<std::int64_t>(pictures.size()));
      std::cout << "frames " << pictures.size() << "  bits " << bits << "  psnr_yuv "
                << (p.lossless ? std::string("lossless") : std::to_string(p.yuv)) << "  energy_j(est) " << energy
                << "  streaming_j " << se.total_j << '\n';
      if (energy < 0) std::cerr << "warning: negative energy estimate, check the profile\n";
    } else if (*dec) {
      const DecodeResult r = decodeStream(readBitstream(input));
      writeYuv420(out, r.frames);
      saveFeatureLog(r.counts, out + ".features.json");
      std::cout << "frames " << r.frames.size() << '\n';
    } else if (*eval) {
      ExperimentConfig cfg = loadExperimentConfig(input);
      if (const auto p = profilePath(profileFlag)) cfg.profile_path = *p;
      const SpecificEnergyProfile profile = resolveProfile(cfg.profile_path);
      if (!out.empty()) cfg.output_dir = out;
      if (eval->count("--jobs")) cfg.jobs = jobs;
      const EvaluationResult r = evaluate(cfg, profile);
      writeEvaluation(r, cfg.output_dir);
      std::cout << r.bd_report["average"].dump(2) << '\n';
      for (const auto& row : r.rows)
        if (!row.round_trip) {
          std::cerr << "round trip mismatch: " << row.label << ' ' << toString(row.objective) << ' ' << row.qp << '\n';
          return 1;
        }
    } else if (*lam) {
      ExperimentConfig cfg = loadExperimentConfig(input);
      if (const auto p = profilePath(profileFlag)) cfg.profile_path = *p;
      QpSearchConfig qs;
      qs.profile = resolveProfile(cfg.profile_path);
      qs.grid = cfg.lambda_grid;
      if (lambdaE) {
        const int centre = static_cast<int>(std::lround(12 + 3 * std::log2(*lambdaE / 2.85e6)));
        qs.grid = {{*lambdaE, std::clamp(centre, 0, 51)}};
      }
      qs.full_window = fullWindow;
      qs.jobs = lam->count("--jobs") ? jobs : cfg.jobs;
      std::vector<QpSequence> seqs;
      for (const auto& e : cfg.corpus) seqs.push_back({e.label, loadCorpusEntry(e)});
      const QpSearchResult r = qpSearchExperiment(seqs, qs);
      writeQpHistogramCsv(r, out);
      for (const auto& h : r.aggregate) std::cout << "lambda_e " << h.lambda_e << "  dominant QP " << h.dominant() << '\n';
      std::cout << "slope log2(lambda_e)/QP " << r.slope << '\n';
    } else if (*fit) {
      std::ifstream in(input);
      if (!in) throw std::runtime_error("cannot read " + input);
      std::string line;
      std::getline(in, line);
      if (line != "feature_log,energy_j") throw std::runtime_error("expected header feature_log,energy_j");
      std::vector<FitSample> samples;
      const fs::path base = fs::path(input).parent_path();
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) throw std::runtime_error("malformed row: " + line);
        fs::path log = line.substr(0, comma);
        if (log.is_relative()) log = base / log;
        samples.push_back({loadFeatureLog(log), std::stod(line.substr(comma + 1))});
      }
      FitOptions opt;
      opt.non_negative = nonNegative;
      EnergyProfileFit f = fitProfile(samples, opt);
      f.profile.name = "fitted";
      f.profile.provenance = "least-squares fit of " + std::to_string(samples.size()) + " samples from " + input;
      saveProfile(f.profile, out);
      std::cout << "rank " << f.rank << "  mean relative error " << f.meanRelativeError() << '\n';
      for (const auto& u : f.unidentifiable) std::cerr << "warning: unidentifiable parameter " << u << '\n';
    } else if (*gen) {
      const ExperimentConfig cfg = generateCorpus(out, seed);
      std::cout << cfg.corpus.size() << " pictures written to " << out << '\n';
    }
  } catch (const ProfileMissing& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitProfile;
  } catch (const FitError& e) {
    std::cerr << "error: " << e.what();
    for (const auto& p : e.parameters()) std::cerr << ' ' << p;
    std::cerr << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
