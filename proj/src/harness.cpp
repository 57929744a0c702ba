#include "derd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "derd/codec.hpp"
#include "derd/quant.hpp"

namespace derd {

namespace {

using nlohmann::json;

const std::set<std::string> kConfigKeys{"corpus", "qps", "objectives", "profile", "output_dir",
                                        "lambda_grid", "jobs", "seed"};
const std::set<std::string> kEntryKeys{"path", "width", "height", "frames", "fps", "label"};

void rejectUnknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (!allowed.contains(k)) throw std::invalid_argument("unknown key '" + k + "' in " + where);
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string objectiveName(ObjectiveKind k) {
  std::string s(toString(k));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct CurveKey {
  std::string label;
  ObjectiveKind objective;
  auto operator<=>(const CurveKey&) const = default;
};

BDCurve curveOf(const std::vector<const CurveRow*>& rows, bool streaming, const TransmissionModel& tm) {
  BDCurve c;
  for (const CurveRow* r : rows) {
    RateQualityEnergyPoint p{r->qp, r->bits, r->psnr.yuv, r->energy_j};
    if (streaming) p.energy_j = streamingEnergy(p, tm, r->fps, r->frames).total_j;
    c.points.push_back(p);
  }
  return c;
}

json bdEntry(const BDCurve& anchor, const BDCurve& test, BdAxis axis) {
  try {
    return bdDelta(anchor, test, axis);
  } catch (const BdError& e) {
    return json{{"error", e.what()}};
  }
}

}  // namespace

namespace {

// Everything except the filesystem checks.
void validateFields(const ExperimentConfig& c) {
  if (c.corpus.empty()) throw std::invalid_argument("corpus is empty");
  std::set<std::string> labels;
  for (const auto& e : c.corpus) {
    if (e.label.empty()) throw std::invalid_argument("corpus entry without label");
    if (!labels.insert(e.label).second) throw std::invalid_argument("duplicate label " + e.label);
    if (e.frames < 1) throw std::invalid_argument("frame count must be positive for " + e.label);
    if (!(e.fps > 0)) throw std::invalid_argument("frame rate must be positive for " + e.label);
  }
  if (c.qps.empty()) throw std::invalid_argument("QP list is empty");
  for (const int q : c.qps) quant::requireQp(q);
  if (std::find(c.objectives.begin(), c.objectives.end(), ObjectiveKind::RDO) == c.objectives.end())
    throw std::invalid_argument("RDO is required as the anchor objective");
  for (const auto& g : c.lambda_grid) {
    if (!(g.lambda_e >= 0) || !std::isfinite(g.lambda_e)) throw std::invalid_argument("invalid lambda_e in grid");
    quant::requireQp(g.center_qp);
  }
  if (c.jobs < 1) throw std::invalid_argument("jobs must be positive");
}

}  // namespace

void ExperimentConfig::validate() const {
  validateFields(*this);
  for (const auto& e : corpus)
    if (!std::filesystem::exists(e.path)) throw std::invalid_argument("missing corpus file " + e.path.string());
  if (profile_path && !std::filesystem::exists(*profile_path))
    throw std::invalid_argument("missing profile " + profile_path->string());
}

ExperimentConfig experimentConfigFromJson(const json& j, const std::filesystem::path& base_dir) {
  rejectUnknown(j, kConfigKeys, "experiment config");
  ExperimentConfig c;
  c.corpus.clear();
  for (const auto& e : j.at("corpus")) {
    rejectUnknown(e, kEntryKeys, "corpus entry");
    CorpusEntry ce;
    ce.path = resolve(e.at("path").get<std::string>(), base_dir);
    ce.width = e.at("width").get<int>();
    ce.height = e.at("height").get<int>();
    ce.frames = e.value("frames", 1);
    ce.fps = e.value("fps", 30.0);
    ce.label = e.value("label", ce.path.stem().string());
    c.corpus.push_back(std::move(ce));
  }
  if (j.contains("qps")) c.qps = j["qps"].get<std::vector<int>>();
  if (j.contains("objectives")) {
    c.objectives.clear();
    for (const auto& o : j["objectives"]) c.objectives.push_back(parseObjective(o.get<std::string>()));
  }
  if (j.contains("profile") && !j["profile"].is_null())
    c.profile_path = resolve(j["profile"].get<std::string>(), base_dir);
  if (j.contains("output_dir")) c.output_dir = resolve(j["output_dir"].get<std::string>(), base_dir);
  if (j.contains("lambda_grid")) {
    c.lambda_grid.clear();
    for (const auto& p : j["lambda_grid"]) c.lambda_grid.push_back({p.at("lambda_e").get<double>(), p.at("center_qp").get<int>()});
  }
  c.jobs = j.value("jobs", 1);
  validateFields(c);
  return c;
}

json toJson(const ExperimentConfig& c) {
  json j;
  j["corpus"] = json::array();
  for (const auto& e : c.corpus)
    j["corpus"].push_back({{"path", e.path.generic_string()}, {"width", e.width}, {"height", e.height},
                           {"frames", e.frames}, {"fps", e.fps}, {"label", e.label}});
  j["qps"] = c.qps;
  j["objectives"] = json::array();
  for (const auto o : c.objectives) j["objectives"].push_back(objectiveName(o));
  j["profile"] = c.profile_path ? json(c.profile_path->generic_string()) : json(nullptr);
  j["output_dir"] = c.output_dir.generic_string();
  j["lambda_grid"] = json::array();
  for (const auto& p : c.lambda_grid) j["lambda_grid"].push_back({{"lambda_e", p.lambda_e}, {"center_qp", p.center_qp}});
  j["jobs"] = c.jobs;
  return j;
}

ExperimentConfig loadExperimentConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const ExperimentConfig c = experimentConfigFromJson(json::parse(in), path.parent_path());
  c.validate();
  return c;
}

std::vector<Frame> loadCorpusEntry(const CorpusEntry& e) {
  return loadPictures(e.path, e.width, e.height, e.frames);
}

double streamBits(const Bitstream& stream) {
  Bitstream bare = stream;
  bare.audit.reset();
  return 8.0 * static_cast<double>(bare.serialize().size());
}

EvaluationResult evaluate(const ExperimentConfig& config, const SpecificEnergyProfile& profile,
                          const TransmissionModel& transmission) {
  std::vector<std::vector<Frame>> seqs;
  for (const auto& e : config.corpus) seqs.push_back(loadCorpusEntry(e));
  return evaluate(config, seqs, profile, transmission);
}

EvaluationResult evaluate(const ExperimentConfig& config, const std::vector<std::vector<Frame>>& sequences,
                          const SpecificEnergyProfile& profile, const TransmissionModel& transmission) {
  if (sequences.size() != config.corpus.size()) throw std::invalid_argument("one frame list per corpus entry");
  profile.validate();
  transmission.validate();

  struct Job {
    std::size_t seq;
    ObjectiveKind obj;
    int qp;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < sequences.size(); ++s)
    for (const auto o : config.objectives)
      for (const int q : config.qps) jobs.push_back({s, o, q});

  std::vector<CurveRow> rows(jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, config.jobs))
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& jb = jobs[i];
    const auto& frames = sequences[jb.seq];
    EncoderConfig ec;
    ec.qp = jb.qp;
    ec.objective = Objective::forKind(jb.obj, jb.qp, profile);
    const EncodeResult enc = encodeSequence(frames, ec);
    const DecodeResult dec = decodeStream(Bitstream::parse(enc.stream.serialize()));
    CurveRow& r = rows[i];
    r.label = config.corpus[jb.seq].label;
    r.objective = jb.obj;
    r.qp = jb.qp;
    r.bits = streamBits(enc.stream);
    r.psnr = psnrYuv(frames, dec.frames);
    r.energy_j = estimateDecodingEnergy(profile, dec.counts);
    r.frames = static_cast<int>(frames.size());
    r.fps = config.corpus[jb.seq].fps;
    r.round_trip = dec.frames == enc.reconstructions && dec.counts == enc.counts;
  }
  std::sort(rows.begin(), rows.end(), [](const CurveRow& a, const CurveRow& b) {
    return std::tie(a.label, a.objective, a.qp) < std::tie(b.label, b.objective, b.qp);
  });

  std::map<CurveKey, std::vector<const CurveRow*>> curves;
  for (const auto& r : rows) curves[{r.label, r.objective}].push_back(&r);

  EvaluationResult out;
  json seqReport = json::object();
  std::map<std::string, std::map<std::string, std::vector<double>>> sums;  // objective -> metric -> values
  for (const auto& e : config.corpus) {
    const auto& anchorRows = curves.at({e.label, ObjectiveKind::RDO});
    const BDCurve anchor = curveOf(anchorRows, false, transmission);
    const BDCurve anchorStream = curveOf(anchorRows, true, transmission);
    json entry = json::object();
    for (const auto o : config.objectives) {
      const auto& testRows = curves.at({e.label, o});
      const BDCurve test = curveOf(testRows, false, transmission);
      const BDCurve testStream = curveOf(testRows, true, transmission);
      json m = {{"BDBR", bdEntry(anchor, test, BdAxis::Rate)},
                {"BDDE", bdEntry(anchor, test, BdAxis::Energy)},
                {"BDDE_streaming", bdEntry(anchorStream, testStream, BdAxis::Energy)}};
      for (const char* k : {"BDDE", "BDDE_streaming"}) {
        const std::string savings = std::string(k) + "_savings";
        m[savings] = m[k].is_number() ? json(-m[k].get<double>()) : m[k];
      }
      for (const auto& [k, v] : m.items())
        if (v.is_number()) sums[objectiveName(o)][k].push_back(v.get<double>());
      entry[objectiveName(o)] = m;
    }
    seqReport[e.label] = entry;
  }
  json avg = json::object();
  for (const auto& [o, metrics] : sums)
    for (const auto& [k, vs] : metrics) {
      double s = 0;
      for (const double v : vs) s += v;
      avg[o][k] = s / static_cast<double>(vs.size());
      avg[o]["sequences"] = vs.size();
    }
  out.bd_report = {
      {"anchor", "rdo"},
      {"qps", config.qps},
      {"units", {{"BDBR", "percent"}, {"BDDE", "percent, estimated decoding energy"},
                 {"BDDE_streaming", "percent, estimated decoding plus modeled transmission energy"},
                 {"savings", "negated BD value"}}},
      {"provenance", {{"profile", profile.name}, {"profile_provenance", profile.provenance},
                      {"profile_path", config.profile_path ? config.profile_path->generic_string() : "built-in"},
                      {"energy", "estimated"}}},
      {"sequences", seqReport},
      {"average", avg}};

  json stream = json::array();
  for (const auto& r : rows) {
    const StreamingEnergy se =
        streamingEnergy({r.qp, r.bits, r.psnr.yuv, r.energy_j}, transmission, r.fps, r.frames);
    stream.push_back({{"label", r.label}, {"objective", objectiveName(r.objective)}, {"qp", r.qp},
                      {"bits", r.bits}, {"throughput_mbps", se.throughput_mbps},
                      {"per_bit_nj", se.per_bit_nj}, {"transmission_j", se.transmission_j},
                      {"decoding_j_estimated", se.decoding_j}, {"total_j", se.total_j}});
  }
  out.streaming_report = {
      {"model", {{"a", static_cast<double>(transmission.a)}, {"b", static_cast<double>(transmission.b)},
                 {"per_bit_unit", "nJ"}}},
      {"provenance", out.bd_report["provenance"]},
      {"points", stream}};
  out.rows = std::move(rows);
  return out;
}

void writeCurveCsv(const std::vector<RateQualityEnergyPoint>& points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "qp,bits,psnr_yuv,energy_j\n";
  for (const auto& p : points) out << p.qp << ',' << p.bits << ',' << p.psnr_yuv << ',' << p.energy_j << '\n';
}

std::vector<RateQualityEnergyPoint> readCurveCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "qp,bits,psnr_yuv,energy_j")
    throw std::runtime_error("unexpected curve header in " + path.string());
  std::vector<RateQualityEnergyPoint> pts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream s(line);
    for (std::string cell; std::getline(s, cell, ',');) f.push_back(cell);
    if (f.size() != 4) throw std::runtime_error("malformed curve row: " + line);
    RateQualityEnergyPoint p;
    try {
      // stod also accepts the nan written for lossless points
      p.qp = std::stoi(f[0]);
      p.bits = std::stod(f[1]);
      p.psnr_yuv = std::stod(f[2]);
      p.energy_j = std::stod(f[3]);
    } catch (const std::logic_error&) {
      throw std::runtime_error("malformed curve row: " + line);
    }
    pts.push_back(p);
  }
  return pts;
}

void writeEvaluation(const EvaluationResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "curves.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "curves.csv").string());
    out.precision(17);
    out << "label,objective,qp,bits,psnr_y,psnr_u,psnr_v,psnr_yuv,energy_j_estimated,round_trip\n";
    for (const auto& r : result.rows)
      out << r.label << ',' << objectiveName(r.objective) << ',' << r.qp << ',' << r.bits << ',' << r.psnr.y << ','
          << r.psnr.u << ',' << r.psnr.v << ',' << r.psnr.yuv << ',' << r.energy_j << ','
          << (r.round_trip ? "ok" : "mismatch") << '\n';
  }
  std::map<CurveKey, std::vector<RateQualityEnergyPoint>> curves;
  for (const auto& r : result.rows) curves[{r.label, r.objective}].push_back({r.qp, r.bits, r.psnr.yuv, r.energy_j});
  for (const auto& [k, pts] : curves) writeCurveCsv(pts, dir / ("curve_" + k.label + "_" + objectiveName(k.objective) + ".csv"));
  std::ofstream(dir / "bd_report.json") << result.bd_report.dump(2) << '\n';
  std::ofstream(dir / "streaming_report.json") << result.streaming_report.dump(2) << '\n';
}

}  // namespace derd
