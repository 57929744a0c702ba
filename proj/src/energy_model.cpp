#include "derd/energy_model.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace derd {

using nlohmann::json;

std::string_view toString(ModeClass c) {
  switch (c) {
    case ModeClass::DC: return "DC";
    case ModeClass::Planar: return "Planar";
    case ModeClass::Angular: return "Angular";
  }
  return "?";
}

std::string_view toString(Component c) {
  switch (c) {
    case Component::Y: return "Y";
    case Component::U: return "U";
    case Component::V: return "V";
  }
  return "?";
}

std::size_t sizeIndex(int size) {
  switch (size) {
    case 4: return 0;
    case 8: return 1;
    case 16: return 2;
    case 32: return 3;
    default:
      throw std::invalid_argument("unsupported block size " + std::to_string(size));
  }
}

namespace {

void requireEnergy(double v, const std::string& what) {
  if (!std::isfinite(v) || v < 0.0)
    throw ModelError("specific energy '" + what + "' must be finite and non-negative");
}

void requireCount(std::int64_t v, const std::string& what) {
  if (v < 0) throw ModelError("feature count '" + what + "' is negative");
}

}  // namespace

void SpecificEnergyProfile::validate() const {
  const auto params = toParameters(*this);
  const auto& names = parameterNames();
  for (std::size_t i = 0; i < params.size(); ++i) requireEnergy(params[i], names[i]);
}

SpecificEnergyProfile SpecificEnergyProfile::scaled(double k) const {
  auto p = toParameters(*this);
  for (double& v : p) v *= k;
  return fromParameters(p, name, provenance);
}

FeatureCounts& FeatureCounts::operator+=(const FeatureCounts& o) {
  n_slice += o.n_slice;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t s = 0; s < kNumSizes; ++s) {
      n_mode_size[c][s] += o.n_mode_size[c][s];
      n_comp_size[c][s] += o.n_comp_size[c][s];
    }
  }
  n_coeff += o.n_coeff;
  n_g1 += o.n_g1;
  sum_log2_val += o.sum_log2_val;
  n_csbf += o.n_csbf;
  n_nompm += o.n_nompm;
  n_tsf += o.n_tsf;
  return *this;
}

void FeatureCounts::validate() const {
  requireCount(n_slice, "n_slice");
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t s = 0; s < kNumSizes; ++s) {
      requireCount(n_mode_size[c][s], "n_mode_size");
      requireCount(n_comp_size[c][s], "n_comp_size");
    }
  }
  requireCount(n_coeff, "n_coeff");
  requireCount(n_g1, "n_g1");
  requireCount(n_csbf, "n_csbf");
  requireCount(n_nompm, "n_nompm");
  requireCount(n_tsf, "n_tsf");
  if (n_g1 > n_coeff) throw ModelError("n_g1 exceeds n_coeff");
  if (!std::isfinite(sum_log2_val) || sum_log2_val < 0.0)
    throw ModelError("sum_log2_val must be finite and non-negative");
  if (n_g1 == 0 && sum_log2_val != 0.0)
    throw ModelError("sum_log2_val must be zero when no coefficient exceeds magnitude one");
}

FeatureCounts accumulate(const FeatureCounts& a, const FeatureCounts& b) {
  FeatureCounts r = a;
  r += b;
  return r;
}

double estimateBlockEnergy(const SpecificEnergyProfile& p, const FeatureCounts& n) {
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t s = 0; s < kNumSizes; ++s)
      if (n.n_mode_size[c][s] < 0 || n.n_comp_size[c][s] < 0)
        throw ModelError("negative feature count");
  if (n.n_slice < 0 || n.n_coeff < 0 || n.n_g1 < 0 || n.n_csbf < 0 ||
      n.n_nompm < 0 || n.n_tsf < 0 || n.sum_log2_val < 0.0)
    throw ModelError("negative feature count");

  double e = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t s = 0; s < kNumSizes; ++s) {
      e += p.e_mode_size[c][s] * static_cast<double>(n.n_mode_size[c][s]);
      e += p.e_comp_size[c][s] * static_cast<double>(n.n_comp_size[c][s]);
    }
  }
  e += p.e_coeff * static_cast<double>(n.n_coeff);
  e += p.e_g1 * static_cast<double>(n.n_g1);
  e += p.e_val * n.sum_log2_val;
  e += p.e_csbf * static_cast<double>(n.n_csbf);
  e += p.e_nompm * static_cast<double>(n.n_nompm);
  e -= p.e_tsf * static_cast<double>(n.n_tsf);
  return e;
}

double estimateDecodingEnergy(const SpecificEnergyProfile& p, const FeatureCounts& n) {
  const double block = estimateBlockEnergy(p, n);
  return p.e0 + p.e_slice * static_cast<double>(n.n_slice) + block;
}

// Parameter layout: e0, e_slice, 12 mode terms (class-major), 12 transform
// terms (component-major), e_coeff, e_g1, e_val, e_csbf, e_nompm, e_tsf.

const std::array<std::string, kNumEnergyParameters>& parameterNames() {
  static const auto names = [] {
    std::array<std::string, kNumEnergyParameters> n;
    std::size_t i = 0;
    n[i++] = "e0";
    n[i++] = "e_slice";
    for (ModeClass c : kModeClasses)
      for (int s : kBlockSizes)
        n[i++] = "e_mode_size." + std::string(toString(c)) + "." + std::to_string(s);
    for (Component c : kComponents)
      for (int s : kBlockSizes)
        n[i++] = "e_comp_size." + std::string(toString(c)) + "." + std::to_string(s);
    for (const char* k : {"e_coeff", "e_g1", "e_val", "e_csbf", "e_nompm", "e_tsf"}) n[i++] = k;
    return n;
  }();
  return names;
}

std::size_t parameterIndex(std::string_view name) {
  const auto& names = parameterNames();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw std::invalid_argument("unknown energy parameter '" + std::string(name) + "'");
}

ParameterVector toParameters(const SpecificEnergyProfile& p) {
  ParameterVector v{};
  std::size_t i = 0;
  v[i++] = p.e0;
  v[i++] = p.e_slice;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t s = 0; s < kNumSizes; ++s) v[i++] = p.e_mode_size[c][s];
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t s = 0; s < kNumSizes; ++s) v[i++] = p.e_comp_size[c][s];
  v[i++] = p.e_coeff;
  v[i++] = p.e_g1;
  v[i++] = p.e_val;
  v[i++] = p.e_csbf;
  v[i++] = p.e_nompm;
  v[i++] = p.e_tsf;
  return v;
}

SpecificEnergyProfile fromParameters(const ParameterVector& v, std::string name,
                                     std::string provenance) {
  SpecificEnergyProfile p;
  p.name = std::move(name);
  p.provenance = std::move(provenance);
  std::size_t i = 0;
  p.e0 = v[i++];
  p.e_slice = v[i++];
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t s = 0; s < kNumSizes; ++s) p.e_mode_size[c][s] = v[i++];
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t s = 0; s < kNumSizes; ++s) p.e_comp_size[c][s] = v[i++];
  p.e_coeff = v[i++];
  p.e_g1 = v[i++];
  p.e_val = v[i++];
  p.e_csbf = v[i++];
  p.e_nompm = v[i++];
  p.e_tsf = v[i++];
  return p;
}

ParameterVector designRow(const FeatureCounts& n) {
  ParameterVector r{};
  std::size_t i = 0;
  r[i++] = 1.0;
  r[i++] = static_cast<double>(n.n_slice);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t s = 0; s < kNumSizes; ++s) r[i++] = static_cast<double>(n.n_mode_size[c][s]);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t s = 0; s < kNumSizes; ++s) r[i++] = static_cast<double>(n.n_comp_size[c][s]);
  r[i++] = static_cast<double>(n.n_coeff);
  r[i++] = static_cast<double>(n.n_g1);
  r[i++] = n.sum_log2_val;
  r[i++] = static_cast<double>(n.n_csbf);
  r[i++] = static_cast<double>(n.n_nompm);
  r[i++] = -static_cast<double>(n.n_tsf);
  return r;
}

double EnergyProfileFit::meanRelativeError() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : relative_errors) {
    if (e) {
      sum += *e;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double EnergyProfileFit::maxRelativeError() const {
  double m = 0.0;
  for (const auto& e : relative_errors)
    if (e) m = std::max(m, *e);
  return m;
}

// JSON

namespace {

void rejectUnknownKeys(const json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ModelError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ModelError(where + ": unknown key '" + it.key() + "'");
}

const json& requireKey(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ModelError(where + ": missing key '" + key + "'");
  return *it;
}

double requireNumber(const json& j, const std::string& key, const std::string& where) {
  const json& v = requireKey(j, key, where);
  if (!v.is_number()) throw ModelError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

std::int64_t requireInteger(const json& j, const std::string& key, const std::string& where) {
  const json& v = requireKey(j, key, where);
  if (!v.is_number_integer()) throw ModelError(where + ": '" + key + "' must be an integer");
  const auto n = v.get<std::int64_t>();
  if (n < 0) throw ModelError(where + ": '" + key + "' is negative");
  return n;
}

std::set<std::string> sizeKeys() {
  std::set<std::string> k;
  for (int s : kBlockSizes) k.insert(std::to_string(s));
  return k;
}

template <class T, class Names, class Read>
SizeTable<T> readTable(const json& j, const std::string& key, const Names& rows,
                       const std::string& where, Read read) {
  const json& table = requireKey(j, key, where);
  std::set<std::string> rowKeys;
  for (auto r : rows) rowKeys.insert(std::string(toString(r)));
  rejectUnknownKeys(table, rowKeys, where + "." + key);
  SizeTable<T> out{};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string rk(toString(rows[r]));
    const std::string w = where + "." + key + "." + rk;
    const json& row = requireKey(table, rk, where + "." + key);
    rejectUnknownKeys(row, sizeKeys(), w);
    for (std::size_t s = 0; s < kNumSizes; ++s)
      out[r][s] = read(row, std::to_string(kBlockSizes[s]), w);
  }
  return out;
}

template <class T, class Names>
json writeTable(const SizeTable<T>& t, const Names& rows) {
  json out = json::object();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    json row = json::object();
    for (std::size_t s = 0; s < kNumSizes; ++s) row[std::to_string(kBlockSizes[s])] = t[r][s];
    out[std::string(toString(rows[r]))] = row;
  }
  return out;
}

json readJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError("'" + path.string() + "': " + e.what());
  }
}

void writeJsonFile(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace

json toJson(const SpecificEnergyProfile& p) {
  json j;
  j["name"] = p.name;
  j["provenance"] = p.provenance;
  j["e0"] = p.e0;
  j["e_slice"] = p.e_slice;
  j["e_mode_size"] = writeTable(p.e_mode_size, kModeClasses);
  j["e_comp_size"] = writeTable(p.e_comp_size, kComponents);
  j["e_coeff"] = p.e_coeff;
  j["e_g1"] = p.e_g1;
  j["e_val"] = p.e_val;
  j["e_csbf"] = p.e_csbf;
  j["e_nompm"] = p.e_nompm;
  j["e_tsf"] = p.e_tsf;
  return j;
}

SpecificEnergyProfile profileFromJson(const json& j) {
  const std::string where = "profile";
  rejectUnknownKeys(j,
                    {"name", "provenance", "e0", "e_slice", "e_mode_size", "e_comp_size",
                     "e_coeff", "e_g1", "e_val", "e_csbf", "e_nompm", "e_tsf"},
                    where);
  SpecificEnergyProfile p;
  if (auto it = j.find("name"); it != j.end()) p.name = it->get<std::string>();
  if (auto it = j.find("provenance"); it != j.end()) p.provenance = it->get<std::string>();
  p.e0 = requireNumber(j, "e0", where);
  p.e_slice = requireNumber(j, "e_slice", where);
  p.e_mode_size = readTable<double>(j, "e_mode_size", kModeClasses, where, requireNumber);
  p.e_comp_size = readTable<double>(j, "e_comp_size", kComponents, where, requireNumber);
  p.e_coeff = requireNumber(j, "e_coeff", where);
  p.e_g1 = requireNumber(j, "e_g1", where);
  p.e_val = requireNumber(j, "e_val", where);
  p.e_csbf = requireNumber(j, "e_csbf", where);
  p.e_nompm = requireNumber(j, "e_nompm", where);
  p.e_tsf = requireNumber(j, "e_tsf", where);
  p.validate();
  return p;
}

json toJson(const FeatureCounts& n) {
  json j;
  j["n_slice"] = n.n_slice;
  j["n_mode_size"] = writeTable(n.n_mode_size, kModeClasses);
  j["n_comp_size"] = writeTable(n.n_comp_size, kComponents);
  j["n_coeff"] = n.n_coeff;
  j["n_g1"] = n.n_g1;
  j["sum_log2_val"] = n.sum_log2_val;
  j["n_csbf"] = n.n_csbf;
  j["n_nompm"] = n.n_nompm;
  j["n_tsf"] = n.n_tsf;
  return j;
}

FeatureCounts countsFromJson(const json& j) {
  const std::string where = "feature log";
  rejectUnknownKeys(j,
                    {"n_slice", "n_mode_size", "n_comp_size", "n_coeff", "n_g1",
                     "sum_log2_val", "n_csbf", "n_nompm", "n_tsf"},
                    where);
  FeatureCounts n;
  n.n_slice = requireInteger(j, "n_slice", where);
  n.n_mode_size = readTable<std::int64_t>(j, "n_mode_size", kModeClasses, where, requireInteger);
  n.n_comp_size = readTable<std::int64_t>(j, "n_comp_size", kComponents, where, requireInteger);
  n.n_coeff = requireInteger(j, "n_coeff", where);
  n.n_g1 = requireInteger(j, "n_g1", where);
  n.sum_log2_val = requireNumber(j, "sum_log2_val", where);
  n.n_csbf = requireInteger(j, "n_csbf", where);
  n.n_nompm = requireInteger(j, "n_nompm", where);
  n.n_tsf = requireInteger(j, "n_tsf", where);
  n.validate();
  return n;
}

SpecificEnergyProfile loadProfile(const std::filesystem::path& path) {
  return profileFromJson(readJsonFile(path));
}

void saveProfile(const SpecificEnergyProfile& profile, const std::filesystem::path& path) {
  writeJsonFile(toJson(profile), path);
}

FeatureCounts loadFeatureLog(const std::filesystem::path& path) {
  return countsFromJson(readJsonFile(path));
}

void saveFeatureLog(const FeatureCounts& counts, const std::filesystem::path& path) {
  writeJsonFile(toJson(counts), path);
}

SpecificEnergyProfile syntheticDefaultProfile() {
  SpecificEnergyProfile p;
  p.name = "synthetic-default";
  p.provenance =
      "synthetic; order of magnitude chosen so that total decoding energy is "
      "roughly bits x 1e-6 J; not a hardware measurement";
  p.e0 = 2.0e-2;
  p.e_slice = 5.0e-4;
  // Intra prediction, roughly proportional to the predicted area.
  p.e_mode_size = {{
      {1.0e-7, 3.0e-7, 1.0e-6, 3.6e-6},   // DC
      {1.4e-7, 4.4e-7, 1.5e-6, 5.4e-6},   // Planar
      {1.8e-7, 6.0e-7, 2.1e-6, 7.8e-6},   // Angular
  }};
  // Inverse transform, growing as N^2 log N.
  p.e_comp_size = {{
      {5.0e-7, 1.6e-6, 6.0e-6, 2.4e-5},   // Y
      {4.5e-7, 1.44e-6, 5.4e-6, 2.16e-5}, // U
      {4.5e-7, 1.44e-6, 5.4e-6, 2.16e-5}, // V
  }};
  p.e_coeff = 3.0e-7;
  p.e_g1 = 1.5e-7;
  p.e_val = 2.0e-7;
  p.e_csbf = 1.2e-7;
  p.e_nompm = 8.0e-8;
  p.e_tsf = 4.0e-7;
  return p;
}

}  // namespace derd
