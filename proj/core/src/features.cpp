// Copyright 2026 The serboost Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ser/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "json.hpp"
#include "ser/dsp.hpp"

namespace ser {

namespace {

constexpr std::array<std::string_view, 9> kFullStats = {"mean", "median", "std", "min", "max",
                                                        "q1",   "q3",     "skewness", "kurtosis"};
constexpr std::array<std::string_view, 10> kKnownStats = {"mean", "median", "std", "min",      "max",
                                                          "q1",   "q3",     "skewness", "kurtosis", "valid"};
constexpr std::array<std::string_view, 3> kTemporal = {"duration_s", "voiced_ratio", "energy_peak_rate"};
constexpr std::size_t kMfccCoeffs = 13;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double stat_value(const dsp::Stats& s, std::string_view stat) {
  if (stat == "mean") return s.mean;
  if (stat == "median") return s.median;
  if (stat == "std") return s.std;
  if (stat == "min") return s.min;
  if (stat == "max") return s.max;
  if (stat == "q1") return s.q1;
  if (stat == "q3") return s.q3;
  if (stat == "skewness") return s.skewness;
  if (stat == "kurtosis") return s.kurtosis;
  if (stat == "valid") return s.valid ? 1.0 : 0.0;
  throw Error("features", "unknown_statistic", "unknown statistic '" + std::string(stat) + "'");
}

// Contours computed once per clip; the catalog then picks statistics.
struct ClipAnalysis {
  std::map<std::string, dsp::Stats> stats;
  dsp::TemporalScalars temporal;
};

ClipAnalysis analyse(const AudioClip& clip) {
  const dsp::FrameSeries fr = dsp::frame_signal(clip);
  const dsp::Contour pitch = dsp::pitch_track(clip);
  const dsp::Contour energy = dsp::energy_contour(fr);
  const dsp::Contour intensity = dsp::intensity_contour(fr);
  const dsp::SpectralContours spectral = dsp::spectral_descriptors(fr);
  const Matrix cep = dsp::mfcc(fr, 26, kMfccCoeffs);

  ClipAnalysis a;
  a.stats["pitch"] = dsp::aggregate_stats(pitch);
  a.stats["energy"] = dsp::aggregate_stats(energy);
  a.stats["intensity"] = dsp::aggregate_stats(intensity);
  a.stats["centroid"] = dsp::aggregate_stats(spectral.centroid);
  a.stats["rolloff"] = dsp::aggregate_stats(spectral.rolloff85);
  a.stats["flux"] = dsp::aggregate_stats(spectral.flux);
  a.stats["spectrum_std"] = dsp::aggregate_stats(spectral.spectrum_std);
  for (std::size_t k = 0; k < kMfccCoeffs; ++k)
    a.stats["mfcc" + std::to_string(k)] = dsp::aggregate_stats(cep.column(k));
  a.temporal = dsp::temporal_descriptors(clip, pitch, energy);
  return a;
}

}  // namespace

std::string CatalogEntry::name() const {
  if (statistic.empty()) return descriptor;
  if (descriptor == "temporal") return statistic;
  return descriptor + "_" + statistic;
}

FeatureCatalog::FeatureCatalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> seen;
  std::string joined;
  for (const auto& e : entries_) {
    const std::string n = e.name();
    if (!seen.insert(n).second) throw Error("features", "duplicate_feature", "duplicate catalog entry '" + n + "'");
    joined += n;
    joined += '\n';
  }
  version_ = "cat-" + hex64(fnv1a64(joined));
}

FeatureCatalog FeatureCatalog::default_catalog() {
  std::vector<CatalogEntry> e;
  for (const char* d : {"pitch", "energy", "intensity", "centroid"})
    for (auto s : kFullStats) e.push_back({d, std::string(s)});
  for (const char* d : {"rolloff", "flux", "spectrum_std"})
    for (const char* s : {"mean", "std"}) e.push_back({d, s});
  for (std::size_t k = 0; k < kMfccCoeffs; ++k)
    for (const char* s : {"mean", "std"}) e.push_back({"mfcc" + std::to_string(k), s});
  for (auto t : kTemporal) e.push_back({"temporal", std::string(t)});
  e.push_back({"pitch", "valid"});
  e.push_back({"centroid", "valid"});
  return FeatureCatalog(std::move(e));
}

FeatureCatalog FeatureCatalog::from_names(std::span<const std::string> names) {
  std::vector<CatalogEntry> e;
  for (const auto& n : names) {
    if (std::find(kTemporal.begin(), kTemporal.end(), n) != kTemporal.end()) {
      e.push_back({"temporal", n});
      continue;
    }
    bool matched = false;
    for (auto s : kKnownStats) {
      const std::string suffix = "_" + std::string(s);
      if (n.size() > suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0) {
        e.push_back({n.substr(0, n.size() - suffix.size()), std::string(s)});
        matched = true;
        break;
      }
    }
    if (!matched) e.push_back({n, ""});
  }
  return FeatureCatalog(std::move(e));
}

std::vector<std::string> FeatureCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name());
  return out;
}

FeatureCatalog FeatureCatalog::subset(std::span<const std::string> keep) const {
  std::set<std::string> k(keep.begin(), keep.end());
  std::vector<CatalogEntry> out;
  for (const auto& e : entries_)
    if (k.count(e.name())) out.push_back(e);
  return FeatureCatalog(std::move(out));
}

std::string FeatureCatalog::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["version"] = version_;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : entries_)
    j["entries"].push_back({{"descriptor", e.descriptor}, {"statistic", e.statistic}});
  return j.dump(2) + "\n";
}

FeatureCatalog FeatureCatalog::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::vector<CatalogEntry> e;
    for (const auto& x : j.at("entries"))
      e.push_back({x.at("descriptor").get<std::string>(), x.at("statistic").get<std::string>()});
    FeatureCatalog c(std::move(e));
    if (j.contains("version") && j["version"].get<std::string>() != c.version())
      throw Error("features", "catalog_version_mismatch", "catalog JSON version does not match its entries");
    return c;
  } catch (const nlohmann::json::exception& ex) {
    throw Error("features", "invalid_catalog_json", ex.what());
  }
}

std::optional<std::size_t> FeatureMatrix::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < column_names.size(); ++i)
    if (column_names[i] == name) return i;
  return std::nullopt;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> idx) const {
  FeatureMatrix out;
  out.column_names = column_names;
  out.values = values.select_rows(idx);
  out.catalog_version = catalog_version;
  for (auto i : idx) {
    out.labels.push_back(labels[i]);
    out.paths.push_back(i < paths.size() ? paths[i] : std::string());
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& n : names) {
    auto i = column_index(n);
    if (!i) throw Error("features", "unknown_feature", "feature '" + n + "' not present in matrix");
    idx.push_back(*i);
  }
  FeatureMatrix out;
  out.column_names.assign(names.begin(), names.end());
  out.values = values.select_cols(idx);
  out.labels = labels;
  out.paths = paths;
  out.catalog_version = FeatureCatalog::from_names(out.column_names).version();
  return out;
}

void FeatureMatrix::validate() const {
  if (values.cols() != column_names.size())
    throw Error("features", "invalid_matrix", "column name count does not match matrix width");
  if (labels.size() != values.rows()) throw Error("features", "invalid_matrix", "label count does not match rows");
  std::set<std::string> seen(column_names.begin(), column_names.end());
  if (seen.size() != column_names.size()) throw Error("features", "invalid_matrix", "duplicate column names");
  for (double v : values.data())
    if (!std::isfinite(v)) throw Error("features", "invalid_matrix", "non-finite matrix entry");
}

FeatureVector extract_all(const AudioClip& clip, const FeatureCatalog& catalog) {
  const ClipAnalysis a = analyse(clip);
  FeatureVector v;
  v.names = catalog.names();
  v.values.reserve(catalog.size());
  for (const auto& e : catalog.entries()) {
    double x = 0.0;
    if (e.descriptor == "temporal") {
      if (e.statistic == "duration_s") x = a.temporal.duration_s;
      else if (e.statistic == "voiced_ratio") x = a.temporal.voiced_ratio;
      else if (e.statistic == "energy_peak_rate") x = a.temporal.energy_peak_rate;
      else throw Error("features", "unknown_statistic", "unknown temporal scalar '" + e.statistic + "'");
    } else {
      auto it = a.stats.find(e.descriptor);
      if (it == a.stats.end())
        throw Error("features", "unknown_descriptor", "descriptor '" + e.descriptor + "' is not extractable");
      x = stat_value(it->second, e.statistic);
    }
    if (!std::isfinite(x)) x = 0.0;
    v.values.push_back(x);
  }
  return v;
}

FeatureMatrix extract_matrix(const LabeledDataset& ds, const FeatureCatalog& catalog) {
  FeatureMatrix m;
  m.column_names = catalog.names();
  m.catalog_version = catalog.version();
  m.values = Matrix(ds.clips.size(), catalog.size());
  std::vector<std::string> failures(ds.clips.size());
  parallel_for(ds.clips.size(), [&](std::size_t i) {
    try {
      const FeatureVector v = extract_all(ds.clips[i], catalog);
      std::copy(v.values.begin(), v.values.end(), m.values.row(i).begin());
    } catch (const std::exception& ex) {
      failures[i] = ds.clips[i].source_path + ": " + ex.what();
    }
  });
  std::ostringstream report;
  std::size_t n_failed = 0;
  for (const auto& f : failures) {
    if (f.empty()) continue;
    ++n_failed;
    report << "\n  " << f;
  }
  if (n_failed > 0)
    throw Error("features", "extraction_failed", std::to_string(n_failed) + " clip(s) failed:" + report.str());
  for (const auto& c : ds.clips) {
    m.labels.emplace_back(emotion_name(c.label));
    m.paths.push_back(c.source_path);
  }
  return m;
}

std::string feature_matrix_csv(const FeatureMatrix& m) {
  std::ostringstream os;
  for (const auto& n : m.column_names) os << csv::escape(n) << ',';
  os << "label,path\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) os << format_double(m.values(r, c)) << ',';
    os << csv::escape(m.labels[r]) << ',' << csv::escape(r < m.paths.size() ? m.paths[r] : "") << '\n';
  }
  return os.str();
}

FeatureMatrix parse_feature_matrix_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw Error("features", "invalid_csv", "empty feature CSV");
  const auto& header = rows.front();
  if (header.size() < 2 || header[header.size() - 2] != "label" || header.back() != "path")
    throw Error("features", "invalid_csv", "feature CSV must end with label,path columns");
  FeatureMatrix m;
  m.column_names.assign(header.begin(), header.end() - 2);
  const std::size_t d = m.column_names.size();
  m.values = Matrix(rows.size() - 1, d);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != d + 2)
      throw Error("features", "invalid_csv", "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                                 " fields, expected " + std::to_string(d + 2));
    for (std::size_t c = 0; c < d; ++c) {
      char* end = nullptr;
      const double v = std::strtod(row[c].c_str(), &end);
      if (end == row[c].c_str() || *end != '\0')
        throw Error("features", "invalid_csv", "unparsable number '" + row[c] + "' in row " + std::to_string(r));
      m.values(r - 1, c) = v;
    }
    m.labels.push_back(row[d]);
    m.paths.push_back(row[d + 1]);
  }
  m.catalog_version = FeatureCatalog::from_names(m.column_names).version();
  return m;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("io", "unwritable", "cannot write " + path.string());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "file_not_found", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ser
