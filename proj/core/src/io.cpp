//
// Copyright 2026 The privshift Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "privshift/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "privshift/error.hpp"

namespace privshift {
namespace {

using nlohmann::json;

std::string_view TrimCell(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitLine(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(TrimCell(line.substr(start)));
      return cells;
    }
    cells.push_back(TrimCell(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::string Unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

double ParseCell(std::string_view cell, std::size_t line_number) {
  const std::string text(cell);
  if (text.empty()) {
    Throw(ErrorCode::kSchema,
          "missing value on line " + std::to_string(line_number));
  }
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) {
    Throw(ErrorCode::kSchema, "non-numeric or non-finite value '" + text +
                                  "' on line " + std::to_string(line_number));
  }
  return v;
}

json OptionalNumber(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> ReadOptional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

Provenance ProvenanceFromMethod(const std::string& method) {
  if (method == "gram") return Provenance::kExact;
  if (method == "en") return Provenance::kEntryNoise;
  if (method == "dp") return Provenance::kDp;
  if (method == "synth-derived") return Provenance::kSyntheticDerived;
  Throw(ErrorCode::kSchema, "unknown transform method '" + method + "'");
}

}  // namespace

Eigen::Index CsvTable::ColumnIndex(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return static_cast<Eigen::Index>(j);
  }
  Throw(ErrorCode::kSchema, "column '" + name + "' not found");
}

CsvTable ParseCsv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  while (!lines.empty() && TrimCell(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) Throw(ErrorCode::kSchema, "CSV input is empty");

  CsvTable table;
  for (std::string_view cell : SplitLine(lines[0])) {
    std::string name = Unquote(cell);
    if (name.empty()) Throw(ErrorCode::kSchema, "CSV header has an empty name");
    for (const auto& existing : table.header) {
      if (existing == name) {
        Throw(ErrorCode::kSchema, "duplicate column '" + name + "'");
      }
    }
    table.header.push_back(std::move(name));
  }
  const auto cols = static_cast<Eigen::Index>(table.header.size());
  table.values.resize(static_cast<Eigen::Index>(lines.size() - 1), cols);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = SplitLine(lines[r]);
    if (static_cast<Eigen::Index>(cells.size()) != cols) {
      Throw(ErrorCode::kSchema, "line " + std::to_string(r + 1) + " has " +
                                    std::to_string(cells.size()) +
                                    " fields, header has " +
                                    std::to_string(cols));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      table.values(static_cast<Eigen::Index>(r - 1), c) =
          ParseCell(cells[static_cast<std::size_t>(c)], r + 1);
    }
  }
  return table;
}

std::string FormatReal(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string FormatCsv(const CsvTable& table) {
  std::string out;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j) out += ',';
    out += table.header[j];
  }
  out += '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      if (c) out += ',';
      out += FormatReal(table.values(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) Throw(ErrorCode::kIo, "error reading '" + path.string() + "'");
  return buf.str();
}

void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Throw(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) Throw(ErrorCode::kIo, "error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    Throw(ErrorCode::kIo, "cannot move output into place at '" +
                              path.string() + "'");
  }
}

CsvTable ReadCsv(const std::filesystem::path& path) {
  return ParseCsv(ReadFile(path));
}

DataMatrix DataMatrixFromTable(const CsvTable& table, const std::string& outcome,
                               const std::vector<std::string>& exclude) {
  for (const auto& name : table.header) {
    if (name == "intercept") {
      Throw(ErrorCode::kSchema,
            "the intercept column is implicit and must not appear in the file");
    }
  }
  const Eigen::Index y = table.ColumnIndex(outcome);
  for (const auto& name : exclude) table.ColumnIndex(name);
  std::vector<Eigen::Index> covariates;
  std::vector<std::string> names{outcome};
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    const auto& name = table.header[j];
    if (static_cast<Eigen::Index>(j) == y) continue;
    if (std::find(exclude.begin(), exclude.end(), name) != exclude.end()) continue;
    covariates.push_back(static_cast<Eigen::Index>(j));
    names.push_back(name);
  }
  if (covariates.empty()) {
    Throw(ErrorCode::kSchema, "data needs at least one covariate column");
  }
  Eigen::MatrixXd x(table.values.rows(),
                    static_cast<Eigen::Index>(covariates.size()));
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    x.col(static_cast<Eigen::Index>(k)) = table.values.col(covariates[k]);
  }
  try {
    return DataMatrix::FromParts(table.values.col(y), x, std::move(names));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) {
      Throw(ErrorCode::kSchema, e.what());
    }
    throw;
  }
}

CsvTable TableFromDataMatrix(const DataMatrix& d) {
  CsvTable t;
  t.header.assign(d.column_names().begin() + 1, d.column_names().end());
  t.values = d.data_columns();
  return t;
}

std::string SerializeGramArtifact(const GramArtifact& artifact) {
  const GramMatrix& g = artifact.gram;
  json matrix = json::array();
  for (Eigen::Index i = 0; i < g.dimension(); ++i) {
    for (Eigen::Index j = 0; j < g.dimension(); ++j) matrix.push_back(g(i, j));
  }
  json doc;
  doc["schema_version"] = artifact.schema_version;
  doc["m"] = g.m();
  doc["p"] = g.covariate_count();
  doc["column_names"] = g.column_names();
  doc["outcome_index"] = kOutcomeColumn;
  doc["matrix"] = std::move(matrix);
  doc["transform"] = {{"method", artifact.transform.method},
                      {"epsilon", OptionalNumber(artifact.transform.epsilon)},
                      {"delta", OptionalNumber(artifact.transform.delta)},
                      {"lambda", OptionalNumber(artifact.transform.lambda)}};
  doc["seed"] = artifact.seed;
  doc["created_utc"] = artifact.created_utc;
  return doc.dump(2) + "\n";
}

GramArtifact ParseGramArtifact(std::string_view text) {
  try {
    const json doc = json::parse(text);
    const int version = doc.at("schema_version").get<int>();
    if (version != kGramArtifactSchemaVersion) {
      Throw(ErrorCode::kSchema,
            "unsupported artifact schema_version " + std::to_string(version));
    }
    const auto m = doc.at("m").get<Eigen::Index>();
    const auto p = doc.at("p").get<Eigen::Index>();
    if (m < 1 || p < 1) Throw(ErrorCode::kSchema, "artifact m and p must be positive");
    if (doc.at("outcome_index").get<int>() != kOutcomeColumn) {
      Throw(ErrorCode::kSchema, "artifact outcome_index must be 1");
    }
    const auto& values = doc.at("matrix");
    const Eigen::Index k = p + 2;
    if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != k * k) {
      Throw(ErrorCode::kSchema, "artifact matrix must have (p+2)^2 entries");
    }
    Eigen::MatrixXd entries(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        entries(i, j) = values.at(static_cast<std::size_t>(i * k + j)).get<double>();
      }
    }
    auto names = doc.at("column_names").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(names.size()) != k) {
      Throw(ErrorCode::kSchema, "artifact column_names must have p+2 entries");
    }
    const json& t = doc.at("transform");
    TransformRecord record;
    record.method = t.at("method").get<std::string>();
    record.epsilon = ReadOptional(t, "epsilon");
    record.delta = ReadOptional(t, "delta");
    record.lambda = ReadOptional(t, "lambda");
    const Provenance provenance = ProvenanceFromMethod(record.method);
    GramMatrix gram = [&] {
      try {
        return GramMatrix(std::move(entries), m, provenance, std::move(names));
      } catch (const Error& e) {
        Throw(ErrorCode::kSchema, std::string("invalid artifact matrix: ") + e.what());
      }
    }();
    return GramArtifact{std::move(gram), std::move(record),
                        doc.at("seed").get<std::uint64_t>(),
                        doc.at("created_utc").get<std::string>(), version};
  } catch (const json::exception& e) {
    Throw(ErrorCode::kSchema, std::string("malformed gram artifact: ") + e.what());
  }
}

std::string CurrentUtcTimestamp() {
  std::time_t now = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end != epoch && *end == '\0') now = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string SerializeRunManifest(const RunManifest& manifest) {
  json settings = json::object();
  for (const auto& [key, value] : manifest.settings) settings[key] = value;
  json summary = json::object();
  for (const auto& [key, value] : manifest.summary) summary[key] = value;
  json doc;
  doc["command"] = manifest.command;
  doc["arguments"] = manifest.arguments;
  doc["settings"] = std::move(settings);
  doc["seed"] = manifest.seed;
  doc["version"] = manifest.version;
  doc["summary"] = std::move(summary);
  return doc.dump(2) + "\n";
}

RunManifest ParseRunManifest(std::string_view text) {
  try {
    const json doc = json::parse(text);
    RunManifest m;
    m.command = doc.at("command").get<std::string>();
    m.arguments = doc.at("arguments").get<std::vector<std::string>>();
    for (const auto& [key, value] : doc.at("settings").items()) {
      m.settings.emplace_back(key, value.get<std::string>());
    }
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.version = doc.value("version", "");
    if (doc.contains("summary")) {
      for (const auto& [key, value] : doc.at("summary").items()) {
        m.summary[key] = value.is_null() ? std::nan("") : value.get<double>();
      }
    }
    return m;
  } catch (const json::exception& e) {
    Throw(ErrorCode::kSchema, std::string("malformed run manifest: ") + e.what());
  }
}

std::string SerializeEstimate(const EstimateResult& result) {
  json diagnostics = json::object();
  for (const auto& [key, value] : result.diagnostics) diagnostics[key] = value;
  json doc;
  doc["estimator"] = EstimatorName(result.estimator);
  doc["tau_hat"] = result.tau_hat;
  doc["variance"] = OptionalNumber(result.variance);
  doc["ci_low"] = OptionalNumber(result.ci_low);
  doc["ci_high"] = OptionalNumber(result.ci_high);
  doc["diagnostics"] = std::move(diagnostics);
  return doc.dump(2) + "\n";
}

}  // namespace privshift
