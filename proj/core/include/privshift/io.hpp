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

#ifndef PRIVSHIFT_IO_HPP_
#define PRIVSHIFT_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "privshift/core_model.hpp"
#include "privshift/estimators.hpp"

namespace privshift {

// Numeric table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;

  // Index of a named column; throws Schema if absent.
  Eigen::Index ColumnIndex(const std::string& name) const;
};

// Comma-separated, header row, '.' decimals. Empty or non-finite cells and
// ragged rows are rejected with a Schema error.
CsvTable ParseCsv(std::string_view text);
std::string FormatCsv(const CsvTable& table);

// Shortest text that reads back to the same double (17 significant digits).
std::string FormatReal(double value);

std::string ReadFile(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view content);

CsvTable ReadCsv(const std::filesystem::path& path);

// Outcome column first, then every other column not listed in `exclude` as a
// covariate. An "intercept" column in the file is a Schema error.
DataMatrix DataMatrixFromTable(const CsvTable& table, const std::string& outcome,
                               const std::vector<std::string>& exclude = {});
// Y and X columns with their names (intercept dropped).
CsvTable TableFromDataMatrix(const DataMatrix& d);

inline constexpr int kGramArtifactSchemaVersion = 1;

struct TransformRecord {
  // gram, en, dp or synth-derived.
  std::string method = "gram";
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> lambda;
};

struct GramArtifact {
  GramMatrix gram;
  TransformRecord transform;
  std::uint64_t seed = 0;
  std::string created_utc;
  int schema_version = kGramArtifactSchemaVersion;
};

std::string SerializeGramArtifact(const GramArtifact& artifact);
// Throws Schema on a malformed document, wrong matrix length or asymmetry.
GramArtifact ParseGramArtifact(std::string_view json);

// ISO-8601 UTC time; uses SOURCE_DATE_EPOCH when set so that artifacts can be
// reproduced byte for byte.
std::string CurrentUtcTimestamp();

struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::vector<std::pair<std::string, std::string>> settings;
  std::uint64_t seed = 0;
  std::string version;
  std::map<std::string, double> summary;
};

std::string SerializeRunManifest(const RunManifest& manifest);
RunManifest ParseRunManifest(std::string_view json);

std::string SerializeEstimate(const EstimateResult& result);

}  // namespace privshift

#endif  // PRIVSHIFT_IO_HPP_
