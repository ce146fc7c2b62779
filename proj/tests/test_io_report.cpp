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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "privshift/error.hpp"
#include "privshift/io.hpp"
#include "privshift/random.hpp"
#include "privshift/report.hpp"

namespace privshift {
namespace {

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(Csv, ParseAndFormat) {
  const CsvTable t = ParseCsv("y,x1,x2\n1,2,3\n-0.5,1e-3,4\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"y", "x1", "x2"}));
  EXPECT_EQ(t.values.rows(), 2);
  EXPECT_EQ(t.values(1, 1), 1e-3);
  EXPECT_EQ(t.ColumnIndex("x2"), 2);
  EXPECT_EQ(CodeOf([&] { t.ColumnIndex("z"); }), ErrorCode::kSchema);
  EXPECT_EQ(ParseCsv(FormatCsv(t)).values, t.values);
}

TEST(Csv, RejectsMalformedInput) {
  EXPECT_EQ(CodeOf([] { ParseCsv(""); }), ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([] { ParseCsv("a,b\n1\n"); }), ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([] { ParseCsv("a,b\n1,\n"); }), ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([] { ParseCsv("a,b\n1,nan\n"); }), ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([] { ParseCsv("a,b\n1,x\n"); }), ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([] { ParseCsv("a,a\n1,2\n"); }), ErrorCode::kSchema);
}

TEST(Csv, FloatsRoundTripBitwise) {
  Rng rng(3);
  CsvTable t;
  t.header = {"y", "x"};
  t.values = StandardNormalMatrix(50, 2, rng) * 1e7;
  t.values(0, 0) = 0.1;
  t.values(1, 1) = -1e-300;
  EXPECT_EQ(ParseCsv(FormatCsv(t)).values, t.values);
  EXPECT_EQ(std::stod(FormatReal(0.1)), 0.1);
}

TEST(DataMatrixTable, OutcomeFirstAndIntercept) {
  const CsvTable t = ParseCsv("x1,y,t\n1,2,1\n3,4,0\n");
  const DataMatrix d = DataMatrixFromTable(t, "y", {"t"});
  EXPECT_EQ(d.column_names(), (std::vector<std::string>{"intercept", "y", "x1"}));
  EXPECT_EQ(d.outcome()(1), 4.0);
  const CsvTable back = TableFromDataMatrix(d);
  EXPECT_EQ(back.header, (std::vector<std::string>{"y", "x1"}));
  EXPECT_EQ(CodeOf([] { DataMatrixFromTable(ParseCsv("intercept,y\n1,2\n1,3\n"), "y"); }),
            ErrorCode::kSchema);
}

TEST(Files, AtomicWriteAndMissingRead) {
  const auto dir = std::filesystem::temp_directory_path() / "privshift_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.txt";
  WriteFileAtomic(path, "hello\n");
  EXPECT_EQ(ReadFile(path), "hello\n");
  EXPECT_FALSE(std::filesystem::exists(dir / "out.txt.tmp"));
  EXPECT_EQ(CodeOf([&] { ReadFile(dir / "missing.csv"); }), ErrorCode::kIo);
  std::filesystem::remove_all(dir);
}

TEST(GramArtifact, RoundTripIsBitwise) {
  Rng rng(8);
  const DataMatrix d = DataMatrix::FromParts(StandardNormalMatrix(40, 1, rng),
                                             StandardNormalMatrix(40, 3, rng));
  GramArtifact a{ComputeGram(d), TransformRecord{"dp", 3.0, 1e-5, std::nullopt},
                 12345678901234567ULL, "2020-01-01T00:00:00Z",
                 kGramArtifactSchemaVersion};
  const std::string text = SerializeGramArtifact(a);
  const GramArtifact b = ParseGramArtifact(text);
  EXPECT_EQ(b.gram.entries(), a.gram.entries());
  EXPECT_EQ(b.gram.m(), 40);
  EXPECT_EQ(b.gram.column_names(), a.gram.column_names());
  EXPECT_EQ(b.transform.method, "dp");
  EXPECT_EQ(*b.transform.epsilon, 3.0);
  EXPECT_FALSE(b.transform.lambda.has_value());
  EXPECT_EQ(b.seed, a.seed);
  EXPECT_EQ(SerializeGramArtifact(b), text);
}

TEST(GramArtifact, RejectsMalformedDocuments) {
  EXPECT_EQ(CodeOf([] { ParseGramArtifact("{not json"); }), ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([] { ParseGramArtifact("{}"); }), ErrorCode::kSchema);
  const DataMatrix d = DataMatrix::FromParts(Eigen::Vector3d(1, 2, 4),
                                             Eigen::MatrixXd::Identity(3, 1));
  GramArtifact a{ComputeGram(d), {}, 1, "2020-01-01T00:00:00Z", 1};
  std::string text = SerializeGramArtifact(a);
  const auto pos = text.find("\"m\"");
  ASSERT_NE(pos, std::string::npos);
  std::string wrong_p = text;
  wrong_p.replace(wrong_p.find("\"p\": 1"), 6, "\"p\": 2");
  EXPECT_EQ(CodeOf([&] { ParseGramArtifact(wrong_p); }), ErrorCode::kSchema);
}

TEST(Timestamp, HonoursSourceDateEpoch) {
  setenv("SOURCE_DATE_EPOCH", "0", 1);
  EXPECT_EQ(CurrentUtcTimestamp(), "1970-01-01T00:00:00Z");
  unsetenv("SOURCE_DATE_EPOCH");
}

TEST(RunManifest, RoundTrip) {
  RunManifest m;
  m.command = "simulate";
  m.arguments = {"simulate", "--study", "precision"};
  m.settings = {{"p", "10"}, {"transforms", "gram"}};
  m.seed = 99;
  m.version = "1.0.0";
  m.summary = {{"mean_sate", 0.75}};
  const RunManifest back = ParseRunManifest(SerializeRunManifest(m));
  EXPECT_EQ(back.command, m.command);
  EXPECT_EQ(back.arguments, m.arguments);
  EXPECT_EQ(back.settings, m.settings);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.summary, m.summary);
}

StudyResults SampleResults() {
  const double nan = std::nan("");
  StudyResults r;
  r.rows = {
      {"generalization", 10, "acw", "dp:3", 0.02, 0.001, 0.019, 0.94, nan, nan, nan, 1},
      {"generalization", 10, "dm", "none", 0.2, 0.15, 0.05, 0.5, nan, nan, nan, 0},
      {"generalization", 10, "acw", "gram", 0.01, 0.0, 0.01, 0.95, nan, nan, nan, 0},
      {"generalization", 10, "ols", "none", 0.1, 0.08, 0.02, 0.1, nan, nan, nan, 0},
      {"generalization", 10, "acw", "dp:1", 0.03, 0.002, 0.028, 0.93, nan, nan, nan, 4},
  };
  return r;
}

TEST(StudyResultsCsv, RoundTrip) {
  const StudyResults r = SampleResults();
  const std::vector<StudyRow> back = ParseStudyResults(SerializeStudyResults(r));
  ASSERT_EQ(back.size(), r.rows.size());
  EXPECT_EQ(back[0].transform, "dp:3");
  EXPECT_EQ(back[0].mse, 0.02);
  EXPECT_TRUE(std::isnan(back[0].re_dm));
  EXPECT_EQ(back[4].failures, 4);
  EXPECT_EQ(CodeOf([] { ParseStudyResults(""); }), ErrorCode::kSchema);
  const std::string header_only = SerializeStudyResults(StudyResults{});
  EXPECT_EQ(CodeOf([&] { ParseStudyResults(header_only); }), ErrorCode::kSchema);
}

TEST(Report, CoverageRowOrder) {
  const std::string md =
      RenderReport(SampleResults().rows, ReportTable::kCoverage, ReportFormat::kCsv);
  const auto dm = md.find("\ndm,");
  const auto ols = md.find("\nols,");
  const auto gram = md.find("acw[gram]");
  const auto dp1 = md.find("acw[dp:1]");
  const auto dp3 = md.find("acw[dp:3]");
  ASSERT_NE(dm, std::string::npos);
  EXPECT_LT(dm, ols);
  EXPECT_LT(ols, gram);
  EXPECT_LT(gram, dp1);
  EXPECT_LT(dp1, dp3);
  EXPECT_NE(md.find("0.950"), std::string::npos);
}

TEST(Report, MarkdownMatchesCsvCells) {
  const auto rows = SampleResults().rows;
  for (ReportTable table : {ReportTable::kCoverage, ReportTable::kMse}) {
    const std::string csv = RenderReport(rows, table, ReportFormat::kCsv);
    const std::string md = RenderReport(rows, table, ReportFormat::kMarkdown);
    // Strip markdown pipes and the separator row, then compare cell text.
    std::vector<std::string> md_lines;
    std::istringstream in(md);
    for (std::string line; std::getline(in, line);) {
      if (line.find("---") != std::string::npos) continue;
      std::string cells;
      std::istringstream parts(line.substr(1, line.size() - 2));
      std::string cell;
      bool first = true;
      while (std::getline(parts, cell, '|')) {
        const auto b = cell.find_first_not_of(' ');
        const auto e = cell.find_last_not_of(' ');
        cells += (first ? "" : ",") + cell.substr(b, e - b + 1);
        first = false;
      }
      md_lines.push_back(cells);
    }
    std::vector<std::string> csv_lines;
    std::istringstream cin_(csv);
    for (std::string line; std::getline(cin_, line);) csv_lines.push_back(line);
    EXPECT_EQ(md_lines, csv_lines);
  }
}

TEST(Report, ParsesNames) {
  EXPECT_EQ(ParseReportTable("precision"), ReportTable::kPrecision);
  EXPECT_EQ(ParseReportFormat("markdown"), ReportFormat::kMarkdown);
  EXPECT_THROW(ParseReportTable("bars"), Error);
  EXPECT_THROW(ParseReportFormat("html"), Error);
}

}  // namespace
}  // namespace privshift
