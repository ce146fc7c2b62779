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

#include "privshift/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <tuple>

#include "privshift/error.hpp"
#include "privshift/io.hpp"

namespace privshift {
namespace {

constexpr const char* kColumns[] = {
    "study",    "p",        "estimator", "transform", "mse",   "bias2",
    "variance", "coverage", "var_tau",   "re_dm",     "re_reg", "failures"};
constexpr std::size_t kColumnCount = sizeof(kColumns) / sizeof(kColumns[0]);

std::vector<std::string> SplitFields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(
        start, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - start);
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
      cell.remove_suffix(1);
    }
    while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
    out.emplace_back(cell);
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

double ParseField(const std::string& text, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    Throw(ErrorCode::kSchema, "bad number '" + text + "' on line " +
                                  std::to_string(line));
  }
  return v;
}

int EstimatorRank(const std::string& estimator) {
  static const std::map<std::string, int> ranks{
      {"dm", 0}, {"ols", 1}, {"acw", 2}, {"cw", 3}, {"ols_aux", 4}, {"loop", 5}};
  const auto it = ranks.find(estimator);
  return it == ranks.end() ? 99 : it->second;
}

std::tuple<int, double, std::string> TransformKey(const std::string& transform) {
  const std::size_t colon = transform.find(':');
  const std::string kind = transform.substr(0, colon);
  const double param =
      colon == std::string::npos ? 0.0 : std::atof(transform.c_str() + colon + 1);
  static const std::map<std::string, int> ranks{
      {"none", 0}, {"gram", 1}, {"en", 2}, {"dp", 3}, {"synth", 4}};
  const auto it = ranks.find(kind);
  return {it == ranks.end() ? 99 : it->second, param, transform};
}

std::string RowLabel(const StudyRow& row) {
  if (row.transform == "none") return row.estimator;
  return row.estimator + "[" + row.transform + "]";
}

struct LabelOrder {
  bool operator()(const StudyRow* a, const StudyRow* b) const {
    const int ra = EstimatorRank(a->estimator);
    const int rb = EstimatorRank(b->estimator);
    if (ra != rb) return ra < rb;
    if (a->estimator != b->estimator) return a->estimator < b->estimator;
    return TransformKey(a->transform) < TransformKey(b->transform);
  }
};

std::string Cell(double value, const char* format) {
  if (!std::isfinite(value)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, value);
  return buf;
}

std::string Render(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& body,
                   ReportFormat format) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& cells) {
    if (format == ReportFormat::kMarkdown) {
      out += "|";
      for (const auto& c : cells) out += " " + c + " |";
    } else {
      for (std::size_t j = 0; j < cells.size(); ++j) {
        if (j) out += ",";
        out += cells[j];
      }
    }
    out += "\n";
  };
  emit(header);
  if (format == ReportFormat::kMarkdown) {
    out += "|";
    for (std::size_t j = 0; j < header.size(); ++j) out += j ? "---:|" : "---|";
    out += "\n";
  }
  for (const auto& row : body) emit(row);
  return out;
}

// Unique row labels in display order and the sorted p values of one study.
struct Layout {
  std::vector<const StudyRow*> labels;
  std::vector<int> ps;
  std::map<std::pair<std::string, int>, const StudyRow*> cells;
};

Layout BuildLayout(const std::vector<StudyRow>& rows, const char* study) {
  Layout layout;
  std::set<int> ps;
  std::map<std::string, const StudyRow*> first;
  for (const auto& row : rows) {
    if (row.study != study) continue;
    ps.insert(row.p);
    const std::string label = RowLabel(row);
    layout.cells[{label, row.p}] = &row;
    if (!first.count(label)) first[label] = &row;
  }
  if (ps.empty()) {
    Throw(ErrorCode::kSchema, std::string("no ") + study + " rows in input");
  }
  for (const auto& [label, row] : first) layout.labels.push_back(row);
  std::stable_sort(layout.labels.begin(), layout.labels.end(), LabelOrder{});
  layout.ps.assign(ps.begin(), ps.end());
  return layout;
}

const StudyRow* Find(const Layout& layout, const StudyRow* label_row, int p) {
  const auto it = layout.cells.find({RowLabel(*label_row), p});
  return it == layout.cells.end() ? nullptr : it->second;
}

}  // namespace

std::string SerializeStudyResults(const StudyResults& results) {
  std::string out;
  for (std::size_t j = 0; j < kColumnCount; ++j) {
    if (j) out += ',';
    out += kColumns[j];
  }
  out += '\n';
  for (const auto& r : results.rows) {
    out += r.study + ',' + std::to_string(r.p) + ',' + r.estimator + ',' +
           r.transform;
    for (double v : {r.mse, r.bias2, r.variance, r.coverage, r.var_tau, r.re_dm,
                     r.re_reg}) {
      out += ',' + FormatReal(v);
    }
    out += ',' + std::to_string(r.failures) + '\n';
  }
  return out;
}

std::vector<StudyRow> ParseStudyResults(std::string_view csv) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < csv.size()) {
    std::size_t nl = csv.find('\n', start);
    if (nl == std::string_view::npos) nl = csv.size();
    std::string_view line = csv.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = nl + 1;
  }
  if (lines.empty()) Throw(ErrorCode::kSchema, "results input is empty");
  const auto header = SplitFields(lines[0]);
  if (header.size() != kColumnCount ||
      !std::equal(header.begin(), header.end(), std::begin(kColumns))) {
    Throw(ErrorCode::kSchema, "results header does not match the study schema");
  }
  if (lines.size() < 2) Throw(ErrorCode::kSchema, "results input has no rows");
  std::vector<StudyRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = SplitFields(lines[i]);
    if (f.size() != kColumnCount) {
      Throw(ErrorCode::kSchema, "wrong field count on line " +
                                    std::to_string(i + 1));
    }
    StudyRow r;
    r.study = f[0];
    r.p = static_cast<int>(ParseField(f[1], i + 1));
    r.estimator = f[2];
    r.transform = f[3];
    r.mse = ParseField(f[4], i + 1);
    r.bias2 = ParseField(f[5], i + 1);
    r.variance = ParseField(f[6], i + 1);
    r.coverage = ParseField(f[7], i + 1);
    r.var_tau = ParseField(f[8], i + 1);
    r.re_dm = ParseField(f[9], i + 1);
    r.re_reg = ParseField(f[10], i + 1);
    r.failures = static_cast<int>(ParseField(f[11], i + 1));
    rows.push_back(std::move(r));
  }
  return rows;
}

ReportTable ParseReportTable(std::string_view name) {
  if (name == "coverage") return ReportTable::kCoverage;
  if (name == "mse") return ReportTable::kMse;
  if (name == "precision") return ReportTable::kPrecision;
  Throw(ErrorCode::kInvalidArgument,
        "unknown table '" + std::string(name) + "' (coverage, mse, precision)");
}

ReportFormat ParseReportFormat(std::string_view name) {
  if (name == "markdown") return ReportFormat::kMarkdown;
  if (name == "csv") return ReportFormat::kCsv;
  Throw(ErrorCode::kInvalidArgument,
        "unknown format '" + std::string(name) + "' (markdown, csv)");
}

std::string RenderReport(const std::vector<StudyRow>& rows, ReportTable table,
                         ReportFormat format) {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> body;
  switch (table) {
    case ReportTable::kCoverage: {
      const Layout layout = BuildLayout(rows, "generalization");
      header.push_back("estimator");
      for (int p : layout.ps) header.push_back("p=" + std::to_string(p));
      for (const StudyRow* label : layout.labels) {
        std::vector<std::string> line{RowLabel(*label)};
        for (int p : layout.ps) {
          const StudyRow* r = Find(layout, label, p);
          line.push_back(r ? Cell(r->coverage, "%.3f") : "NA");
        }
        body.push_back(std::move(line));
      }
      break;
    }
    case ReportTable::kPrecision: {
      const Layout layout = BuildLayout(rows, "precision");
      header.push_back("estimator");
      for (int p : layout.ps) {
        const std::string tag = "p=" + std::to_string(p);
        header.push_back(tag + " var");
        header.push_back(tag + " re_dm");
        header.push_back(tag + " re_reg");
      }
      for (const StudyRow* label : layout.labels) {
        std::vector<std::string> line{RowLabel(*label)};
        for (int p : layout.ps) {
          const StudyRow* r = Find(layout, label, p);
          line.push_back(r ? Cell(r->var_tau, "%.4f") : "NA");
          line.push_back(r ? Cell(r->re_dm, "%.2f") : "NA");
          line.push_back(r ? Cell(r->re_reg, "%.2f") : "NA");
        }
        body.push_back(std::move(line));
      }
      break;
    }
    case ReportTable::kMse: {
      const Layout layout = BuildLayout(rows, "generalization");
      header = {"p", "estimator", "component", "value"};
      for (int p : layout.ps) {
        for (const StudyRow* label : layout.labels) {
          const StudyRow* r = Find(layout, label, p);
          if (!r) continue;
          body.push_back({std::to_string(p), RowLabel(*r), "bias2",
                          Cell(r->bias2, "%.6g")});
          body.push_back({std::to_string(p), RowLabel(*r), "variance",
                          Cell(r->variance, "%.6g")});
        }
      }
      break;
    }
  }
  return Render(header, body, format);
}

}  // namespace privshift
