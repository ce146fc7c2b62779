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

#ifndef PRIVSHIFT_REPORT_HPP_
#define PRIVSHIFT_REPORT_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "privshift/simulation.hpp"

namespace privshift {

// Columns: study,p,estimator,transform,mse,bias2,variance,coverage,var_tau,
// re_dm,re_reg,failures. Not-applicable values are written as "nan".
std::string SerializeStudyResults(const StudyResults& results);
// Throws Schema when the header is wrong or there are no data rows.
std::vector<StudyRow> ParseStudyResults(std::string_view csv);

enum class ReportTable { kCoverage, kMse, kPrecision };
enum class ReportFormat { kMarkdown, kCsv };

ReportTable ParseReportTable(std::string_view name);
ReportFormat ParseReportFormat(std::string_view name);

// Estimators as rows (RCT-only first, then auxiliary-data estimators by
// transform: gram, entry noise, dp by increasing epsilon, synthetic), p values
// as column groups. kMse is long format (one row per bias2/variance bar
// segment). Markdown and CSV carry identical cell text.
std::string RenderReport(const std::vector<StudyRow>& rows, ReportTable table,
                         ReportFormat format);

}  // namespace privshift

#endif  // PRIVSHIFT_REPORT_HPP_
