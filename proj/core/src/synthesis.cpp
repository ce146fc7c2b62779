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

#include "privshift/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "privshift/error.hpp"

namespace privshift {

SequentialSynthesizer FitSequential(const DataMatrix& d,
                                    std::optional<std::vector<int>> order) {
  const Eigen::Index p = d.covariate_count();
  const int width = static_cast<int>(d.values().cols());
  if (d.rows() <= p + 2) {
    Throw(ErrorCode::kTooFewRows,
          "sequential synthesis needs more than p + 2 rows");
  }
  std::vector<int> column_order;
  if (order) {
    column_order = *order;
    std::vector<int> sorted = column_order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expected(static_cast<std::size_t>(width - 1));
    std::iota(expected.begin(), expected.end(), 1);
    if (sorted != expected) {
      Throw(ErrorCode::kInvalidArgument,
            "column order must be a permutation of the data columns");
    }
  } else {
    column_order.resize(static_cast<std::size_t>(width - 1));
    std::iota(column_order.begin(), column_order.end(), 1);
  }

  const GramMatrix g = ComputeGram(d);
  SequentialSynthesizer s;
  s.column_order = column_order;
  s.column_names = d.column_names();
  const int first = column_order.front();
  s.first_mean = g(0, first);
  s.first_variance = std::max(0.0, g(first, first) - s.first_mean * s.first_mean);
  for (std::size_t k = 1; k < column_order.size(); ++k) {
    std::span<const int> predictors(column_order.data(), k);
    try {
      s.models.push_back(OlsFromGram(g, column_order[k], predictors));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSingularSystem) throw;
      Throw(ErrorCode::kDegenerateColumn,
            "cannot fit column '" +
                d.column_names()[static_cast<std::size_t>(column_order[k])] +
                "' on its predecessors: " + e.what());
    }
  }
  return s;
}

DataMatrix Synthesize(const SequentialSynthesizer& s, Eigen::Index m_out,
                      Rng& rng) {
  if (m_out < 2) Throw(ErrorCode::kInvalidArgument, "m_out must be >= 2");
  const auto width = static_cast<Eigen::Index>(s.column_order.size() + 1);
  Eigen::MatrixXd values(m_out, width);
  values.col(kInterceptColumn).setOnes();
  std::normal_distribution<double> normal(0.0, 1.0);

  const int first = s.column_order.front();
  const double first_sd = std::sqrt(s.first_variance);
  for (Eigen::Index i = 0; i < m_out; ++i) {
    values(i, first) = s.first_mean + first_sd * normal(rng);
  }
  for (std::size_t k = 1; k < s.column_order.size(); ++k) {
    const LinearModel& model = s.models[k - 1];
    const int target = s.column_order[k];
    const double sd = std::sqrt(model.residual_variance);
    for (Eigen::Index i = 0; i < m_out; ++i) {
      double y = model.intercept;
      for (std::size_t a = 0; a < model.covariate_indices.size(); ++a) {
        y += model.coefficients(static_cast<Eigen::Index>(a)) *
             values(i, model.covariate_indices[a]);
      }
      values(i, target) = y + sd * normal(rng);
    }
  }
  return DataMatrix(std::move(values), s.column_names);
}

}  // namespace privshift
