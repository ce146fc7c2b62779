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

#ifndef PRIVSHIFT_CORE_MODEL_HPP_
#define PRIVSHIFT_CORE_MODEL_HPP_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace privshift {

// Column layout shared by DataMatrix and GramMatrix:
//   0        constant 1 (intercept)
//   1        outcome Y
//   2..p+1   covariates X
// "Data columns" (Y and X) are the p+1 columns after the intercept; moment
// summaries index them from 0.
inline constexpr int kInterceptColumn = 0;
inline constexpr int kOutcomeColumn = 1;

// Confidential tabular data D with rows (1, Y_i, X_i).
class DataMatrix {
 public:
  // `values` must already contain the leading intercept column.
  // `column_names` has one label per column including the intercept; pass an
  // empty vector to get default names (intercept, y, x1..xp).
  DataMatrix(Eigen::MatrixXd values, std::vector<std::string> column_names);

  // Builds the matrix from an outcome vector and an m x p covariate block.
  static DataMatrix FromParts(const Eigen::VectorXd& outcome,
                              const Eigen::MatrixXd& covariates,
                              std::vector<std::string> data_column_names = {});

  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& column_names() const { return names_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index covariate_count() const { return values_.cols() - 2; }
  Eigen::Index data_column_count() const { return values_.cols() - 1; }

  Eigen::VectorXd outcome() const { return values_.col(kOutcomeColumn); }
  Eigen::MatrixXd covariates() const {
    return values_.rightCols(values_.cols() - 2);
  }
  // Y and X without the intercept, m x (p+1).
  Eigen::MatrixXd data_columns() const {
    return values_.rightCols(values_.cols() - 1);
  }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
};

enum class Provenance { kExact, kEntryNoise, kDp, kSyntheticDerived };

const char* ProvenanceName(Provenance provenance);

// Scaled cross-product summary D'D/m. Entries are stored exactly symmetric.
class GramMatrix {
 public:
  GramMatrix(Eigen::MatrixXd entries, Eigen::Index m, Provenance provenance,
             std::vector<std::string> column_names);

  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const {
    return entries_(i, j);
  }
  Eigen::Index m() const { return m_; }
  Provenance provenance() const { return provenance_; }
  const std::vector<std::string>& column_names() const { return names_; }
  Eigen::Index dimension() const { return entries_.rows(); }
  Eigen::Index covariate_count() const { return entries_.rows() - 2; }

 private:
  Eigen::MatrixXd entries_;
  Eigen::Index m_;
  Provenance provenance_;
  std::vector<std::string> names_;
};

// Column means, variances (1/m convention) and correlation matrix of the data
// columns (Y then X).
struct MomentSummary {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma2;
  Eigen::MatrixXd corr;
  // Data columns whose variance was non-positive when partitioning a noisy
  // gram; their correlations are reported as 0.
  std::vector<int> degenerate_columns;
};

struct LinearModel {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  // Column indices in gram/data-matrix layout.
  std::vector<int> covariate_indices;
  double residual_variance = 0.0;
  // True when the plain Cholesky solve failed and a fallback was used.
  bool used_fallback_solver = false;
};

inline constexpr double kDegenerateVarianceThreshold = 1e-12;

GramMatrix ComputeGram(const DataMatrix& d);

// Two-pass moments straight from the data (more accurate than partitioning the
// gram). Throws DegenerateColumn on a constant data column.
MomentSummary SummarizeMoments(const DataMatrix& d);

MomentSummary PartitionGram(const GramMatrix& g);

GramMatrix ReconstructGram(const MomentSummary& s, Eigen::Index m,
                           Provenance provenance,
                           std::vector<std::string> column_names = {});

// Least squares of column `outcome_index` on `covariate_indices` (plus an
// intercept via column 0) using only the gram entries.
LinearModel OlsFromGram(const GramMatrix& g, int outcome_index,
                        std::span<const int> covariate_indices);

double Predict(const LinearModel& model, std::span<const double> covariates);

// Row-wise prediction; `covariates` columns line up with
// model.covariate_indices.
Eigen::VectorXd PredictRows(const LinearModel& model,
                            const Eigen::MatrixXd& covariates);

std::vector<std::string> DefaultColumnNames(Eigen::Index p);

}  // namespace privshift

#endif  // PRIVSHIFT_CORE_MODEL_HPP_
