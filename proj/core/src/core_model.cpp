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

#include "privshift/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "privshift/error.hpp"

namespace privshift {
namespace {

bool AllFinite(const Eigen::MatrixXd& m) { return m.allFinite(); }

Eigen::MatrixXd MirrorUpper(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd out = a;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) out(i, j) = out(j, i);
  }
  return out;
}

// Solves the symmetric system, escalating from Cholesky to a jittered
// Cholesky to full-pivot LU. Noisy grams can make `a` indefinite.
Eigen::VectorXd SolveNormalEquations(const Eigen::MatrixXd& a,
                                     const Eigen::VectorXd& b,
                                     bool* used_fallback) {
  *used_fallback = false;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) {
    Eigen::VectorXd x = llt.solve(b);
    if (x.allFinite()) return x;
  }
  *used_fallback = true;
  const Eigen::Index k = a.rows();
  double trace = a.trace();
  double jitter = 1e-8 * (trace > 0.0 ? trace / static_cast<double>(k) : 1.0);
  Eigen::MatrixXd jittered = a;
  jittered.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt_jitter(jittered);
  if (llt_jitter.info() == Eigen::Success) {
    Eigen::VectorXd x = llt_jitter.solve(b);
    if (x.allFinite()) return x;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (lu.rank() == k) {
    Eigen::VectorXd x = lu.solve(b);
    if (x.allFinite()) return x;
  }
  Throw(ErrorCode::kSingularSystem,
        "normal equations are singular even after ridge jitter");
}

}  // namespace

std::vector<std::string> DefaultColumnNames(Eigen::Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p + 2));
  names.emplace_back("intercept");
  names.emplace_back("y");
  for (Eigen::Index j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

DataMatrix::DataMatrix(Eigen::MatrixXd values,
                       std::vector<std::string> column_names)
    : values_(std::move(values)), names_(std::move(column_names)) {
  if (values_.cols() < 3) {
    Throw(ErrorCode::kInvalidArgument,
          "data matrix needs an intercept, an outcome and at least one "
          "covariate");
  }
  if (values_.rows() < 2) {
    Throw(ErrorCode::kTooFewRows, "data matrix needs at least 2 rows");
  }
  if (!AllFinite(values_)) {
    Throw(ErrorCode::kInvalidArgument, "data matrix has non-finite entries");
  }
  if ((values_.col(kInterceptColumn).array() != 1.0).any()) {
    Throw(ErrorCode::kInvalidArgument, "column 0 must be identically 1");
  }
  if (names_.empty()) names_ = DefaultColumnNames(values_.cols() - 2);
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
    Throw(ErrorCode::kInvalidArgument,
          "column_names length does not match the number of columns");
  }
}

DataMatrix DataMatrix::FromParts(const Eigen::VectorXd& outcome,
                                 const Eigen::MatrixXd& covariates,
                                 std::vector<std::string> data_column_names) {
  if (outcome.size() != covariates.rows()) {
    Throw(ErrorCode::kInvalidArgument,
          "outcome length does not match covariate rows");
  }
  Eigen::MatrixXd values(covariates.rows(), covariates.cols() + 2);
  values.col(kInterceptColumn).setOnes();
  values.col(kOutcomeColumn) = outcome;
  values.rightCols(covariates.cols()) = covariates;
  std::vector<std::string> names;
  if (!data_column_names.empty()) {
    names.emplace_back("intercept");
    names.insert(names.end(), data_column_names.begin(),
                 data_column_names.end());
  }
  return DataMatrix(std::move(values), std::move(names));
}

const char* ProvenanceName(Provenance provenance) {
  switch (provenance) {
    case Provenance::kExact:
      return "exact";
    case Provenance::kEntryNoise:
      return "entry_noise";
    case Provenance::kDp:
      return "dp";
    case Provenance::kSyntheticDerived:
      return "synthetic_derived";
  }
  return "unknown";
}

GramMatrix::GramMatrix(Eigen::MatrixXd entries, Eigen::Index m,
                       Provenance provenance,
                       std::vector<std::string> column_names)
    : entries_(std::move(entries)),
      m_(m),
      provenance_(provenance),
      names_(std::move(column_names)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 3) {
    Throw(ErrorCode::kInvalidArgument,
          "gram matrix must be square with dimension >= 3");
  }
  if (m_ < 1) Throw(ErrorCode::kInvalidArgument, "gram row count must be >= 1");
  if (!AllFinite(entries_)) {
    Throw(ErrorCode::kInvalidArgument, "gram matrix has non-finite entries");
  }
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (entries_(i, j) != entries_(j, i)) {
        std::ostringstream msg;
        msg << "gram matrix is not exactly symmetric at (" << i << "," << j
            << ")";
        Throw(ErrorCode::kInvalidArgument, msg.str());
      }
    }
  }
  if (names_.empty()) names_ = DefaultColumnNames(entries_.rows() - 2);
  if (static_cast<Eigen::Index>(names_.size()) != entries_.rows()) {
    Throw(ErrorCode::kInvalidArgument,
          "column_names length does not match the gram dimension");
  }
}

GramMatrix ComputeGram(const DataMatrix& d) {
  const Eigen::MatrixXd& v = d.values();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(v.cols(), v.cols());
  g.selfadjointView<Eigen::Upper>().rankUpdate(v.transpose());
  g /= static_cast<double>(d.rows());
  g = MirrorUpper(g);
  g(0, 0) = 1.0;
  return GramMatrix(std::move(g), d.rows(), Provenance::kExact,
                    d.column_names());
}

MomentSummary SummarizeMoments(const DataMatrix& d) {
  const Eigen::MatrixXd data = d.data_columns();
  const double m = static_cast<double>(d.rows());
  MomentSummary s;
  s.mu = data.colwise().mean().transpose();
  Eigen::MatrixXd centered = data.rowwise() - s.mu.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / m;
  s.sigma2 = cov.diagonal();
  for (Eigen::Index j = 0; j < s.sigma2.size(); ++j) {
    if (s.sigma2(j) <= kDegenerateVarianceThreshold) {
      Throw(ErrorCode::kDegenerateColumn,
            "data column '" + d.column_names()[static_cast<std::size_t>(j + 1)] +
                "' is constant");
    }
  }
  Eigen::VectorXd sd = s.sigma2.cwiseSqrt();
  const Eigen::Index q = s.mu.size();
  s.corr = Eigen::MatrixXd::Identity(q, q);
  for (Eigen::Index l = 0; l < q; ++l) {
    for (Eigen::Index j = l + 1; j < q; ++j) {
      double r = std::clamp(cov(l, j) / (sd(l) * sd(j)), -1.0, 1.0);
      s.corr(l, j) = r;
      s.corr(j, l) = r;
    }
  }
  return s;
}

MomentSummary PartitionGram(const GramMatrix& g) {
  const Eigen::Index q = g.dimension() - 1;
  const bool noisy = g.provenance() != Provenance::kExact;
  MomentSummary s;
  s.mu = g.entries().row(0).tail(q).transpose();
  s.sigma2.resize(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    double v = g(j + 1, j + 1) - s.mu(j) * s.mu(j);
    if (v <= kDegenerateVarianceThreshold) {
      if (!noisy) {
        Throw(ErrorCode::kDegenerateColumn,
              "gram column '" + g.column_names()[static_cast<std::size_t>(j + 1)] +
                  "' has zero variance");
      }
      s.degenerate_columns.push_back(static_cast<int>(j));
      v = 0.0;
    }
    s.sigma2(j) = v;
  }
  Eigen::VectorXd sd = s.sigma2.cwiseSqrt();
  s.corr = Eigen::MatrixXd::Identity(q, q);
  for (Eigen::Index l = 0; l < q; ++l) {
    for (Eigen::Index j = l + 1; j < q; ++j) {
      double r = 0.0;
      if (sd(l) > 0.0 && sd(j) > 0.0) {
        r = (g(l + 1, j + 1) - s.mu(l) * s.mu(j)) / (sd(l) * sd(j));
        r = std::clamp(r, -1.0, 1.0);
      }
      s.corr(l, j) = r;
      s.corr(j, l) = r;
    }
  }
  return s;
}

GramMatrix ReconstructGram(const MomentSummary& s, Eigen::Index m,
                           Provenance provenance,
                           std::vector<std::string> column_names) {
  const Eigen::Index q = s.mu.size();
  if (s.sigma2.size() != q || s.corr.rows() != q || s.corr.cols() != q) {
    Throw(ErrorCode::kInvalidArgument, "moment summary has inconsistent sizes");
  }
  if ((s.sigma2.array() < 0.0).any()) {
    Throw(ErrorCode::kInvalidArgument, "moment summary has negative variances");
  }
  Eigen::VectorXd sd = s.sigma2.cwiseSqrt();
  Eigen::MatrixXd g(q + 1, q + 1);
  g(0, 0) = 1.0;
  for (Eigen::Index j = 0; j < q; ++j) {
    g(0, j + 1) = s.mu(j);
    g(j + 1, 0) = s.mu(j);
    g(j + 1, j + 1) = s.sigma2(j) + s.mu(j) * s.mu(j);
    for (Eigen::Index l = 0; l < j; ++l) {
      double c = s.corr(l, j) * sd(l) * sd(j) + s.mu(l) * s.mu(j);
      g(l + 1, j + 1) = c;
      g(j + 1, l + 1) = c;
    }
  }
  return GramMatrix(std::move(g), m, provenance, std::move(column_names));
}

LinearModel OlsFromGram(const GramMatrix& g, int outcome_index,
                        std::span<const int> covariate_indices) {
  const Eigen::Index dim = g.dimension();
  if (covariate_indices.empty()) {
    Throw(ErrorCode::kInvalidArgument, "at least one covariate is required");
  }
  if (outcome_index <= 0 || outcome_index >= dim) {
    Throw(ErrorCode::kInvalidArgument, "outcome index out of range");
  }
  for (int c : covariate_indices) {
    if (c <= 0 || c >= dim) {
      Throw(ErrorCode::kInvalidArgument, "covariate index out of range");
    }
    if (c == outcome_index) {
      Throw(ErrorCode::kInvalidArgument,
            "covariate indices must exclude the outcome");
    }
  }
  const auto k = static_cast<Eigen::Index>(covariate_indices.size());
  const double mu_y = g(0, outcome_index);
  Eigen::VectorXd mu_x(k);
  for (Eigen::Index a = 0; a < k; ++a) mu_x(a) = g(0, covariate_indices[a]);

  // Centred normal equations; algebraically identical to the augmented
  // system with the intercept column but better conditioned.
  Eigen::MatrixXd cov_xx(k, k);
  Eigen::VectorXd cov_xy(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const int ia = covariate_indices[a];
    cov_xy(a) = g(ia, outcome_index) - mu_x(a) * mu_y;
    for (Eigen::Index b = a; b < k; ++b) {
      const int ib = covariate_indices[b];
      double c = g(ia, ib) - mu_x(a) * mu_x(b);
      cov_xx(a, b) = c;
      cov_xx(b, a) = c;
    }
  }

  LinearModel model;
  model.coefficients =
      SolveNormalEquations(cov_xx, cov_xy, &model.used_fallback_solver);
  model.intercept = mu_y - model.coefficients.dot(mu_x);
  model.covariate_indices.assign(covariate_indices.begin(),
                                 covariate_indices.end());
  const double var_y = g(outcome_index, outcome_index) - mu_y * mu_y;
  model.residual_variance =
      std::max(0.0, var_y - model.coefficients.dot(cov_xy));
  return model;
}

double Predict(const LinearModel& model, std::span<const double> covariates) {
  if (static_cast<Eigen::Index>(covariates.size()) !=
      model.coefficients.size()) {
    Throw(ErrorCode::kInvalidArgument,
          "covariate vector length does not match the model");
  }
  double y = model.intercept;
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    y += model.coefficients(static_cast<Eigen::Index>(j)) * covariates[j];
  }
  return y;
}

Eigen::VectorXd PredictRows(const LinearModel& model,
                            const Eigen::MatrixXd& covariates) {
  if (covariates.cols() != model.coefficients.size()) {
    Throw(ErrorCode::kInvalidArgument,
          "covariate matrix width does not match the model");
  }
  Eigen::VectorXd y = covariates * model.coefficients;
  y.array() += model.intercept;
  return y;
}

}  // namespace privshift
