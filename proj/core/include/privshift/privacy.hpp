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

#ifndef PRIVSHIFT_PRIVACY_HPP_
#define PRIVSHIFT_PRIVACY_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "privshift/core_model.hpp"
#include "privshift/random.hpp"

namespace privshift {

// (epsilon, delta) with epsilon > 0 and 0 < delta < 1.
class PrivacyBudget {
 public:
  PrivacyBudget(double epsilon, double delta);

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }

 private:
  double epsilon_;
  double delta_;
};

// Exact non-negative rational, used for budget shares so that composed
// spends add up without floating drift.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Fraction Make(std::int64_t num, std::int64_t den);
  Fraction operator+(const Fraction& other) const;
  bool operator==(const Fraction& other) const = default;
  bool operator<=(const Fraction& other) const;
  double ToDouble() const;
};

struct Allocation {
  std::string label;
  Fraction share;
  double epsilon = 0.0;
  double delta = 0.0;
};

// Single-owner record of budget spent against a total. Spends are exact
// rational shares of the total; spent_epsilon() is total.epsilon scaled by
// the summed share, so a fully spent ledger reports the total exactly.
class BudgetLedger {
 public:
  explicit BudgetLedger(PrivacyBudget total);

  // Records a spend and returns the budget to hand to the mechanism. Throws
  // InvalidBudget if the cumulative share would exceed 1.
  PrivacyBudget Charge(std::string label, Fraction share);

  const PrivacyBudget& total() const { return total_; }
  const std::vector<Allocation>& allocations() const { return allocations_; }
  Fraction spent_share() const { return spent_; }
  double spent_epsilon() const;
  double spent_delta() const;

 private:
  PrivacyBudget total_;
  std::vector<Allocation> allocations_;
  Fraction spent_;
};

// gamma = sensitivity * sqrt(2 log(1.25/delta)) / epsilon.
double GaussianGamma(double sensitivity, const PrivacyBudget& budget);

// stat + iid Normal(0, gamma^2) per coordinate.
Eigen::VectorXd GaussianMechanism(const Eigen::VectorXd& stat,
                                  double sensitivity,
                                  const PrivacyBudget& budget, Rng& rng);

// Same, charging `share` of the ledger's total under `label` first.
Eigen::VectorXd GaussianMechanism(const Eigen::VectorXd& stat,
                                  double sensitivity, BudgetLedger& ledger,
                                  std::string label, Fraction share, Rng& rng);

struct SensitivityBlock {
  enum class Kind { kMean, kVariance, kCorrelation };
  Kind kind = Kind::kMean;
  // Data column (0 = Y, 1..p = X); ignored for kCorrelation.
  int column = 0;

  static SensitivityBlock Mean(int column) { return {Kind::kMean, column}; }
  static SensitivityBlock Variance(int column) {
    return {Kind::kVariance, column};
  }
  static SensitivityBlock Correlation() { return {Kind::kCorrelation, 0}; }
};

// Exact max over the m single-row removals of |change| (scalar blocks) or the
// L2 change of the off-diagonal upper triangle of the correlation matrix.
// Statistics on the reduced data use the same 1/size convention as
// SummarizeMoments. Requires m >= 3.
double LooSensitivity(const DataMatrix& d, SensitivityBlock block);

// Planned split of a budget across the mean, variance and correlation
// releases for p covariates: each mean and variance element gets
// 2/(p^2+5p+4), the correlation vector gets (p^2+p)/(p^2+5p+4).
BudgetLedger AllocateBudget(const PrivacyBudget& total, int p);

// Documentation-only count of upper-triangle statistics, (p^2+5p+2)/2.
int UpperTriangleStatisticCount(int p);

struct DpGramOptions {
  // Project the noisy correlation matrix onto the PSD cone (eigenvalue
  // clipping, unit diagonal restored) before reconstruction.
  bool clip_eigenvalues = false;
};

struct DpGramResult {
  GramMatrix gram;
  BudgetLedger ledger;
  MomentSummary noisy_summary;
  Eigen::VectorXd mean_sensitivity;
  Eigen::VectorXd variance_sensitivity;
  double correlation_sensitivity = 0.0;
};

DpGramResult DpGramTransform(const DataMatrix& d, const PrivacyBudget& budget,
                             Rng& rng, const DpGramOptions& options = {});

// Per-column noise variances for the Y and X columns, or a scalar applied to
// all of them.
class NoiseSpec {
 public:
  static NoiseSpec Scalar(double lambda);
  static NoiseSpec PerColumn(Eigen::VectorXd variances);
  // Empirical (1/m) variance of each data column.
  static NoiseSpec EmpiricalVariance(const DataMatrix& d);

  Eigen::VectorXd Resolve(Eigen::Index data_columns) const;

 private:
  std::optional<double> scalar_;
  Eigen::VectorXd per_column_;
};

// D~ = D + E (intercept untouched), returns D~'D~/m.
GramMatrix EnTransform(const DataMatrix& d, const NoiseSpec& noise, Rng& rng);

// D + E itself, for callers that need the noisy rows.
DataMatrix AddEntryNoise(const DataMatrix& d, const NoiseSpec& noise, Rng& rng);

}  // namespace privshift

#endif  // PRIVSHIFT_PRIVACY_HPP_
