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

#ifndef PRIVSHIFT_SIMULATION_HPP_
#define PRIVSHIFT_SIMULATION_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "privshift/core_model.hpp"
#include "privshift/estimators.hpp"
#include "privshift/privacy.hpp"
#include "privshift/random.hpp"

namespace privshift {

// One disclosure-limiting view of the auxiliary data.
struct TransformSpec {
  enum class Kind { kGram, kEntryNoise, kDp, kSynthetic };
  Kind kind = Kind::kGram;
  // Noise variance for kEntryNoise, epsilon for kDp.
  double parameter = 0.0;

  // "gram", "en:1", "dp:3", "synth".
  std::string Label() const;
};

// Parses a comma-separated list such as "gram,en:1,dp:1,dp:3,synth". A bare
// "en" uses `default_lambda`. Throws InvalidArgument on unknown tokens.
std::vector<TransformSpec> ParseTransformList(std::string_view list,
                                              double default_lambda = 1.0);

// Applies a transform to the auxiliary data. Synthetic data is summarised by
// the gram of m synthetic rows (provenance kSyntheticDerived).
GramMatrix ApplyTransform(const DataMatrix& aux, const TransformSpec& spec,
                          double delta, Rng& rng);

struct GeneralizationConfig {
  int p = 10;
  int candidate_pool = 1300;
  int m_aux = 1000;
  int reps = 1000;
  int bootstrap_B = 100;
  std::vector<TransformSpec> transforms;
  double en_lambda = 1.0;
  double delta = 1e-5;
  std::uint64_t base_seed = 0;
  // Selection logit is selection_intercept + beta_S'X + xs_coefficient * X^S.
  double selection_intercept = -2.0;
  double xs_coefficient = 0.5;
  // Worker threads; 0 picks the hardware concurrency.
  int threads = 0;
};

struct PrecisionConfig {
  int p = 10;
  int n = 100;
  int m_aux = 1000;
  int generations = 100;
  int assignments = 1000;
  int max_rct_covariates = 20;
  std::vector<TransformSpec> transforms;
  double en_lambda = 1.0;
  double delta = 1e-5;
  std::uint64_t base_seed = 0;
  bool include_loop = true;
  // Zero outcome coefficients (no explainable variance).
  bool null_signal = false;
  int threads = 0;
};

// Throws InvalidArgument on non-positive counts or other bad settings.
void Validate(const GeneralizationConfig& cfg);
void Validate(const PrecisionConfig& cfg);

struct GeneralizationCoefficients {
  Eigen::VectorXd selection;  // beta_S
  Eigen::VectorXd outcome;    // beta
};

// Frozen per (study, p) from a dedicated stream of `base_seed`.
GeneralizationCoefficients DrawGeneralizationCoefficients(int p,
                                                          std::uint64_t base_seed);
Eigen::VectorXd DrawPrecisionCoefficients(int p, std::uint64_t base_seed);

inline constexpr double kResidualVariance = 0.3;
inline constexpr double kEffectModifierScale = 0.5;
inline constexpr double kTrueEffect = 0.5;

struct GeneralizationRep {
  // x holds the p covariates followed by X^S.
  RctSample rct;
  // Columns: Y (control outcome), X1..Xp, X^S.
  DataMatrix aux;
  double sate = 0.0;
  double truth = kTrueEffect;
  // Draws discarded because an arm was empty.
  int redraws = 0;
};

GeneralizationRep GenGeneralizationRep(const GeneralizationConfig& cfg,
                                       const GeneralizationCoefficients& coef,
                                       Rng& rng);

struct PrecisionGeneration {
  Eigen::MatrixXd rct_x;  // n x p
  Eigen::VectorXd y_control;
  Eigen::VectorXd y_treated;
  DataMatrix aux;  // Y, X1..Xp
  double truth = kTrueEffect;
};

PrecisionGeneration GenPrecisionGeneration(const PrecisionConfig& cfg,
                                           const Eigen::VectorXd& beta,
                                           Rng& rng);

// Columns used by the RCT-only regression: all of them when p fits under the
// cap, otherwise nonzero-coefficient columns first (oracle selection).
std::vector<int> SelectRctCovariates(const Eigen::VectorXd& beta, int cap);

struct MseParts {
  double mse = 0.0;
  double bias2 = 0.0;
  double variance = 0.0;
};

MseParts MseDecompose(const Eigen::VectorXd& estimates, double truth);

// Fields that do not apply to a study (coverage for precision rows, var_tau
// and relative efficiencies for generalization rows) are NaN.
struct StudyRow {
  std::string study;
  int p = 0;
  std::string estimator;
  std::string transform;  // "none" for RCT-only estimators
  double mse = 0.0;
  double bias2 = 0.0;
  double variance = 0.0;
  double coverage = 0.0;
  double var_tau = 0.0;
  double re_dm = 0.0;
  double re_reg = 0.0;
  int failures = 0;
};

struct StudyResults {
  std::vector<StudyRow> rows;
  // Study-level diagnostics such as mean_sate, mean_n, empty_arm_redraws.
  std::map<std::string, double> summary;
};

StudyResults RunGeneralizationStudy(const GeneralizationConfig& cfg);
StudyResults RunPrecisionStudy(const PrecisionConfig& cfg);

}  // namespace privshift

#endif  // PRIVSHIFT_SIMULATION_HPP_
