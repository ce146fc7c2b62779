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

#ifndef PRIVSHIFT_ESTIMATORS_HPP_
#define PRIVSHIFT_ESTIMATORS_HPP_

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "privshift/core_model.hpp"
#include "privshift/random.hpp"

namespace privshift {

// Randomized-experiment data: outcomes, binary treatment, covariates and the
// known assignment probability pi.
class RctSample {
 public:
  RctSample(Eigen::VectorXd y, Eigen::VectorXi treatment, Eigen::MatrixXd x,
            double pi);

  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXi& treatment() const { return t_; }
  const Eigen::MatrixXd& x() const { return x_; }
  double pi() const { return pi_; }
  Eigen::Index n() const { return y_.size(); }
  Eigen::Index treated_count() const { return treated_; }
  Eigen::Index control_count() const { return n() - treated_; }
  bool is_treated(Eigen::Index i) const { return t_(i) == 1; }

  // Rows in the given order (duplicates allowed); throws EmptyArm if the
  // result has no treated or no control unit.
  RctSample Subsample(std::span<const Eigen::Index> rows) const;
  RctSample WithCovariates(Eigen::MatrixXd x) const;

 private:
  Eigen::VectorXd y_;
  Eigen::VectorXi t_;
  Eigen::MatrixXd x_;
  double pi_;
  Eigen::Index treated_ = 0;
};

enum class EstimatorId { kDiffInMeans, kRegression, kIpw, kCw, kAcw, kFipw, kLoop };

const char* EstimatorName(EstimatorId id);

struct EstimateResult {
  double tau_hat = 0.0;
  std::optional<double> variance;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  EstimatorId estimator = EstimatorId::kDiffInMeans;
  std::map<std::string, double> diagnostics;
};

// Two-sided standard normal critical value for a confidence level, e.g.
// 1.959964 for 0.95.
double NormalCriticalValue(double level);

// Attaches tau_hat +/- z * sqrt(variance).
void AttachNormalCi(EstimateResult& r, double level = 0.95);

EstimateResult DiffInMeans(const RctSample& s);

// OLS of Y on (1, T, covariates); tau_hat is the T coefficient with the
// classical OLS variance. `covariates` may have zero columns.
EstimateResult RegressionAdjusted(const RctSample& s,
                                  const Eigen::MatrixXd& covariates);

// (1/n) sum [T Y / pi - (1 - T) Y / (1 - pi)].
EstimateResult IpwEstimate(const RctSample& s);

struct CalibrationWeights {
  Eigen::VectorXd w;
  Eigen::VectorXd eta;
  double constraint_residual = 0.0;
  int iterations = 0;
};

struct CalibrationOptions {
  double gradient_tolerance = 1e-10;
  double feasibility_tolerance = 1e-8;
  int max_iterations = 100;
  int max_halvings = 30;
  double hessian_ridge = 1e-12;
};

// Minimum-entropy weights with sum w_i g_i = target, w >= 0, sum w = 1,
// solved in the dual (w_i proportional to exp(eta' g_i)) by damped Newton.
// Throws InfeasibleError if the balance constraints cannot be met.
CalibrationWeights SolveCalibrationWeights(const Eigen::MatrixXd& g_rct,
                                           const Eigen::VectorXd& target,
                                           const CalibrationOptions& options = {});

enum class CalibrationMoments { kFirst, kFirstAndSecond };

// g(X): the covariates themselves, or covariates followed by their squares.
Eigen::MatrixXd CalibrationFeatures(const Eigen::MatrixXd& x,
                                    CalibrationMoments moments);

// Matching target from an auxiliary gram for the given gram columns.
Eigen::VectorXd CalibrationTarget(const GramMatrix& g,
                                  std::span<const int> columns,
                                  CalibrationMoments moments);

// sum w_i [T Y / pi - (1 - T) Y / (1 - pi)]; no variance (use BootstrapCi).
EstimateResult CwEstimate(const RctSample& s, const CalibrationWeights& weights);

// Linear outcome models per arm, augmentation evaluated at the auxiliary
// covariate means, plus the calibration-weighted IPW of the residuals.
EstimateResult AcwEstimate(const RctSample& s, const CalibrationWeights& weights,
                           const Eigen::VectorXd& aux_mu);

// Convenience: calibrate s.x() to aux_mu (first moments) and run ACW.
EstimateResult AcwFromMeans(const RctSample& s, const Eigen::VectorXd& aux_mu);

// (1/n) sum [T (Y - f) / pi - (1 - T)(Y - f) / (1 - pi)], variance from the
// sample variance of the unit terms.
EstimateResult FipwEstimate(const RctSample& s, const Eigen::VectorXd& f_hat);

struct LoopOptions {
  int max_rct_covariates = 20;
  // Ensemble weight grid spacing on [0, 1].
  double alpha_step = 0.05;
};

// Leave-one-out imputation of m_i = (1 - pi) t_i + pi c_i from an ensemble of
// an aux-prediction-only linear model and an RCT-covariate linear model, fed
// to FipwEstimate. Uses the first min(p, max_rct_covariates) columns of s.x().
EstimateResult LoopEstimate(const RctSample& s, const Eigen::VectorXd& aux_pred,
                            const LoopOptions& options = {});

struct BootstrapResult {
  double ci_low = 0.0;
  double ci_high = 0.0;
  double standard_error = 0.0;
  int successes = 0;
  int failures = 0;
};

using Estimator = std::function<EstimateResult(const RctSample&)>;

// Resamples RCT rows with replacement B times and returns
// point +/- z * (bootstrap SD). Replicates that fail calibration, are
// singular or lose an arm are dropped and counted. Throws
// AllReplicatesFailed when fewer than two replicates succeed.
BootstrapResult BootstrapCi(const Estimator& estimator, const RctSample& s,
                            double point_estimate, int replicates, double level,
                            Rng& rng);

}  // namespace privshift

#endif  // PRIVSHIFT_ESTIMATORS_HPP_
