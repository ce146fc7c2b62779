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

// Reference implementations used only by tests. They are written directly
// from the defining formulas, independent of the library code paths.

#ifndef PRIVSHIFT_TESTS_ORACLES_HPP_
#define PRIVSHIFT_TESTS_ORACLES_HPP_

#include <vector>

#include <Eigen/Dense>

namespace privshift::oracle {

// Plain least squares of y on [1, x] via Householder QR; returns
// (intercept, slopes...).
Eigen::VectorXd LeastSquares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Mean, 1/m variance and correlation of the columns of `data`, computed with
// explicit loops.
struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Eigen::MatrixXd corr;
};
Moments ColumnMoments(const Eigen::MatrixXd& data);

// Brute-force removal sensitivities over the columns of `data` (Y then X):
// every leave-one-out dataset is materialized and its statistics recomputed.
double LooMeanSensitivity(const Eigen::MatrixXd& data, int column);
double LooVarianceSensitivity(const Eigen::MatrixXd& data, int column);
double LooCorrelationSensitivity(const Eigen::MatrixXd& data);

// Minimum-entropy weights solved on the primal with an equality-constrained
// Newton method from a strictly positive feasible start w0.
Eigen::VectorXd PrimalEntropyWeights(const Eigen::MatrixXd& g,
                                     const Eigen::VectorXd& target,
                                     const Eigen::VectorXd& w0);

double Entropy(const Eigen::VectorXd& w);

// Selection model logit = a + b'X + c X^S with X ~ N(1, I), X^S ~ N(1, 1):
// expected RCT size and E[X^S | selected] by one-dimensional quadrature over
// the normal linear predictor.
struct SelectionMoments {
  double expected_selected;
  double mean_xs_given_selected;
};
SelectionMoments SelectionQuadrature(double intercept,
                                     const Eigen::VectorXd& selection_coef,
                                     double xs_coef, int pool);

}  // namespace privshift::oracle

#endif  // PRIVSHIFT_TESTS_ORACLES_HPP_
