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

#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace privshift::oracle {

Eigen::VectorXd LeastSquares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  return design.householderQr().solve(y);
}

Moments ColumnMoments(const Eigen::MatrixXd& data) {
  const Eigen::Index m = data.rows();
  const Eigen::Index k = data.cols();
  Moments out{Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k),
              Eigen::MatrixXd::Identity(k, k)};
  for (Eigen::Index j = 0; j < k; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) s += data(i, j);
    out.mean(j) = s / static_cast<double>(m);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      ss += (data(i, j) - out.mean(j)) * (data(i, j) - out.mean(j));
    }
    out.variance(j) = ss / static_cast<double>(m);
  }
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) {
      double c = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        c += (data(i, a) - out.mean(a)) * (data(i, b) - out.mean(b));
      }
      c /= static_cast<double>(m);
      const double r = c / std::sqrt(out.variance(a) * out.variance(b));
      out.corr(a, b) = out.corr(b, a) = r;
    }
  }
  return out;
}

namespace {

Eigen::MatrixXd WithoutRow(const Eigen::MatrixXd& data, Eigen::Index row) {
  Eigen::MatrixXd out(data.rows() - 1, data.cols());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    if (i != row) out.row(r++) = data.row(i);
  }
  return out;
}

Eigen::VectorXd UpperOffDiagonal(const Eigen::MatrixXd& c) {
  const Eigen::Index k = c.rows();
  Eigen::VectorXd v(k * (k - 1) / 2);
  Eigen::Index n = 0;
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) v(n++) = c(a, b);
  }
  return v;
}

double Expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double LooMeanSensitivity(const Eigen::MatrixXd& data, int column) {
  const Moments full = ColumnMoments(data);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Moments loo = ColumnMoments(WithoutRow(data, i));
    worst = std::max(worst, std::abs(loo.mean(column) - full.mean(column)));
  }
  return worst;
}

double LooVarianceSensitivity(const Eigen::MatrixXd& data, int column) {
  const Moments full = ColumnMoments(data);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Moments loo = ColumnMoments(WithoutRow(data, i));
    worst = std::max(worst, std::abs(loo.variance(column) - full.variance(column)));
  }
  return worst;
}

double LooCorrelationSensitivity(const Eigen::MatrixXd& data) {
  const Eigen::VectorXd full = UpperOffDiagonal(ColumnMoments(data).corr);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Eigen::VectorXd loo =
        UpperOffDiagonal(ColumnMoments(WithoutRow(data, i)).corr);
    worst = std::max(worst, (loo - full).norm());
  }
  return worst;
}

Eigen::VectorXd PrimalEntropyWeights(const Eigen::MatrixXd& g,
                                     const Eigen::VectorXd& target,
                                     const Eigen::VectorXd& w0) {
  const Eigen::Index n = g.rows();
  const Eigen::Index r = g.cols();
  // Constraints A w = b with A = [g'; 1'].
  Eigen::MatrixXd a(r + 1, n);
  a.topRows(r) = g.transpose();
  a.row(r).setOnes();
  Eigen::VectorXd b(r + 1);
  b.head(r) = target;
  b(r) = 1.0;
  Eigen::VectorXd w = w0;
  for (int iter = 0; iter < 200; ++iter) {
    // Newton step for sum w log w restricted to the affine set:
    // [H A'; A 0] [dw; nu] = [-grad; b - A w].
    const Eigen::VectorXd grad = (w.array().log() + 1.0).matrix();
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + r + 1, n + r + 1);
    kkt.topLeftCorner(n, n) = w.cwiseInverse().asDiagonal();
    kkt.topRightCorner(n, r + 1) = a.transpose();
    kkt.bottomLeftCorner(r + 1, n) = a;
    Eigen::VectorXd rhs(n + r + 1);
    rhs.head(n) = -grad;
    rhs.tail(r + 1) = b - a * w;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    const Eigen::VectorXd dw = sol.head(n);
    const double decrement = dw.dot(kkt.topLeftCorner(n, n) * dw);
    if (decrement < 1e-26) break;
    double t = 1.0;
    while ((w + t * dw).minCoeff() <= 0.0) t *= 0.5;
    const double f0 = Entropy(w);
    while (Entropy(w + t * dw) > f0 + 0.25 * t * grad.dot(dw) && t > 1e-12) {
      t *= 0.5;
    }
    w += t * dw;
  }
  return w;
}

double Entropy(const Eigen::VectorXd& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.0) s += w(i) * std::log(w(i));
  }
  return s;
}

SelectionMoments SelectionQuadrature(double intercept,
                                     const Eigen::VectorXd& selection_coef,
                                     double xs_coef, int pool) {
  // L = mean + s Z; X^S - 1 has covariance xs_coef with L, so by Stein's
  // lemma E[(X^S - 1) expit(L)] = xs_coef * E[expit'(L)].
  const double mean = intercept + selection_coef.sum() + xs_coef;
  const double sd = std::sqrt(selection_coef.squaredNorm() + xs_coef * xs_coef);
  const int steps = 20000;
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / steps;
  double e_expit = 0.0, e_slope = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double z = lo + k * h;
    const double weight = (k == 0 || k == steps ? 0.5 : 1.0) * h *
                          std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double p = Expit(mean + sd * z);
    e_expit += weight * p;
    e_slope += weight * p * (1.0 - p);
  }
  return {pool * e_expit, 1.0 + xs_coef * e_slope / e_expit};
}

}  // namespace privshift::oracle
