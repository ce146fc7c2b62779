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

#include "privshift/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "privshift/error.hpp"

namespace privshift {
namespace {

// Centred data columns (Y then X) and their means.
Eigen::MatrixXd CentredDataColumns(const DataMatrix& d) {
  Eigen::MatrixXd data = d.data_columns();
  Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;
  return data;
}

double SafeCorrelation(double cov, double var_a, double var_b) {
  if (var_a <= kDegenerateVarianceThreshold ||
      var_b <= kDegenerateVarianceThreshold) {
    return 0.0;
  }
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

}  // namespace

PrivacyBudget::PrivacyBudget(double epsilon, double delta)
    : epsilon_(epsilon), delta_(delta) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    Throw(ErrorCode::kInvalidBudget, "epsilon must be positive and finite");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    Throw(ErrorCode::kInvalidBudget, "delta must lie in (0, 1)");
  }
}

Fraction Fraction::Make(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num < 0) {
    Throw(ErrorCode::kInvalidArgument,
          "fraction needs a positive denominator and non-negative numerator");
  }
  std::int64_t g = std::gcd(num, den);
  if (g == 0) g = 1;
  return Fraction{num / g, den / g};
}

Fraction Fraction::operator+(const Fraction& other) const {
  std::int64_t l = std::lcm(den, other.den);
  return Make(num * (l / den) + other.num * (l / other.den), l);
}

bool Fraction::operator<=(const Fraction& other) const {
  // Three-way comparison of a/b and c/d through integer parts and reciprocal
  // remainders, so no product can overflow.
  std::int64_t a = num, b = den, c = other.num, d = other.den;
  int sign = 1;
  for (;;) {
    const std::int64_t qa = a / b, qc = c / d;
    if (qa != qc) return sign * (qa < qc ? -1 : 1) <= 0;
    const std::int64_t ra = a % b, rc = c % d;
    if (ra == 0 && rc == 0) return true;
    if (ra == 0) return -sign <= 0;
    if (rc == 0) return sign <= 0;
    a = b;
    b = ra;
    c = d;
    d = rc;
    sign = -sign;
  }
}

double Fraction::ToDouble() const {
  return static_cast<double>(num) / static_cast<double>(den);
}

BudgetLedger::BudgetLedger(PrivacyBudget total) : total_(total) {}

PrivacyBudget BudgetLedger::Charge(std::string label, Fraction share) {
  if (share.num <= 0) {
    Throw(ErrorCode::kInvalidBudget, "budget share must be positive");
  }
  Fraction next = spent_ + share;
  if (!(next <= Fraction{1, 1})) {
    Throw(ErrorCode::kInvalidBudget,
          "charging '" + label + "' would exceed the total privacy budget");
  }
  PrivacyBudget granted(total_.epsilon() * share.ToDouble(),
                        total_.delta() * share.ToDouble());
  allocations_.push_back(Allocation{std::move(label), share,
                                    granted.epsilon(), granted.delta()});
  spent_ = next;
  return granted;
}

double BudgetLedger::spent_epsilon() const {
  return total_.epsilon() * spent_.ToDouble();
}

double BudgetLedger::spent_delta() const {
  return total_.delta() * spent_.ToDouble();
}

double GaussianGamma(double sensitivity, const PrivacyBudget& budget) {
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) {
    Throw(ErrorCode::kInvalidArgument,
          "sensitivity must be finite and non-negative");
  }
  const double log_term = std::log(1.25 / budget.delta());
  if (!(log_term > 0.0)) {
    Throw(ErrorCode::kInvalidBudget, "delta must be below 1.25");
  }
  return sensitivity * std::sqrt(2.0 * log_term) / budget.epsilon();
}

Eigen::VectorXd GaussianMechanism(const Eigen::VectorXd& stat,
                                  double sensitivity,
                                  const PrivacyBudget& budget, Rng& rng) {
  const double gamma = GaussianGamma(sensitivity, budget);
  Eigen::VectorXd out = stat;
  if (gamma == 0.0) return out;
  std::normal_distribution<double> normal(0.0, gamma);
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += normal(rng);
  return out;
}

Eigen::VectorXd GaussianMechanism(const Eigen::VectorXd& stat,
                                  double sensitivity, BudgetLedger& ledger,
                                  std::string label, Fraction share, Rng& rng) {
  PrivacyBudget granted = ledger.Charge(std::move(label), share);
  return GaussianMechanism(stat, sensitivity, granted, rng);
}

double LooSensitivity(const DataMatrix& d, SensitivityBlock block) {
  const Eigen::Index m = d.rows();
  if (m < 3) {
    Throw(ErrorCode::kTooFewRows, "leave-one-out sensitivity needs m >= 3");
  }
  const Eigen::MatrixXd z = CentredDataColumns(d);
  const Eigen::Index q = z.cols();
  const double md = static_cast<double>(m);
  const double m1 = md - 1.0;

  if (block.kind != SensitivityBlock::Kind::kCorrelation &&
      (block.column < 0 || block.column >= q)) {
    Throw(ErrorCode::kInvalidArgument, "sensitivity column out of range");
  }

  switch (block.kind) {
    case SensitivityBlock::Kind::kMean:
      return z.col(block.column).cwiseAbs().maxCoeff() / m1;
    case SensitivityBlock::Kind::kVariance: {
      const auto col = z.col(block.column);
      const double ssq = col.squaredNorm();
      const double v = ssq / md;
      double worst = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        const double shift = col(k) / m1;
        const double v_loo = (ssq - col(k) * col(k)) / m1 - shift * shift;
        worst = std::max(worst, std::abs(v_loo - v));
      }
      return worst;
    }
    case SensitivityBlock::Kind::kCorrelation: {
      if (q < 2) return 0.0;
      const Eigen::MatrixXd cross = z.transpose() * z;
      Eigen::MatrixXd base = Eigen::MatrixXd::Identity(q, q);
      for (Eigen::Index l = 0; l < q; ++l) {
        for (Eigen::Index j = l + 1; j < q; ++j) {
          base(l, j) = SafeCorrelation(cross(l, j) / md, cross(l, l) / md,
                                       cross(j, j) / md);
        }
      }
      Eigen::VectorXd var_loo(q);
      Eigen::VectorXd shift(q);
      double worst = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        const auto row = z.row(k);
        for (Eigen::Index l = 0; l < q; ++l) {
          shift(l) = row(l) / m1;
          var_loo(l) = (cross(l, l) - row(l) * row(l)) / m1 - shift(l) * shift(l);
        }
        double sq = 0.0;
        for (Eigen::Index l = 0; l < q; ++l) {
          for (Eigen::Index j = l + 1; j < q; ++j) {
            const double cov_loo =
                (cross(l, j) - row(l) * row(j)) / m1 - shift(l) * shift(j);
            const double diff =
                SafeCorrelation(cov_loo, var_loo(l), var_loo(j)) - base(l, j);
            sq += diff * diff;
          }
        }
        worst = std::max(worst, sq);
      }
      return std::sqrt(worst);
    }
  }
  return 0.0;
}

BudgetLedger AllocateBudget(const PrivacyBudget& total, int p) {
  if (p < 1) Throw(ErrorCode::kInvalidArgument, "p must be >= 1");
  const std::int64_t pp = p;
  const std::int64_t den = pp * pp + 5 * pp + 4;
  BudgetLedger ledger(total);
  const Fraction element = Fraction::Make(2, den);
  for (int j = 0; j <= p; ++j) {
    ledger.Charge("mean[" + std::to_string(j) + "]", element);
  }
  for (int j = 0; j <= p; ++j) {
    ledger.Charge("variance[" + std::to_string(j) + "]", element);
  }
  ledger.Charge("correlation", Fraction::Make(pp * pp + pp, den));
  return ledger;
}

int UpperTriangleStatisticCount(int p) { return (p * p + 5 * p + 2) / 2; }

DpGramResult DpGramTransform(const DataMatrix& d, const PrivacyBudget& budget,
                             Rng& rng, const DpGramOptions& options) {
  if (d.rows() < 3) {
    Throw(ErrorCode::kTooFewRows, "DP gram transform needs m >= 3");
  }
  const int p = static_cast<int>(d.covariate_count());
  const Eigen::Index q = d.data_column_count();
  const MomentSummary exact = SummarizeMoments(d);
  const BudgetLedger plan = AllocateBudget(budget, p);
  const auto& planned = plan.allocations();

  BudgetLedger ledger(budget);
  MomentSummary noisy;
  noisy.mu.resize(q);
  noisy.sigma2.resize(q);
  Eigen::VectorXd mean_sens(q);
  Eigen::VectorXd var_sens(q);

  std::size_t slot = 0;
  for (Eigen::Index j = 0; j < q; ++j, ++slot) {
    mean_sens(j) =
        LooSensitivity(d, SensitivityBlock::Mean(static_cast<int>(j)));
    Eigen::VectorXd v = GaussianMechanism(
        Eigen::VectorXd::Constant(1, exact.mu(j)), mean_sens(j), ledger,
        planned[slot].label, planned[slot].share, rng);
    noisy.mu(j) = v(0);
  }
  for (Eigen::Index j = 0; j < q; ++j, ++slot) {
    var_sens(j) =
        LooSensitivity(d, SensitivityBlock::Variance(static_cast<int>(j)));
    Eigen::VectorXd v = GaussianMechanism(
        Eigen::VectorXd::Constant(1, exact.sigma2(j)), var_sens(j), ledger,
        planned[slot].label, planned[slot].share, rng);
    const double floor =
        exact.sigma2(j) > 0.0 ? 1e-8 * exact.sigma2(j) : 1e-8;
    noisy.sigma2(j) = std::max(v(0), floor);
  }

  const Eigen::Index pairs = q * (q - 1) / 2;
  Eigen::VectorXd upper(pairs);
  for (Eigen::Index l = 0, t = 0; l < q; ++l) {
    for (Eigen::Index j = l + 1; j < q; ++j) upper(t++) = exact.corr(l, j);
  }
  const double corr_sens = LooSensitivity(d, SensitivityBlock::Correlation());
  Eigen::VectorXd upper_dp =
      GaussianMechanism(upper, corr_sens, ledger, planned[slot].label,
                        planned[slot].share, rng);
  noisy.corr = Eigen::MatrixXd::Identity(q, q);
  for (Eigen::Index l = 0, t = 0; l < q; ++l) {
    for (Eigen::Index j = l + 1; j < q; ++j, ++t) {
      const double r = std::clamp(upper_dp(t), -1.0, 1.0);
      noisy.corr(l, j) = r;
      noisy.corr(j, l) = r;
    }
  }

  if (options.clip_eigenvalues) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(noisy.corr);
    Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(1e-8);
    Eigen::MatrixXd r = eig.eigenvectors() * lambda.asDiagonal() *
                        eig.eigenvectors().transpose();
    Eigen::VectorXd inv_sd = r.diagonal().cwiseSqrt().cwiseInverse();
    r = inv_sd.asDiagonal() * r * inv_sd.asDiagonal();
    for (Eigen::Index l = 0; l < q; ++l) {
      r(l, l) = 1.0;
      for (Eigen::Index j = l + 1; j < q; ++j) {
        const double v = std::clamp(r(l, j), -1.0, 1.0);
        r(l, j) = v;
        r(j, l) = v;
      }
    }
    noisy.corr = r;
  }

  GramMatrix gram =
      ReconstructGram(noisy, d.rows(), Provenance::kDp, d.column_names());
  return DpGramResult{std::move(gram), std::move(ledger), std::move(noisy),
                      std::move(mean_sens), std::move(var_sens), corr_sens};
}

NoiseSpec NoiseSpec::Scalar(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    Throw(ErrorCode::kInvalidArgument, "noise variance must be >= 0");
  }
  NoiseSpec spec;
  spec.scalar_ = lambda;
  return spec;
}

NoiseSpec NoiseSpec::PerColumn(Eigen::VectorXd variances) {
  if (!variances.allFinite() || (variances.array() < 0.0).any()) {
    Throw(ErrorCode::kInvalidArgument, "noise variances must be >= 0");
  }
  NoiseSpec spec;
  spec.per_column_ = std::move(variances);
  return spec;
}

NoiseSpec NoiseSpec::EmpiricalVariance(const DataMatrix& d) {
  Eigen::MatrixXd z = CentredDataColumns(d);
  Eigen::VectorXd v =
      z.colwise().squaredNorm().transpose() / static_cast<double>(d.rows());
  return PerColumn(std::move(v));
}

Eigen::VectorXd NoiseSpec::Resolve(Eigen::Index data_columns) const {
  if (scalar_) return Eigen::VectorXd::Constant(data_columns, *scalar_);
  if (per_column_.size() != data_columns) {
    Throw(ErrorCode::kInvalidArgument,
          "noise spec length does not match the data columns");
  }
  return per_column_;
}

DataMatrix AddEntryNoise(const DataMatrix& d, const NoiseSpec& noise,
                         Rng& rng) {
  const Eigen::VectorXd var = noise.Resolve(d.data_column_count());
  Eigen::MatrixXd values = d.values();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index j = 0; j < var.size(); ++j) {
    if (var(j) == 0.0) continue;
    const double sd = std::sqrt(var(j));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      values(i, j + 1) += sd * normal(rng);
    }
  }
  return DataMatrix(std::move(values), d.column_names());
}

GramMatrix EnTransform(const DataMatrix& d, const NoiseSpec& noise, Rng& rng) {
  const GramMatrix g = ComputeGram(AddEntryNoise(d, noise, rng));
  return GramMatrix(g.entries(), g.m(), Provenance::kEntryNoise,
                    g.column_names());
}

}  // namespace privshift
