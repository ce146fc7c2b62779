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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "privshift/core_model.hpp"
#include "privshift/error.hpp"
#include "privshift/estimators.hpp"
#include "privshift/random.hpp"

namespace privshift {
namespace {

Eigen::VectorXi Bits(unsigned mask, int n) {
  Eigen::VectorXi t(n);
  for (int i = 0; i < n; ++i) t(i) = static_cast<int>((mask >> i) & 1u);
  return t;
}

Eigen::VectorXd Observed(const Eigen::VectorXd& yt, const Eigen::VectorXd& yc,
                         const Eigen::VectorXi& t) {
  Eigen::VectorXd y(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) y(i) = t(i) == 1 ? yt(i) : yc(i);
  return y;
}

RctSample Simple(std::vector<double> y, std::vector<int> t, double pi = 0.5) {
  const auto n = static_cast<Eigen::Index>(y.size());
  return RctSample(Eigen::Map<Eigen::VectorXd>(y.data(), n),
                   Eigen::Map<Eigen::VectorXi>(t.data(), n),
                   Eigen::MatrixXd::Zero(n, 0), pi);
}

// Linear potential outcomes with covariates, treatment by a Bernoulli draw
// forced to keep both arms.
struct Population {
  Eigen::MatrixXd x;
  Eigen::VectorXd yc;
  Eigen::VectorXd yt;
};

Population MakePopulation(Eigen::Index n, Eigen::Index p, double noise, Rng& rng) {
  Population pop;
  pop.x = StandardNormalMatrix(n, p, rng);
  Eigen::VectorXd beta = Eigen::VectorXd::LinSpaced(p, 1.0, 0.2);
  pop.yc = (0.5 + (pop.x * beta).array()).matrix() +
           noise * StandardNormalMatrix(n, 1, rng);
  pop.yt = pop.yc.array() + 0.5;
  return pop;
}

RctSample Assign(const Population& pop, double pi, Rng& rng) {
  const Eigen::Index n = pop.x.rows();
  for (;;) {
    Eigen::VectorXi t(n);
    for (Eigen::Index i = 0; i < n; ++i) t(i) = Bernoulli(rng, pi) ? 1 : 0;
    if (t.sum() == 0 || t.sum() == n) continue;
    return RctSample(Observed(pop.yt, pop.yc, t), t, pop.x, pi);
  }
}

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

TEST(RctSample, Validation) {
  EXPECT_EQ(CodeOf([] { Simple({1, 2}, {1, 1}); }), ErrorCode::kEmptyArm);
  EXPECT_EQ(CodeOf([] { Simple({1, 2}, {1, 2}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { Simple({1, 2}, {1, 0}, 1.0); }),
            ErrorCode::kInvalidArgument);
  const RctSample s = Simple({1, 2, 3}, {1, 0, 1});
  const std::vector<Eigen::Index> rows{0, 0, 2};
  EXPECT_EQ(CodeOf([&] { s.Subsample(rows); }), ErrorCode::kEmptyArm);
  const std::vector<Eigen::Index> mixed{1, 0, 0};
  const RctSample sub = s.Subsample(mixed);
  EXPECT_EQ(sub.treated_count(), 2);
  EXPECT_EQ(sub.y()(0), 2.0);
}

TEST(NormalCriticalValue, NinetyFive) {
  EXPECT_NEAR(NormalCriticalValue(0.95), 1.959964, 1e-6);
  EstimateResult r;
  r.tau_hat = 1.0;
  r.variance = 0.25;
  AttachNormalCi(r, 0.95);
  EXPECT_NEAR(*r.ci_low, 1.0 - 0.5 * 1.959964, 1e-6);
  EXPECT_NEAR(*r.ci_high, 1.0 + 0.5 * 1.959964, 1e-6);
}

TEST(DiffInMeans, Examples) {
  const EstimateResult r = DiffInMeans(Simple({2, 4, 1, 3}, {1, 1, 0, 0}));
  EXPECT_DOUBLE_EQ(r.tau_hat, 1.0);
  ASSERT_TRUE(r.variance.has_value());
  EXPECT_DOUBLE_EQ(*r.variance, 2.0 / 2.0 + 2.0 / 2.0);
  EXPECT_LE(*r.ci_low, r.tau_hat);
  EXPECT_GE(*r.ci_high, r.tau_hat);
  const EstimateResult flat = DiffInMeans(Simple({5, 5, 5, 5}, {1, 0, 1, 0}));
  EXPECT_EQ(flat.tau_hat, 0.0);
  EXPECT_EQ(*flat.variance, 0.0);
}

TEST(DiffInMeans, BalancedEnumerationOfConstantEffect) {
  const Eigen::VectorXd yc = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd yt = Eigen::VectorXd::Ones(4);
  double total = 0.0;
  int count = 0;
  for (unsigned mask = 0; mask < 16; ++mask) {
    const Eigen::VectorXi t = Bits(mask, 4);
    if (t.sum() != 2) continue;
    total += DiffInMeans(RctSample(Observed(yt, yc, t), t,
                                   Eigen::MatrixXd::Zero(4, 0), 0.5))
                 .tau_hat;
    ++count;
  }
  EXPECT_EQ(count, 6);
  EXPECT_EQ(total / count, 1.0);
}

TEST(Unbiasedness, BalancedEnumerationAtEight) {
  Rng rng(5);
  const int n = 8;
  const Eigen::VectorXd yc = StandardNormalMatrix(n, 1, rng);
  const Eigen::VectorXd yt = yc + StandardNormalMatrix(n, 1, rng);
  const Eigen::VectorXd f = StandardNormalMatrix(n, 1, rng);
  const double sate = (yt - yc).mean();
  double dm = 0.0, ipw = 0.0, fipw = 0.0;
  int count = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    const Eigen::VectorXi t = Bits(mask, n);
    if (t.sum() != n / 2) continue;
    const RctSample s(Observed(yt, yc, t), t, Eigen::MatrixXd::Zero(n, 0), 0.5);
    dm += DiffInMeans(s).tau_hat;
    ipw += IpwEstimate(s).tau_hat;
    fipw += FipwEstimate(s, f).tau_hat;
    ++count;
  }
  EXPECT_NEAR(dm / count, sate, 1e-12);
  EXPECT_NEAR(ipw / count, sate, 1e-12);
  EXPECT_NEAR(fipw / count, sate, 1e-12);
}

TEST(RegressionAdjusted, NoCovariatesEqualsDiffInMeans) {
  Rng rng(12);
  const Population pop = MakePopulation(40, 2, 1.0, rng);
  const RctSample s = Assign(pop, 0.5, rng);
  EXPECT_NEAR(RegressionAdjusted(s, Eigen::MatrixXd::Zero(s.n(), 0)).tau_hat,
              DiffInMeans(s).tau_hat, 1e-10);
}

TEST(RegressionAdjusted, OrthogonalCovariateLeavesEstimate) {
  Rng rng(13);
  const RctSample s = Simple({1.0, 2.5, 0.3, 4.0, 2.2, -1.0, 0.7, 3.1},
                             {1, 1, 1, 1, 0, 0, 0, 0});
  Eigen::MatrixXd basis(8, 3);
  basis.col(0).setOnes();
  basis.col(1) = s.treatment().cast<double>();
  basis.col(2) = s.y();
  Eigen::VectorXd z = StandardNormalMatrix(8, 1, rng);
  z -= basis * basis.colPivHouseholderQr().solve(z);
  const double base = RegressionAdjusted(s, Eigen::MatrixXd::Zero(8, 0)).tau_hat;
  EXPECT_NEAR(RegressionAdjusted(s, z).tau_hat, base, 1e-10);
}

TEST(RegressionAdjusted, MatchesLeastSquaresOracle) {
  Rng rng(14);
  const Population pop = MakePopulation(60, 4, 0.5, rng);
  const RctSample s = Assign(pop, 0.5, rng);
  Eigen::MatrixXd design(s.n(), 5);
  design << s.treatment().cast<double>(), s.x();
  const Eigen::VectorXd ref = oracle::LeastSquares(design, s.y());
  EXPECT_NEAR(RegressionAdjusted(s, s.x()).tau_hat, ref(1), 1e-10);
}

TEST(RegressionAdjusted, SingularDesign) {
  const RctSample s = Simple({1, 2, 3, 4, 5, 6}, {1, 0, 1, 0, 1, 0});
  Eigen::MatrixXd z(6, 2);
  z.col(0) << 1, 2, 3, 4, 5, 7;
  z.col(1) = 2.0 * z.col(0);
  EXPECT_EQ(CodeOf([&] { RegressionAdjusted(s, z); }), ErrorCode::kSingularSystem);
}

TEST(IpwEstimate, Examples) {
  EXPECT_DOUBLE_EQ(IpwEstimate(Simple({3, 1}, {1, 0})).tau_hat, 2.0);
  EXPECT_EQ(IpwEstimate(Simple({0, 0, 0}, {1, 0, 1}, 0.3)).tau_hat, 0.0);
  const RctSample s = Simple({1.0, 2.5, 0.3, 4.0, 2.2, -1.0}, {1, 0, 1, 0, 1, 0});
  EXPECT_NEAR(IpwEstimate(s).tau_hat, DiffInMeans(s).tau_hat, 1e-14);
}

TEST(Calibration, UniformWhenTargetIsSampleMean) {
  Rng rng(20);
  const Eigen::MatrixXd g = StandardNormalMatrix(30, 3, rng);
  const CalibrationWeights w =
      SolveCalibrationWeights(g, g.colwise().mean().transpose());
  EXPECT_LE((w.w.array() - 1.0 / 30.0).abs().maxCoeff(), 1e-10);
}

TEST(Calibration, DeterminedTwoPointCase) {
  Eigen::MatrixXd g(2, 1);
  g << 0, 1;
  const CalibrationWeights w =
      SolveCalibrationWeights(g, Eigen::VectorXd::Constant(1, 0.75));
  EXPECT_NEAR(w.w(0), 0.25, 1e-10);
  EXPECT_NEAR(w.w(1), 0.75, 1e-10);
}

TEST(Calibration, OutsideHullIsInfeasible) {
  Eigen::MatrixXd g(4, 1);
  g << 0, 1, 2, 3;
  try {
    SolveCalibrationWeights(g, Eigen::VectorXd::Constant(1, 3.5));
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
    EXPECT_GT(e.constraint_residual(), 1e-8);
  }
}

TEST(Calibration, DualMatchesPrimalOracle) {
  Rng rng(21);
  std::uniform_int_distribution<int> pick_n(8, 50);
  std::uniform_int_distribution<int> pick_r(1, 5);
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = pick_n(rng);
    const int r = pick_r(rng);
    const Eigen::MatrixXd g = StandardNormalMatrix(n, r, rng);
    Eigen::VectorXd w0(n);
    for (int i = 0; i < n; ++i) w0(i) = unif(rng);
    w0 /= w0.sum();
    const Eigen::VectorXd target = g.transpose() * w0;
    const CalibrationWeights dual = SolveCalibrationWeights(g, target);
    EXPECT_TRUE((dual.w.array() >= 0.0).all());
    EXPECT_NEAR(dual.w.sum(), 1.0, 1e-10);
    EXPECT_LE((g.transpose() * dual.w - target).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(dual.constraint_residual, 1e-8);
    const Eigen::VectorXd primal = oracle::PrimalEntropyWeights(g, target, w0);
    EXPECT_NEAR(oracle::Entropy(dual.w), oracle::Entropy(primal), 1e-6);
    EXPECT_LE(oracle::Entropy(dual.w), oracle::Entropy(w0) + 1e-12);
  }
}

TEST(Calibration, FeaturesAndTargets) {
  Rng rng(22);
  const Eigen::Index m = 50;
  const DataMatrix aux = DataMatrix::FromParts(StandardNormalMatrix(m, 1, rng),
                                               StandardNormalMatrix(m, 2, rng));
  const GramMatrix g = ComputeGram(aux);
  const std::vector<int> cols{2, 3};
  const Eigen::VectorXd first = CalibrationTarget(g, cols, CalibrationMoments::kFirst);
  const Eigen::VectorXd both =
      CalibrationTarget(g, cols, CalibrationMoments::kFirstAndSecond);
  const Eigen::MatrixXd x = aux.covariates();
  EXPECT_LE((first - x.colwise().mean().transpose()).cwiseAbs().maxCoeff(), 1e-14);
  ASSERT_EQ(both.size(), 4);
  EXPECT_NEAR(both(2), x.col(0).squaredNorm() / m, 1e-13);
  const Eigen::MatrixXd feat = CalibrationFeatures(x, CalibrationMoments::kFirstAndSecond);
  ASSERT_EQ(feat.cols(), 4);
  EXPECT_EQ(feat(3, 3), x(3, 1) * x(3, 1));
  const std::vector<int> bad{0};
  EXPECT_THROW(CalibrationTarget(g, bad, CalibrationMoments::kFirst), Error);
}

TEST(CwEstimate, Identities) {
  const RctSample s = Simple({1.0, 2.5, 0.3, 4.0, 2.2, -1.0}, {1, 0, 1, 0, 1, 0});
  CalibrationWeights uniform;
  uniform.w = Eigen::VectorXd::Constant(6, 1.0 / 6.0);
  EXPECT_NEAR(CwEstimate(s, uniform).tau_hat, DiffInMeans(s).tau_hat, 1e-14);
  CalibrationWeights point;
  point.w = Eigen::VectorXd::Zero(6);
  point.w(2) = 1.0;
  EXPECT_DOUBLE_EQ(CwEstimate(s, point).tau_hat, 2.0 * 0.3);
}

TEST(CwEstimate, ConstantShift) {
  Rng rng(23);
  const Population pop = MakePopulation(20, 1, 1.0, rng);
  const RctSample s = Assign(pop, 0.4, rng);
  CalibrationWeights w;
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  w.w.resize(s.n());
  for (Eigen::Index i = 0; i < s.n(); ++i) w.w(i) = unif(rng);
  w.w /= w.w.sum();
  const double c = 1.7;
  const RctSample shifted(s.y().array() + c, s.treatment(), s.x(), s.pi());
  double factor = 0.0;
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    factor += w.w(i) * (s.is_treated(i) ? 1.0 / s.pi() : -1.0 / (1.0 - s.pi()));
  }
  EXPECT_NEAR(CwEstimate(shifted, w).tau_hat - CwEstimate(s, w).tau_hat, c * factor,
              1e-12);
}

TEST(AcwEstimate, ZeroResidualCase) {
  Rng rng(24);
  const Eigen::Index n = 30;
  const Eigen::MatrixXd x = StandardNormalMatrix(n, 2, rng);
  const Eigen::Vector2d bc(1.0, -0.5), bt(2.0, 0.5);
  const Eigen::VectorXd yc = (0.2 + (x * bc).array()).matrix();
  const Eigen::VectorXd yt = (1.0 + (x * bt).array()).matrix();
  Eigen::VectorXi t(n);
  for (Eigen::Index i = 0; i < n; ++i) t(i) = static_cast<int>(i % 2);
  const RctSample s(Observed(yt, yc, t), t, x, 0.5);
  CalibrationWeights w;
  w.w = Eigen::VectorXd::Constant(n, 1.0 / n);
  const Eigen::Vector2d aux_mu(0.3, -0.2);
  EXPECT_NEAR(AcwEstimate(s, w, aux_mu).tau_hat, (bt - bc).dot(aux_mu) + 0.8, 1e-10);
}

TEST(AcwEstimate, NoShiftTracksRegression) {
  Rng rng(25);
  const Population pop = MakePopulation(400, 3, 0.5, rng);
  const RctSample s = Assign(pop, 0.5, rng);
  const Eigen::VectorXd mu = s.x().colwise().mean().transpose();
  const EstimateResult acw = AcwFromMeans(s, mu);
  EXPECT_NEAR(acw.tau_hat, RegressionAdjusted(s, s.x()).tau_hat, 0.02);
  EXPECT_NEAR(acw.diagnostics.at("ess"), 400.0, 1e-6);
}

TEST(FipwEstimate, Reductions) {
  const RctSample s = Simple({1.0, 2.5, 0.3, 4.0, 2.2, -1.0}, {1, 0, 1, 0, 1, 0});
  EXPECT_EQ(FipwEstimate(s, Eigen::VectorXd::Zero(6)).tau_hat, IpwEstimate(s).tau_hat);
  EXPECT_NEAR(FipwEstimate(s, Eigen::VectorXd::Constant(6, 3.3)).tau_hat,
              IpwEstimate(s).tau_hat, 1e-14);
}

TEST(FipwEstimate, OracleImputationRecoversSateForEveryAssignment) {
  Rng rng(26);
  const int n = 6;
  const Eigen::VectorXd yc = StandardNormalMatrix(n, 1, rng);
  const Eigen::VectorXd yt = yc + StandardNormalMatrix(n, 1, rng);
  const double sate = (yt - yc).mean();
  for (double pi : {0.5, 0.3}) {
    // m_i = (1 - pi) y_t + pi y_c; at pi = .5 the two weightings coincide.
    const Eigen::VectorXd m = (1.0 - pi) * yt + pi * yc;
    int count = 0;
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
      const Eigen::VectorXi t = Bits(mask, n);
      const RctSample s(Observed(yt, yc, t), t, Eigen::MatrixXd::Zero(n, 0), pi);
      EXPECT_NEAR(FipwEstimate(s, m).tau_hat, sate, 1e-12);
      ++count;
    }
    EXPECT_EQ(count, 62);
  }
}

TEST(LoopEstimate, ShiftInvariance) {
  Rng rng(27);
  const Population pop = MakePopulation(40, 3, 0.5, rng);
  const RctSample s = Assign(pop, 0.5, rng);
  const Eigen::VectorXd pred = pop.yc + 0.3 * StandardNormalMatrix(40, 1, rng);
  const double base = LoopEstimate(s, pred).tau_hat;
  EXPECT_NEAR(LoopEstimate(s, (pred.array() + 12.5).matrix()).tau_hat, base, 1e-10);
}

TEST(LoopEstimate, OraclePredictionIsExact) {
  Rng rng(28);
  const Population pop = MakePopulation(30, 2, 0.0, rng);
  const Eigen::VectorXd m = 0.5 * pop.yt + 0.5 * pop.yc;
  const Eigen::VectorXd pred = (3.0 * m.array() + 1.0).matrix();
  for (int a = 0; a < 10; ++a) {
    const RctSample s = Assign(pop, 0.5, rng);
    EXPECT_NEAR(LoopEstimate(s, pred).tau_hat, 0.5, 1e-8);
  }
}

TEST(LoopEstimate, NoisePredictionFavoursCovariateModel) {
  Rng rng(29);
  const Population pop = MakePopulation(100, 3, 0.1, rng);
  const RctSample s = Assign(pop, 0.5, rng);
  const Eigen::VectorXd noise = StandardNormalMatrix(100, 1, rng);
  const EstimateResult r = LoopEstimate(s, noise);
  EXPECT_LE(r.diagnostics.at("alpha_treated"), 0.2);
  EXPECT_LE(r.diagnostics.at("alpha_control"), 0.2);
  EXPECT_EQ(r.diagnostics.at("rct_covariates"), 3.0);
}

TEST(LoopEstimate, RequiresSixUnits) {
  const RctSample s = Simple({1, 2, 3, 4, 5}, {1, 0, 1, 0, 1});
  EXPECT_THROW(LoopEstimate(s, Eigen::VectorXd::Zero(5)), Error);
}

TEST(BootstrapCi, ConstantOutcomeHasZeroWidth) {
  const RctSample s = Simple({2, 2, 2, 2, 2, 2, 2, 2}, {1, 0, 1, 0, 1, 0, 1, 0});
  Rng rng(1);
  const BootstrapResult b = BootstrapCi(
      [](const RctSample& r) { return DiffInMeans(r); }, s, 0.0, 50, 0.95, rng);
  EXPECT_EQ(b.ci_low, 0.0);
  EXPECT_EQ(b.ci_high, 0.0);
}

TEST(BootstrapCi, DeterministicAndCountsFailures) {
  Rng data_rng(30);
  const Population pop = MakePopulation(12, 1, 1.0, data_rng);
  const RctSample s = Assign(pop, 0.5, data_rng);
  const Estimator dm = [](const RctSample& r) { return DiffInMeans(r); };
  const double point = DiffInMeans(s).tau_hat;
  Rng a(77), b(77);
  const BootstrapResult ra = BootstrapCi(dm, s, point, 100, 0.95, a);
  const BootstrapResult rb = BootstrapCi(dm, s, point, 100, 0.95, b);
  EXPECT_EQ(ra.ci_low, rb.ci_low);
  EXPECT_EQ(ra.ci_high, rb.ci_high);
  EXPECT_EQ(ra.successes + ra.failures, 100);
  EXPECT_NEAR(ra.ci_high - point, 1.959964 * ra.standard_error, 1e-6);

  const Estimator broken = [](const RctSample&) -> EstimateResult {
    throw InfeasibleError("never", 1.0, 0);
  };
  Rng c(1);
  EXPECT_EQ(CodeOf([&] { BootstrapCi(broken, s, point, 10, 0.95, c); }),
            ErrorCode::kAllReplicatesFailed);
}

}  // namespace
}  // namespace privshift
