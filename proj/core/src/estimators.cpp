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

#include "privshift/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include <boost/math/distributions/normal.hpp>

#include "privshift/error.hpp"

namespace privshift {
namespace {

double SampleVariance(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

// Unit-level IPW contrast T Y / pi - (1 - T) Y / (1 - pi) applied to `r`.
Eigen::VectorXd IpwTerms(const RctSample& s, const Eigen::VectorXd& r) {
  Eigen::VectorXd u(s.n());
  const double pi = s.pi();
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    u(i) = s.is_treated(i) ? r(i) / pi : -r(i) / (1.0 - pi);
  }
  return u;
}

std::vector<Eigen::Index> ArmRows(const RctSample& s, bool treated) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    if (s.is_treated(i) == treated) rows.push_back(i);
  }
  return rows;
}

Eigen::MatrixXd WithInterceptColumn(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  return design;
}

// Least squares of y on the design rows in `rows`; throws SingularSystem on
// rank deficiency.
Eigen::VectorXd FitRows(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                        const std::vector<Eigen::Index>& rows) {
  const auto k = design.cols();
  if (static_cast<Eigen::Index>(rows.size()) < k) {
    Throw(ErrorCode::kSingularSystem,
          "arm has fewer units than outcome-model parameters");
  }
  Eigen::MatrixXd z(static_cast<Eigen::Index>(rows.size()), k);
  Eigen::VectorXd yy(z.rows());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    z.row(r) = design.row(rows[static_cast<std::size_t>(r)]);
    yy(r) = y(rows[static_cast<std::size_t>(r)]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  if (qr.rank() < k) {
    Throw(ErrorCode::kSingularSystem, "arm outcome model is rank deficient");
  }
  return qr.solve(yy);
}

// Predictions for every unit from a fit on `rows`; units inside `rows` get
// their leave-one-out prediction via the hat-matrix identity.
Eigen::VectorXd LooArmPredictions(const Eigen::MatrixXd& design,
                                  const Eigen::VectorXd& y,
                                  const std::vector<Eigen::Index>& rows) {
  const auto k = design.cols();
  const auto n_arm = static_cast<Eigen::Index>(rows.size());
  if (n_arm <= k) {
    Throw(ErrorCode::kSingularSystem,
          "arm too small for leave-one-out outcome model");
  }
  Eigen::MatrixXd z(n_arm, k);
  for (Eigen::Index r = 0; r < n_arm; ++r) {
    z.row(r) = design.row(rows[static_cast<std::size_t>(r)]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  if (qr.rank() < k) {
    Throw(ErrorCode::kSingularSystem, "leave-one-out model is rank deficient");
  }
  Eigen::VectorXd yy(n_arm);
  for (Eigen::Index r = 0; r < n_arm; ++r) {
    yy(r) = y(rows[static_cast<std::size_t>(r)]);
  }
  const Eigen::VectorXd coef = qr.solve(yy);
  Eigen::VectorXd pred = design * coef;
  // Hat diagonal from the thin Q factor: h_rr = ||Q_r||^2.
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n_arm, k);
  for (Eigen::Index r = 0; r < n_arm; ++r) {
    const double h = q.row(r).squaredNorm();
    if (1.0 - h < 1e-10) {
      Throw(ErrorCode::kSingularSystem,
            "unit has leverage 1 in leave-one-out model");
    }
    const Eigen::Index i = rows[static_cast<std::size_t>(r)];
    pred(i) = (pred(i) - h * y(i)) / (1.0 - h);
  }
  return pred;
}

// Picks the grid weight alpha minimising the in-arm leave-one-out squared
// error of alpha * a + (1 - alpha) * b; ties go to the larger alpha.
double ChooseEnsembleWeight(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& y,
                            const std::vector<Eigen::Index>& rows,
                            double step) {
  const int steps = static_cast<int>(std::lround(1.0 / step));
  double best_alpha = 1.0;
  double best_err = std::numeric_limits<double>::infinity();
  for (int k = steps; k >= 0; --k) {
    const double alpha = static_cast<double>(k) / steps;
    double err = 0.0;
    for (Eigen::Index i : rows) {
      const double e = y(i) - (alpha * a(i) + (1.0 - alpha) * b(i));
      err += e * e;
    }
    if (err < best_err) {
      best_err = err;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

}  // namespace

RctSample::RctSample(Eigen::VectorXd y, Eigen::VectorXi treatment,
                     Eigen::MatrixXd x, double pi)
    : y_(std::move(y)), t_(std::move(treatment)), x_(std::move(x)), pi_(pi) {
  if (t_.size() != y_.size() || x_.rows() != y_.size()) {
    Throw(ErrorCode::kInvalidArgument,
          "RCT outcome, treatment and covariate lengths differ");
  }
  if (!(pi_ > 0.0 && pi_ < 1.0)) {
    Throw(ErrorCode::kInvalidArgument, "treatment probability must be in (0,1)");
  }
  if (!y_.allFinite() || !x_.allFinite()) {
    Throw(ErrorCode::kInvalidArgument, "RCT data has non-finite entries");
  }
  for (Eigen::Index i = 0; i < t_.size(); ++i) {
    if (t_(i) != 0 && t_(i) != 1) {
      Throw(ErrorCode::kInvalidArgument, "treatment must be 0 or 1");
    }
  }
  treated_ = t_.sum();
  if (treated_ == 0 || treated_ == n()) {
    Throw(ErrorCode::kEmptyArm,
          "RCT sample needs at least one treated and one control unit");
  }
}

RctSample RctSample::Subsample(std::span<const Eigen::Index> rows) const {
  const auto n_out = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(n_out);
  Eigen::VectorXi t(n_out);
  Eigen::MatrixXd x(n_out, x_.cols());
  for (Eigen::Index r = 0; r < n_out; ++r) {
    const Eigen::Index i = rows[static_cast<std::size_t>(r)];
    y(r) = y_(i);
    t(r) = t_(i);
    x.row(r) = x_.row(i);
  }
  return RctSample(std::move(y), std::move(t), std::move(x), pi_);
}

RctSample RctSample::WithCovariates(Eigen::MatrixXd x) const {
  return RctSample(y_, t_, std::move(x), pi_);
}

const char* EstimatorName(EstimatorId id) {
  switch (id) {
    case EstimatorId::kDiffInMeans:
      return "dm";
    case EstimatorId::kRegression:
      return "ols";
    case EstimatorId::kIpw:
      return "ipw";
    case EstimatorId::kCw:
      return "cw";
    case EstimatorId::kAcw:
      return "acw";
    case EstimatorId::kFipw:
      return "fipw";
    case EstimatorId::kLoop:
      return "loop";
  }
  return "unknown";
}

double NormalCriticalValue(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    Throw(ErrorCode::kInvalidArgument, "confidence level must be in (0,1)");
  }
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, 0.5 + level / 2.0);
}

void AttachNormalCi(EstimateResult& r, double level) {
  if (!r.variance) return;
  const double half = NormalCriticalValue(level) * std::sqrt(*r.variance);
  r.ci_low = r.tau_hat - half;
  r.ci_high = r.tau_hat + half;
}

EstimateResult DiffInMeans(const RctSample& s) {
  const auto treated = ArmRows(s, true);
  const auto control = ArmRows(s, false);
  Eigen::VectorXd yt(static_cast<Eigen::Index>(treated.size()));
  Eigen::VectorXd yc(static_cast<Eigen::Index>(control.size()));
  for (std::size_t k = 0; k < treated.size(); ++k) {
    yt(static_cast<Eigen::Index>(k)) = s.y()(treated[k]);
  }
  for (std::size_t k = 0; k < control.size(); ++k) {
    yc(static_cast<Eigen::Index>(k)) = s.y()(control[k]);
  }
  EstimateResult r;
  r.estimator = EstimatorId::kDiffInMeans;
  r.tau_hat = yt.mean() - yc.mean();
  r.variance = SampleVariance(yt) / static_cast<double>(yt.size()) +
               SampleVariance(yc) / static_cast<double>(yc.size());
  r.diagnostics["n_treated"] = static_cast<double>(yt.size());
  r.diagnostics["n_control"] = static_cast<double>(yc.size());
  AttachNormalCi(r);
  return r;
}

EstimateResult RegressionAdjusted(const RctSample& s,
                                  const Eigen::MatrixXd& covariates) {
  const Eigen::Index n = s.n();
  const Eigen::Index q = covariates.cols();
  if (covariates.rows() != n) {
    Throw(ErrorCode::kInvalidArgument, "covariate rows must match the sample");
  }
  if (q > n - 3) {
    Throw(ErrorCode::kInvalidArgument,
          "too many covariates for the residual degrees of freedom");
  }
  Eigen::MatrixXd design(n, q + 2);
  design.col(0).setOnes();
  design.col(1) = s.treatment().cast<double>();
  design.rightCols(q) = covariates;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < q + 2) {
    Throw(ErrorCode::kSingularSystem, "regression design is rank deficient");
  }
  const Eigen::VectorXd coef = qr.solve(s.y());
  const double rss = (s.y() - design * coef).squaredNorm();
  const double sigma2 = rss / static_cast<double>(n - q - 2);
  // [(X'X)^{-1}]_{11} through the triangular factor.
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(q + 2);
  e1(1) = 1.0;
  const Eigen::MatrixXd xtx = design.transpose() * design;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  const double v11 = ldlt.solve(e1)(1);

  EstimateResult r;
  r.estimator = EstimatorId::kRegression;
  r.tau_hat = coef(1);
  r.variance = std::max(0.0, sigma2 * v11);
  r.diagnostics["covariates"] = static_cast<double>(q);
  AttachNormalCi(r);
  return r;
}

EstimateResult IpwEstimate(const RctSample& s) {
  const Eigen::VectorXd u = IpwTerms(s, s.y());
  EstimateResult r;
  r.estimator = EstimatorId::kIpw;
  r.tau_hat = u.mean();
  r.variance = SampleVariance(u) / static_cast<double>(s.n());
  AttachNormalCi(r);
  return r;
}

CalibrationWeights SolveCalibrationWeights(const Eigen::MatrixXd& g_rct,
                                           const Eigen::VectorXd& target,
                                           const CalibrationOptions& options) {
  const Eigen::Index n = g_rct.rows();
  const Eigen::Index r = g_rct.cols();
  if (r < 1 || n < 1) {
    Throw(ErrorCode::kInvalidArgument, "calibration needs n >= 1 and r >= 1");
  }
  if (target.size() != r || !target.allFinite() || !g_rct.allFinite()) {
    Throw(ErrorCode::kInvalidArgument,
          "calibration target must be finite and match g(X) width");
  }
  const Eigen::MatrixXd centred = g_rct.rowwise() - target.transpose();

  // Dual objective log sum exp(eta' (g_i - target)) and its softmax weights.
  auto evaluate = [&](const Eigen::VectorXd& eta, Eigen::VectorXd* w) {
    Eigen::VectorXd a = centred * eta;
    const double amax = a.maxCoeff();
    Eigen::VectorXd e = (a.array() - amax).exp();
    const double total = e.sum();
    if (w) *w = e / total;
    return amax + std::log(total);
  };

  Eigen::VectorXd eta = Eigen::VectorXd::Zero(r);
  Eigen::VectorXd w;
  double f = evaluate(eta, &w);
  Eigen::VectorXd grad = centred.transpose() * w;
  int iter = 0;
  bool converged = grad.norm() <= options.gradient_tolerance;
  while (!converged && iter < options.max_iterations) {
    ++iter;
    Eigen::MatrixXd h = centred.transpose() * w.asDiagonal() * centred -
                        grad * grad.transpose();
    h.diagonal().array() += options.hessian_ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd step = -ldlt.solve(grad);
    if (!step.allFinite()) break;

    // Near the optimum the objective is flat to rounding, so a step that ties
    // on f but shrinks the gradient is also accepted.
    const double grad_norm = grad.norm();
    const double f_slack = 8.0 * std::numeric_limits<double>::epsilon() *
                           std::max(1.0, std::abs(f));
    double scale = 1.0;
    bool accepted = false;
    Eigen::VectorXd w_next;
    Eigen::VectorXd grad_next;
    for (int halving = 0; halving <= options.max_halvings; ++halving) {
      Eigen::VectorXd candidate = eta + scale * step;
      const double f_next = evaluate(candidate, &w_next);
      if (std::isfinite(f_next)) {
        grad_next = centred.transpose() * w_next;
        if (f_next < f ||
            (f_next <= f + f_slack && grad_next.norm() < grad_norm)) {
          eta = std::move(candidate);
          f = f_next;
          accepted = true;
          break;
        }
      }
      scale *= 0.5;
    }
    if (!accepted) break;
    w = std::move(w_next);
    grad = std::move(grad_next);
    converged = grad.norm() <= options.gradient_tolerance;
  }

  const double residual = grad.cwiseAbs().maxCoeff();
  if (!converged && !(residual <= options.feasibility_tolerance)) {
    std::ostringstream msg;
    msg << "calibration did not converge after " << iter
        << " Newton iterations (max constraint gap " << residual
        << "); target is outside the convex hull of g(X) or numerically so";
    throw InfeasibleError(msg.str(), residual, iter);
  }
  return CalibrationWeights{std::move(w), std::move(eta), residual, iter};
}

Eigen::MatrixXd CalibrationFeatures(const Eigen::MatrixXd& x,
                                    CalibrationMoments moments) {
  if (moments == CalibrationMoments::kFirst) return x;
  Eigen::MatrixXd g(x.rows(), 2 * x.cols());
  g.leftCols(x.cols()) = x;
  g.rightCols(x.cols()) = x.array().square().matrix();
  return g;
}

Eigen::VectorXd CalibrationTarget(const GramMatrix& g,
                                  std::span<const int> columns,
                                  CalibrationMoments moments) {
  const auto k = static_cast<Eigen::Index>(columns.size());
  const bool second = moments == CalibrationMoments::kFirstAndSecond;
  Eigen::VectorXd t(second ? 2 * k : k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const int c = columns[static_cast<std::size_t>(j)];
    if (c <= 0 || c >= g.dimension()) {
      Throw(ErrorCode::kInvalidArgument, "calibration column out of range");
    }
    t(j) = g(0, c);
    if (second) t(k + j) = g(c, c);
  }
  return t;
}

EstimateResult CwEstimate(const RctSample& s,
                          const CalibrationWeights& weights) {
  if (weights.w.size() != s.n()) {
    Throw(ErrorCode::kInvalidArgument, "weights length must match the sample");
  }
  EstimateResult r;
  r.estimator = EstimatorId::kCw;
  r.tau_hat = weights.w.dot(IpwTerms(s, s.y()));
  r.diagnostics["ess"] = 1.0 / weights.w.squaredNorm();
  r.diagnostics["constraint_residual"] = weights.constraint_residual;
  return r;
}

EstimateResult AcwEstimate(const RctSample& s, const CalibrationWeights& weights,
                           const Eigen::VectorXd& aux_mu) {
  if (weights.w.size() != s.n()) {
    Throw(ErrorCode::kInvalidArgument, "weights length must match the sample");
  }
  if (aux_mu.size() != s.x().cols() || !aux_mu.allFinite()) {
    Throw(ErrorCode::kInvalidArgument,
          "auxiliary means must be finite and match the covariate count");
  }
  const Eigen::MatrixXd design = WithInterceptColumn(s.x());
  const Eigen::VectorXd coef_t = FitRows(design, s.y(), ArmRows(s, true));
  const Eigen::VectorXd coef_c = FitRows(design, s.y(), ArmRows(s, false));

  const Eigen::VectorXd diff = coef_t - coef_c;
  const double augmentation = diff(0) + diff.tail(aux_mu.size()).dot(aux_mu);

  Eigen::VectorXd resid(s.n());
  const Eigen::VectorXd fit_t = design * coef_t;
  const Eigen::VectorXd fit_c = design * coef_c;
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    resid(i) = s.y()(i) - (s.is_treated(i) ? fit_t(i) : fit_c(i));
  }
  EstimateResult r;
  r.estimator = EstimatorId::kAcw;
  r.tau_hat = augmentation + weights.w.dot(IpwTerms(s, resid));
  r.diagnostics["augmentation"] = augmentation;
  r.diagnostics["ess"] = 1.0 / weights.w.squaredNorm();
  r.diagnostics["constraint_residual"] = weights.constraint_residual;
  return r;
}

EstimateResult AcwFromMeans(const RctSample& s, const Eigen::VectorXd& aux_mu) {
  const CalibrationWeights w = SolveCalibrationWeights(s.x(), aux_mu);
  return AcwEstimate(s, w, aux_mu);
}

EstimateResult FipwEstimate(const RctSample& s, const Eigen::VectorXd& f_hat) {
  if (f_hat.size() != s.n() || !f_hat.allFinite()) {
    Throw(ErrorCode::kInvalidArgument,
          "f_hat must be finite with one entry per unit");
  }
  const Eigen::VectorXd u = IpwTerms(s, s.y() - f_hat);
  EstimateResult r;
  r.estimator = EstimatorId::kFipw;
  r.tau_hat = u.mean();
  r.variance = SampleVariance(u) / static_cast<double>(s.n());
  AttachNormalCi(r);
  return r;
}

EstimateResult LoopEstimate(const RctSample& s, const Eigen::VectorXd& aux_pred,
                            const LoopOptions& options) {
  if (s.n() < 6) Throw(ErrorCode::kTooFewRows, "LOOP needs n >= 6");
  if (aux_pred.size() != s.n() || !aux_pred.allFinite()) {
    Throw(ErrorCode::kInvalidArgument,
          "auxiliary predictions must be finite with one entry per unit");
  }
  if (!(options.alpha_step > 0.0 && options.alpha_step <= 1.0)) {
    Throw(ErrorCode::kInvalidArgument, "alpha_step must be in (0, 1]");
  }
  const Eigen::Index q = std::min<Eigen::Index>(
      s.x().cols(), std::max(0, options.max_rct_covariates));

  Eigen::MatrixXd design_a(s.n(), 2);
  design_a.col(0).setOnes();
  design_a.col(1) = aux_pred;
  const Eigen::MatrixXd design_b = WithInterceptColumn(s.x().leftCols(q));

  const auto treated = ArmRows(s, true);
  const auto control = ArmRows(s, false);

  const Eigen::VectorXd a_t = LooArmPredictions(design_a, s.y(), treated);
  const Eigen::VectorXd b_t = LooArmPredictions(design_b, s.y(), treated);
  const Eigen::VectorXd a_c = LooArmPredictions(design_a, s.y(), control);
  const Eigen::VectorXd b_c = LooArmPredictions(design_b, s.y(), control);

  const double alpha_t =
      ChooseEnsembleWeight(a_t, b_t, s.y(), treated, options.alpha_step);
  const double alpha_c =
      ChooseEnsembleWeight(a_c, b_c, s.y(), control, options.alpha_step);

  const double pi = s.pi();
  const Eigen::VectorXd t_hat = alpha_t * a_t + (1.0 - alpha_t) * b_t;
  const Eigen::VectorXd c_hat = alpha_c * a_c + (1.0 - alpha_c) * b_c;
  const Eigen::VectorXd m_hat = (1.0 - pi) * t_hat + pi * c_hat;

  EstimateResult r = FipwEstimate(s, m_hat);
  r.estimator = EstimatorId::kLoop;
  r.diagnostics["alpha_treated"] = alpha_t;
  r.diagnostics["alpha_control"] = alpha_c;
  r.diagnostics["rct_covariates"] = static_cast<double>(q);
  return r;
}

BootstrapResult BootstrapCi(const Estimator& estimator, const RctSample& s,
                            double point_estimate, int replicates, double level,
                            Rng& rng) {
  if (replicates < 2) {
    Throw(ErrorCode::kInvalidArgument, "bootstrap needs at least 2 replicates");
  }
  const double z = NormalCriticalValue(level);
  const std::uint64_t stream = rng();
  const Eigen::Index n = s.n();
  std::vector<double> estimates;
  estimates.reserve(static_cast<std::size_t>(replicates));
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  BootstrapResult out;
  for (int b = 0; b < replicates; ++b) {
    Rng local = MakeRng(stream, {static_cast<std::uint64_t>(b)});
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    for (auto& row : rows) row = pick(local);
    try {
      const RctSample resampled = s.Subsample(rows);
      estimates.push_back(estimator(resampled).tau_hat);
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::kInfeasible:
        case ErrorCode::kSingularSystem:
        case ErrorCode::kEmptyArm:
          ++out.failures;
          break;
        default:
          throw;
      }
    }
  }
  out.successes = static_cast<int>(estimates.size());
  if (out.successes < 2) {
    Throw(ErrorCode::kAllReplicatesFailed,
          "fewer than two bootstrap replicates succeeded (" +
              std::to_string(out.failures) + " failed)");
  }
  Eigen::Map<const Eigen::VectorXd> est(estimates.data(),
                                        static_cast<Eigen::Index>(estimates.size()));
  out.standard_error = std::sqrt(SampleVariance(est));
  out.ci_low = point_estimate - z * out.standard_error;
  out.ci_high = point_estimate + z * out.standard_error;
  return out;
}

}  // namespace privshift
