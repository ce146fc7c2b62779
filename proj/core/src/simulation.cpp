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

#include "privshift/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

#include "privshift/error.hpp"
#include "privshift/synthesis.hpp"

namespace privshift {
namespace {

constexpr std::uint64_t kGeneralizationStudy = 1;
constexpr std::uint64_t kPrecisionStudy = 2;
constexpr std::uint64_t kCoefficientStream = 0;
constexpr std::uint64_t kReplicationStream = 1;
constexpr std::uint64_t kTransformStream = 2;
constexpr std::uint64_t kResampleStream = 3;
constexpr int kMaxRedraws = 1000;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename Fn>
void ParallelFor(int count, int threads, Fn&& fn) {
  int workers = threads > 0 ? threads
                            : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, count));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Indices of `count` entries chosen uniformly without replacement, sorted.
std::vector<int> ChooseSupport(int p, int count, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

int RoundedShare(double share, int p) {
  return static_cast<int>(std::floor(share * p + 0.5));
}

Eigen::VectorXd SparseVector(int p, double share, double value, Rng& rng) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
  for (int j : ChooseSupport(p, RoundedShare(share, p), rng)) v(j) = value;
  return v;
}

double Expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double SampleVariance(const std::vector<double>& v) {
  if (v.size() < 2) return kNaN;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) /
                      static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

Eigen::VectorXd ToVector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

StudyRow BlankRow(const char* study, int p, std::string estimator,
                  std::string transform) {
  StudyRow row;
  row.study = study;
  row.p = p;
  row.estimator = std::move(estimator);
  row.transform = std::move(transform);
  row.mse = row.bias2 = row.variance = kNaN;
  row.coverage = row.var_tau = row.re_dm = row.re_reg = kNaN;
  return row;
}

bool Covers(const EstimateResult& r, double truth) {
  return r.ci_low && r.ci_high && *r.ci_low <= truth && truth <= *r.ci_high;
}

// Estimates and coverage indicators for one generalization estimator.
struct CoverageSeries {
  std::vector<double> estimates;
  int covered = 0;
  int failures = 0;
};

StudyRow SummarizeCoverage(const char* study, int p, std::string estimator,
                           std::string transform, const CoverageSeries& s,
                           double truth) {
  StudyRow row = BlankRow(study, p, std::move(estimator), std::move(transform));
  row.failures = s.failures;
  if (!s.estimates.empty()) {
    const MseParts parts = MseDecompose(ToVector(s.estimates), truth);
    row.mse = parts.mse;
    row.bias2 = parts.bias2;
    row.variance = parts.variance;
    row.coverage = static_cast<double>(s.covered) /
                   static_cast<double>(s.estimates.size());
  }
  return row;
}

Eigen::MatrixXd SelectColumns(const Eigen::MatrixXd& x,
                              const std::vector<int>& columns) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = x.col(columns[k]);
  }
  return out;
}

std::string FormatParameter(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", value);
  return buf;
}

double ParseNumber(std::string_view text, std::string_view token) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    Throw(ErrorCode::kInvalidArgument,
          "bad number in transform '" + std::string(token) + "'");
  }
  return v;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::string TransformSpec::Label() const {
  switch (kind) {
    case Kind::kGram:
      return "gram";
    case Kind::kEntryNoise:
      return "en:" + FormatParameter(parameter);
    case Kind::kDp:
      return "dp:" + FormatParameter(parameter);
    case Kind::kSynthetic:
      return "synth";
  }
  return "unknown";
}

std::vector<TransformSpec> ParseTransformList(std::string_view list,
                                              double default_lambda) {
  std::vector<TransformSpec> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t comma = list.find(',', start);
    if (comma == std::string_view::npos) comma = list.size();
    const std::string_view token = Trim(list.substr(start, comma - start));
    start = comma + 1;
    if (token.empty()) {
      if (comma == list.size()) break;
      Throw(ErrorCode::kInvalidArgument, "empty entry in transform list");
    }
    const std::size_t colon = token.find(':');
    const std::string_view name = token.substr(0, colon);
    const std::optional<std::string_view> arg =
        colon == std::string_view::npos
            ? std::nullopt
            : std::optional<std::string_view>(token.substr(colon + 1));
    TransformSpec spec;
    if (name == "gram" && !arg) {
      spec.kind = TransformSpec::Kind::kGram;
    } else if (name == "en") {
      spec.kind = TransformSpec::Kind::kEntryNoise;
      spec.parameter = arg ? ParseNumber(*arg, token) : default_lambda;
      if (spec.parameter < 0.0) {
        Throw(ErrorCode::kInvalidArgument, "entry-noise variance must be >= 0");
      }
    } else if (name == "dp" && arg) {
      spec.kind = TransformSpec::Kind::kDp;
      spec.parameter = ParseNumber(*arg, token);
      if (spec.parameter <= 0.0) {
        Throw(ErrorCode::kInvalidBudget, "dp epsilon must be positive");
      }
    } else if (name == "synth" && !arg) {
      spec.kind = TransformSpec::Kind::kSynthetic;
    } else {
      Throw(ErrorCode::kInvalidArgument,
            "unknown transform '" + std::string(token) +
                "' (expected gram, en[:lambda], dp:<epsilon> or synth)");
    }
    out.push_back(spec);
    if (comma == list.size()) break;
  }
  return out;
}

GramMatrix ApplyTransform(const DataMatrix& aux, const TransformSpec& spec,
                          double delta, Rng& rng) {
  switch (spec.kind) {
    case TransformSpec::Kind::kGram:
      return ComputeGram(aux);
    case TransformSpec::Kind::kEntryNoise:
      return EnTransform(aux, NoiseSpec::Scalar(spec.parameter), rng);
    case TransformSpec::Kind::kDp:
      return DpGramTransform(aux, PrivacyBudget(spec.parameter, delta), rng).gram;
    case TransformSpec::Kind::kSynthetic: {
      const DataMatrix synthetic =
          Synthesize(FitSequential(aux), aux.rows(), rng);
      const GramMatrix g = ComputeGram(synthetic);
      return GramMatrix(g.entries(), g.m(), Provenance::kSyntheticDerived,
                        aux.column_names());
    }
  }
  Throw(ErrorCode::kInvalidArgument, "unknown transform kind");
}

void Validate(const GeneralizationConfig& cfg) {
  if (cfg.p < 1) Throw(ErrorCode::kInvalidArgument, "p must be positive");
  if (cfg.candidate_pool < 2) {
    Throw(ErrorCode::kInvalidArgument, "candidate_pool must be at least 2");
  }
  if (cfg.m_aux < cfg.p + 4) {
    Throw(ErrorCode::kInvalidArgument, "m_aux must exceed p + 3");
  }
  if (cfg.reps < 1) Throw(ErrorCode::kInvalidArgument, "reps must be positive");
  if (cfg.bootstrap_B < 2) {
    Throw(ErrorCode::kInvalidArgument, "bootstrap_B must be at least 2");
  }
  if (cfg.en_lambda < 0.0) {
    Throw(ErrorCode::kInvalidArgument, "en_lambda must be >= 0");
  }
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    Throw(ErrorCode::kInvalidBudget, "delta must be in (0,1)");
  }
  if (cfg.threads < 0) Throw(ErrorCode::kInvalidArgument, "threads must be >= 0");
}

void Validate(const PrecisionConfig& cfg) {
  if (cfg.p < 1) Throw(ErrorCode::kInvalidArgument, "p must be positive");
  if (cfg.n < 6) Throw(ErrorCode::kInvalidArgument, "n must be at least 6");
  if (cfg.m_aux < cfg.p + 4) {
    Throw(ErrorCode::kInvalidArgument, "m_aux must exceed p + 3");
  }
  if (cfg.generations < 1) {
    Throw(ErrorCode::kInvalidArgument, "generations must be positive");
  }
  if (cfg.assignments < 2) {
    Throw(ErrorCode::kInvalidArgument, "assignments must be at least 2");
  }
  if (cfg.max_rct_covariates < 0 || cfg.max_rct_covariates > cfg.n - 3) {
    Throw(ErrorCode::kInvalidArgument,
          "max_rct_covariates must be in [0, n - 3]");
  }
  if (cfg.en_lambda < 0.0) {
    Throw(ErrorCode::kInvalidArgument, "en_lambda must be >= 0");
  }
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    Throw(ErrorCode::kInvalidBudget, "delta must be in (0,1)");
  }
  if (cfg.threads < 0) Throw(ErrorCode::kInvalidArgument, "threads must be >= 0");
}

GeneralizationCoefficients DrawGeneralizationCoefficients(
    int p, std::uint64_t base_seed) {
  Rng rng = MakeRng(base_seed, {kGeneralizationStudy,
                                static_cast<std::uint64_t>(p),
                                kCoefficientStream});
  GeneralizationCoefficients c;
  c.selection = SparseVector(p, 0.5, -1.0 / (0.5 * p), rng);
  c.outcome = SparseVector(p, 0.6, std::sqrt(0.7 / (0.6 * p)), rng);
  return c;
}

Eigen::VectorXd DrawPrecisionCoefficients(int p, std::uint64_t base_seed) {
  Rng rng = MakeRng(base_seed, {kPrecisionStudy, static_cast<std::uint64_t>(p),
                                kCoefficientStream});
  return SparseVector(p, 0.6, std::sqrt(0.7 / (0.6 * p)), rng);
}

GeneralizationRep GenGeneralizationRep(const GeneralizationConfig& cfg,
                                       const GeneralizationCoefficients& coef,
                                       Rng& rng) {
  const int p = cfg.p;
  if (coef.selection.size() != p || coef.outcome.size() != p) {
    Throw(ErrorCode::kInvalidArgument, "coefficient length must equal p");
  }
  const double noise_sd = std::sqrt(kResidualVariance);
  const std::uint64_t stream = rng();
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    Rng draw = MakeRng(stream, {static_cast<std::uint64_t>(attempt)});
    const Eigen::Index pool = cfg.candidate_pool;
    Eigen::MatrixXd x = StandardNormalMatrix(pool, p, draw).array() + 1.0;
    Eigen::VectorXd xs = StandardNormalMatrix(pool, 1, draw).array() + 1.0;
    const Eigen::VectorXd logit =
        (x * coef.selection).array() + cfg.selection_intercept +
        cfg.xs_coefficient * xs.array();
    std::vector<Eigen::Index> selected;
    for (Eigen::Index i = 0; i < pool; ++i) {
      if (Bernoulli(draw, Expit(logit(i)))) selected.push_back(i);
    }
    const auto n = static_cast<Eigen::Index>(selected.size());
    Eigen::MatrixXd rct_x(n, p + 1);
    Eigen::VectorXd y(n);
    Eigen::VectorXi t(n);
    double sate = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const Eigen::Index i = selected[static_cast<std::size_t>(r)];
      rct_x.row(r).head(p) = x.row(i);
      rct_x(r, p) = xs(i);
      const double y_control =
          0.5 + x.row(i).dot(coef.outcome) + noise_sd * StandardNormal(draw);
      const double effect = kEffectModifierScale * xs(i);
      t(r) = Bernoulli(draw, 0.5) ? 1 : 0;
      y(r) = t(r) == 1 ? y_control + effect : y_control;
      sate += effect;
    }
    const Eigen::Index treated = t.sum();
    if (n < 2 || treated == 0 || treated == n) continue;

    Eigen::MatrixXd aux_x = StandardNormalMatrix(cfg.m_aux, p + 1, draw).array() + 1.0;
    Eigen::VectorXd aux_y(cfg.m_aux);
    for (Eigen::Index i = 0; i < cfg.m_aux; ++i) {
      aux_y(i) = 0.5 + aux_x.row(i).head(p).dot(coef.outcome) +
                 noise_sd * StandardNormal(draw);
    }
    std::vector<std::string> names = DefaultColumnNames(p);
    names.erase(names.begin());
    names.push_back("xs");
    return GeneralizationRep{
        RctSample(std::move(y), std::move(t), std::move(rct_x), 0.5),
        DataMatrix::FromParts(aux_y, aux_x, std::move(names)),
        sate / static_cast<double>(n), kTrueEffect, attempt};
  }
  Throw(ErrorCode::kDegenerateSample,
        "could not draw an RCT with both arms non-empty");
}

PrecisionGeneration GenPrecisionGeneration(const PrecisionConfig& cfg,
                                           const Eigen::VectorXd& beta,
                                           Rng& rng) {
  if (beta.size() != cfg.p) {
    Throw(ErrorCode::kInvalidArgument, "coefficient length must equal p");
  }
  const double noise_sd = std::sqrt(kResidualVariance);
  PrecisionGeneration g{Eigen::MatrixXd(), Eigen::VectorXd(), Eigen::VectorXd(),
                        DataMatrix(Eigen::MatrixXd::Ones(2, 3), {}),
                        kTrueEffect};
  g.rct_x = StandardNormalMatrix(cfg.n, cfg.p, rng);
  g.y_control = (g.rct_x * beta).array() + 0.5;
  g.y_control += noise_sd * StandardNormalMatrix(cfg.n, 1, rng);
  g.y_treated = g.y_control.array() + kTrueEffect;

  const Eigen::MatrixXd aux_x = StandardNormalMatrix(cfg.m_aux, cfg.p, rng);
  Eigen::VectorXd aux_y = (aux_x * beta).array() + 0.5;
  aux_y += noise_sd * StandardNormalMatrix(cfg.m_aux, 1, rng);
  g.aux = DataMatrix::FromParts(aux_y, aux_x);
  return g;
}

std::vector<int> SelectRctCovariates(const Eigen::VectorXd& beta, int cap) {
  const int p = static_cast<int>(beta.size());
  std::vector<int> columns;
  if (p <= cap) {
    columns.resize(static_cast<std::size_t>(p));
    std::iota(columns.begin(), columns.end(), 0);
    return columns;
  }
  for (int j = 0; j < p && static_cast<int>(columns.size()) < cap; ++j) {
    if (beta(j) != 0.0) columns.push_back(j);
  }
  for (int j = 0; j < p && static_cast<int>(columns.size()) < cap; ++j) {
    if (beta(j) == 0.0) columns.push_back(j);
  }
  std::sort(columns.begin(), columns.end());
  return columns;
}

MseParts MseDecompose(const Eigen::VectorXd& estimates, double truth) {
  if (estimates.size() == 0) {
    Throw(ErrorCode::kInvalidArgument, "MseDecompose needs estimates");
  }
  MseParts out;
  const double mean = estimates.mean();
  out.mse = (estimates.array() - truth).square().mean();
  out.bias2 = (mean - truth) * (mean - truth);
  out.variance = out.mse - out.bias2;
  return out;
}

StudyResults RunGeneralizationStudy(const GeneralizationConfig& cfg) {
  Validate(cfg);
  const auto coef = DrawGeneralizationCoefficients(cfg.p, cfg.base_seed);
  const std::size_t nt = cfg.transforms.size();

  struct RepOutcome {
    std::optional<EstimateResult> dm, ols;
    std::vector<std::optional<EstimateResult>> acw;
    double sate = 0.0;
    double n = 0.0;
    int redraws = 0;
  };
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(cfg.reps));

  ParallelFor(cfg.reps, cfg.threads, [&](int rep) {
    const std::uint64_t seed =
        DeriveSeed(cfg.base_seed, {kGeneralizationStudy,
                                   static_cast<std::uint64_t>(cfg.p),
                                   kReplicationStream,
                                   static_cast<std::uint64_t>(rep)});
    Rng rng(seed);
    RepOutcome& out = outcomes[static_cast<std::size_t>(rep)];
    out.acw.resize(nt);
    const GeneralizationRep data = GenGeneralizationRep(cfg, coef, rng);
    out.sate = data.sate;
    out.n = static_cast<double>(data.rct.n());
    out.redraws = data.redraws;
    try {
      out.dm = DiffInMeans(data.rct);
    } catch (const Error&) {
    }
    try {
      out.ols = RegressionAdjusted(data.rct, data.rct.x());
    } catch (const Error&) {
    }
    for (std::size_t t = 0; t < nt; ++t) {
      try {
        Rng transform_rng = MakeRng(seed, {kTransformStream, t});
        const GramMatrix g =
            ApplyTransform(data.aux, cfg.transforms[t], cfg.delta, transform_rng);
        const Eigen::VectorXd aux_mu =
            g.entries().row(kInterceptColumn).tail(g.covariate_count()).transpose();
        EstimateResult r = AcwFromMeans(data.rct, aux_mu);
        Rng boot_rng = MakeRng(seed, {kResampleStream, t});
        const BootstrapResult boot = BootstrapCi(
            [&aux_mu](const RctSample& s) { return AcwFromMeans(s, aux_mu); },
            data.rct, r.tau_hat, cfg.bootstrap_B, 0.95, boot_rng);
        r.ci_low = boot.ci_low;
        r.ci_high = boot.ci_high;
        r.diagnostics["bootstrap_failures"] = boot.failures;
        out.acw[t] = std::move(r);
      } catch (const Error&) {
      }
    }
  });

  CoverageSeries dm, ols;
  std::vector<CoverageSeries> acw(nt);
  double sate_sum = 0.0, n_sum = 0.0;
  int redraws = 0;
  auto add = [](CoverageSeries& s, const std::optional<EstimateResult>& r) {
    if (!r) {
      ++s.failures;
      return;
    }
    s.estimates.push_back(r->tau_hat);
    if (Covers(*r, kTrueEffect)) ++s.covered;
  };
  for (const auto& o : outcomes) {
    add(dm, o.dm);
    add(ols, o.ols);
    for (std::size_t t = 0; t < nt; ++t) add(acw[t], o.acw[t]);
    sate_sum += o.sate;
    n_sum += o.n;
    redraws += o.redraws;
  }

  StudyResults results;
  const char* study = "generalization";
  results.rows.push_back(
      SummarizeCoverage(study, cfg.p, "dm", "none", dm, kTrueEffect));
  results.rows.push_back(
      SummarizeCoverage(study, cfg.p, "ols", "none", ols, kTrueEffect));
  for (std::size_t t = 0; t < nt; ++t) {
    results.rows.push_back(SummarizeCoverage(
        study, cfg.p, "acw", cfg.transforms[t].Label(), acw[t], kTrueEffect));
  }
  results.summary["reps"] = cfg.reps;
  results.summary["mean_sate"] = sate_sum / cfg.reps;
  results.summary["mean_n"] = n_sum / cfg.reps;
  results.summary["empty_arm_redraws"] = redraws;
  return results;
}

StudyResults RunPrecisionStudy(const PrecisionConfig& cfg) {
  Validate(cfg);
  Eigen::VectorXd beta = DrawPrecisionCoefficients(cfg.p, cfg.base_seed);
  if (cfg.null_signal) beta.setZero();
  const std::vector<int> rct_columns =
      SelectRctCovariates(beta, cfg.max_rct_covariates);
  std::vector<int> aux_columns(static_cast<std::size_t>(cfg.p));
  std::iota(aux_columns.begin(), aux_columns.end(), 2);
  const std::size_t nt = cfg.transforms.size();

  // Series layout: 0 = dm, 1 = ols, then ols_aux per transform, then loop per
  // transform.
  const std::size_t series = 2 + 2 * nt;
  auto aux_series = [](std::size_t t) { return 2 + t; };
  auto loop_series = [nt](std::size_t t) { return 2 + nt + t; };

  struct GenerationOutcome {
    std::vector<std::vector<double>> estimates;
    std::vector<int> failures;
    std::vector<bool> transform_ok;
  };
  std::vector<GenerationOutcome> outcomes(static_cast<std::size_t>(cfg.generations));

  ParallelFor(cfg.generations, cfg.threads, [&](int gen) {
    const std::uint64_t seed =
        DeriveSeed(cfg.base_seed, {kPrecisionStudy,
                                   static_cast<std::uint64_t>(cfg.p),
                                   kReplicationStream,
                                   static_cast<std::uint64_t>(gen)});
    Rng rng(seed);
    GenerationOutcome& out = outcomes[static_cast<std::size_t>(gen)];
    out.estimates.assign(series, {});
    out.failures.assign(series, 0);
    out.transform_ok.assign(nt, false);

    const PrecisionGeneration data = GenPrecisionGeneration(cfg, beta, rng);
    const Eigen::MatrixXd x_rct = SelectColumns(data.rct_x, rct_columns);

    std::vector<Eigen::MatrixXd> predictions(nt);
    for (std::size_t t = 0; t < nt; ++t) {
      try {
        Rng transform_rng = MakeRng(seed, {kTransformStream, t});
        const GramMatrix g =
            ApplyTransform(data.aux, cfg.transforms[t], cfg.delta, transform_rng);
        const LinearModel model = OlsFromGram(g, kOutcomeColumn, aux_columns);
        predictions[t] = PredictRows(model, data.rct_x);
        out.transform_ok[t] = predictions[t].allFinite();
      } catch (const Error&) {
      }
    }

    const Eigen::Index n = cfg.n;
    for (int a = 0; a < cfg.assignments; ++a) {
      Rng assign_rng = MakeRng(seed, {kResampleStream, static_cast<std::uint64_t>(a)});
      Eigen::VectorXi t(n);
      do {
        for (Eigen::Index i = 0; i < n; ++i) {
          t(i) = Bernoulli(assign_rng, 0.5) ? 1 : 0;
        }
      } while (t.sum() == 0 || t.sum() == n);
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = t(i) == 1 ? data.y_treated(i) : data.y_control(i);
      }
      const RctSample s(std::move(y), std::move(t), x_rct, 0.5);

      auto record = [&](std::size_t k, auto&& estimate) {
        try {
          out.estimates[k].push_back(estimate().tau_hat);
        } catch (const Error&) {
          ++out.failures[k];
        }
      };
      record(0, [&] { return DiffInMeans(s); });
      record(1, [&] { return RegressionAdjusted(s, x_rct); });
      for (std::size_t k = 0; k < nt; ++k) {
        if (!out.transform_ok[k]) continue;
        record(aux_series(k), [&] { return RegressionAdjusted(s, predictions[k]); });
        if (cfg.include_loop) {
          record(loop_series(k),
                 [&] {
                   LoopOptions options;
                   options.max_rct_covariates = cfg.max_rct_covariates;
                   return LoopEstimate(s, predictions[k].col(0), options);
                 });
        }
      }
    }
  });

  // Per-generation variances, then averages across generations.
  struct Accumulator {
    std::vector<double> pooled;
    double var_sum = 0.0, re_dm_sum = 0.0, re_reg_sum = 0.0;
    int generations = 0;
    int failures = 0;
  };
  std::vector<Accumulator> acc(series);
  for (const auto& o : outcomes) {
    const double var_dm = SampleVariance(o.estimates[0]);
    const double var_ols = SampleVariance(o.estimates[1]);
    for (std::size_t k = 0; k < series; ++k) {
      Accumulator& a = acc[k];
      a.failures += o.failures[k];
      const bool transform_series = k >= 2;
      if (transform_series && !o.transform_ok[(k - 2) % nt]) {
        ++a.failures;
        continue;
      }
      if (transform_series && k >= 2 + nt && !cfg.include_loop) continue;
      const double v = SampleVariance(o.estimates[k]);
      if (!std::isfinite(v) || !(v > 0.0)) {
        ++a.failures;
        continue;
      }
      a.pooled.insert(a.pooled.end(), o.estimates[k].begin(), o.estimates[k].end());
      a.var_sum += v;
      a.re_dm_sum += var_dm / v;
      a.re_reg_sum += var_ols / v;
      ++a.generations;
    }
  }

  StudyResults results;
  const char* study = "precision";
  auto make_row = [&](std::size_t k, std::string estimator, std::string transform) {
    StudyRow row = BlankRow(study, cfg.p, std::move(estimator), std::move(transform));
    const Accumulator& a = acc[k];
    row.failures = a.failures;
    if (a.generations > 0) {
      const MseParts parts = MseDecompose(ToVector(a.pooled), kTrueEffect);
      row.mse = parts.mse;
      row.bias2 = parts.bias2;
      row.variance = parts.variance;
      row.var_tau = a.var_sum / a.generations;
      row.re_dm = a.re_dm_sum / a.generations;
      row.re_reg = a.re_reg_sum / a.generations;
    }
    return row;
  };
  results.rows.push_back(make_row(0, "dm", "none"));
  results.rows.push_back(make_row(1, "ols", "none"));
  for (std::size_t t = 0; t < nt; ++t) {
    results.rows.push_back(
        make_row(aux_series(t), "ols_aux", cfg.transforms[t].Label()));
  }
  if (cfg.include_loop) {
    for (std::size_t t = 0; t < nt; ++t) {
      results.rows.push_back(
          make_row(loop_series(t), "loop", cfg.transforms[t].Label()));
    }
  }
  results.summary["generations"] = cfg.generations;
  results.summary["assignments"] = cfg.assignments;
  results.summary["rct_covariates"] = static_cast<double>(rct_columns.size());
  return results;
}

}  // namespace privshift
