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

#include "cli.hpp"

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <algorithm>
#include <map>

#include "CLI11.hpp"
#include "privshift/core_model.hpp"
#include "privshift/error.hpp"
#include "privshift/estimators.hpp"
#include "privshift/io.hpp"
#include "privshift/privacy.hpp"
#include "privshift/report.hpp"
#include "privshift/simulation.hpp"
#include "privshift/synthesis.hpp"

namespace privshift::cli {
namespace {

constexpr const char* kGeneralizationTransforms = "gram,en:1,dp:1,dp:3,dp:6,synth";
constexpr const char* kPrecisionTransforms =
    "gram,en:1,dp:1,dp:3,dp:6,dp:10,dp:15,synth";

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidBudget:
    case ErrorCode::kSchema:
    case ErrorCode::kTooFewRows:
    case ErrorCode::kEmptyArm:
      return kExitConfig;
    case ErrorCode::kIo:
      return kExitIo;
    case ErrorCode::kDegenerateColumn:
    case ErrorCode::kSingularSystem:
    case ErrorCode::kInfeasible:
    case ErrorCode::kAllReplicatesFailed:
    case ErrorCode::kDegenerateSample:
      return kExitNumerical;
  }
  return kExitNumerical;
}

std::string FormatSetting(double v) { return FormatReal(v); }

std::filesystem::path ManifestPath(const std::string& output) {
  return std::filesystem::path(output + ".manifest.json");
}

// --seed wins; otherwise PRIVSHIFT_SEED; otherwise a fresh random seed so that
// privacy noise is never predictable by default.
std::uint64_t ResolveSeed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("PRIVSHIFT_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || errno == ERANGE) {
      Throw(ErrorCode::kInvalidArgument,
            "PRIVSHIFT_SEED must be an unsigned 64-bit integer");
    }
    return v;
  }
  std::random_device device;
  return (static_cast<std::uint64_t>(device()) << 32) ^ device();
}

bool IsJsonPath(const std::string& path) {
  return std::filesystem::path(path).extension() == ".json";
}

GramMatrix LoadAuxiliary(const std::string& path, const std::string& outcome) {
  if (IsJsonPath(path)) return ParseGramArtifact(ReadFile(path)).gram;
  return ComputeGram(DataMatrixFromTable(ReadCsv(path), outcome));
}

struct Common {
  std::vector<std::string> arguments;
  std::ostream* out;
  std::ostream* err;
};

void WriteManifest(const std::string& output, const Common& common,
                   const std::string& command,
                   std::vector<std::pair<std::string, std::string>> settings,
                   std::uint64_t seed,
                   const std::map<std::string, double>& summary = {}) {
  RunManifest manifest;
  manifest.command = command;
  manifest.arguments = common.arguments;
  manifest.settings = std::move(settings);
  manifest.seed = seed;
  manifest.version = PRIVSHIFT_VERSION;
  manifest.summary = summary;
  WriteFileAtomic(ManifestPath(output), SerializeRunManifest(manifest));
}

struct TransformArgs {
  std::string input;
  std::string method;
  std::string outcome;
  std::optional<double> epsilon;
  double delta = 1e-5;
  double lambda = 1.0;
  std::optional<long long> rows;
  std::optional<std::uint64_t> seed;
  std::string output;
  bool clip_eigenvalues = false;
};

int RunTransform(const TransformArgs& a, const Common& common) {
  const DataMatrix d = DataMatrixFromTable(ReadCsv(a.input), a.outcome);
  const std::uint64_t seed = ResolveSeed(a.seed);
  Rng rng = MakeRng(seed, {});
  std::vector<std::pair<std::string, std::string>> settings{
      {"input", a.input}, {"method", a.method}, {"outcome", a.outcome},
      {"output", a.output}};

  if (a.method == "synth") {
    const Eigen::Index rows = a.rows ? static_cast<Eigen::Index>(*a.rows) : d.rows();
    const DataMatrix synthetic = Synthesize(FitSequential(d), rows, rng);
    settings.emplace_back("rows", std::to_string(rows));
    WriteFileAtomic(a.output, FormatCsv(TableFromDataMatrix(synthetic)));
    WriteManifest(a.output, common, "transform", std::move(settings), seed);
    return kExitOk;
  }

  std::optional<GramArtifact> artifact;
  if (a.method == "gram") {
    artifact = GramArtifact{ComputeGram(d), TransformRecord{"gram", {}, {}, {}},
                            seed, CurrentUtcTimestamp()};
  } else if (a.method == "en-gram") {
    if (a.lambda < 0.0) Throw(ErrorCode::kInvalidArgument, "--lambda must be >= 0");
    artifact = GramArtifact{EnTransform(d, NoiseSpec::Scalar(a.lambda), rng),
                            TransformRecord{"en", {}, {}, a.lambda}, seed,
                            CurrentUtcTimestamp()};
    settings.emplace_back("lambda", FormatSetting(a.lambda));
  } else if (a.method == "dp-gram") {
    if (!a.epsilon) Throw(ErrorCode::kInvalidArgument, "dp-gram needs --epsilon");
    DpGramOptions options;
    options.clip_eigenvalues = a.clip_eigenvalues;
    DpGramResult dp =
        DpGramTransform(d, PrivacyBudget(*a.epsilon, a.delta), rng, options);
    std::ostream& out = *common.out;
    out << "privacy budget ledger (epsilon=" << *a.epsilon
        << ", delta=" << a.delta << ")\n";
    for (const auto& alloc : dp.ledger.allocations()) {
      out << "  " << alloc.label << "  share " << alloc.share.num << "/"
          << alloc.share.den << "  epsilon " << FormatReal(alloc.epsilon)
          << "  delta " << FormatReal(alloc.delta) << "\n";
    }
    out << "  total spent: epsilon " << FormatReal(dp.ledger.spent_epsilon())
        << ", delta " << FormatReal(dp.ledger.spent_delta()) << "\n";
    artifact = GramArtifact{std::move(dp.gram),
                            TransformRecord{"dp", *a.epsilon, a.delta, {}}, seed,
                            CurrentUtcTimestamp()};
    settings.emplace_back("epsilon", FormatSetting(*a.epsilon));
    settings.emplace_back("delta", FormatSetting(a.delta));
    settings.emplace_back("clip_eigenvalues", a.clip_eigenvalues ? "true" : "false");
  } else {
    Throw(ErrorCode::kInvalidArgument, "unknown --method '" + a.method + "'");
  }
  WriteFileAtomic(a.output, SerializeGramArtifact(*artifact));
  WriteManifest(a.output, common, "transform", std::move(settings), seed);
  return kExitOk;
}

struct EstimateArgs {
  std::string rct;
  std::string aux;
  std::string estimator;
  std::string outcome = "y";
  std::string treatment = "t";
  double pi = 0.5;
  int bootstrap = 0;
  double level = 0.95;
  std::optional<std::uint64_t> seed;
  std::string output;
};

int RunEstimate(const EstimateArgs& a, const Common& common) {
  const CsvTable table = ReadCsv(a.rct);
  const Eigen::Index y_col = table.ColumnIndex(a.outcome);
  const Eigen::Index t_col = table.ColumnIndex(a.treatment);
  if (y_col == t_col) {
    Throw(ErrorCode::kInvalidArgument, "--outcome and --treatment must differ");
  }
  std::vector<std::string> covariate_names;
  std::vector<Eigen::Index> covariate_cols;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    if (c == y_col || c == t_col) continue;
    covariate_names.push_back(table.header[j]);
    covariate_cols.push_back(c);
  }
  const Eigen::Index n = table.values.rows();
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(covariate_cols.size()));
  for (std::size_t k = 0; k < covariate_cols.size(); ++k) {
    x.col(static_cast<Eigen::Index>(k)) = table.values.col(covariate_cols[k]);
  }
  Eigen::VectorXi t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = table.values(i, t_col);
    if (v != 0.0 && v != 1.0) {
      Throw(ErrorCode::kSchema, "treatment column must contain only 0 and 1");
    }
    t(i) = static_cast<int>(v);
  }
  const RctSample sample(table.values.col(y_col), std::move(t), x, a.pi);

  const bool needs_aux = a.estimator == "cw" || a.estimator == "acw" ||
                         a.estimator == "fipw" || a.estimator == "loop";
  if (needs_aux && a.aux.empty()) {
    Throw(ErrorCode::kInvalidArgument, "--estimator " + a.estimator + " needs --aux");
  }
  std::optional<GramMatrix> gram;
  std::vector<int> gram_columns;
  if (!a.aux.empty()) {
    gram = LoadAuxiliary(a.aux, a.outcome);
    for (const auto& name : covariate_names) {
      const auto& names = gram->column_names();
      auto it = std::find(names.begin() + 2, names.end(), name);
      if (it == names.end()) {
        Throw(ErrorCode::kSchema,
              "RCT covariate '" + name + "' is missing from the auxiliary data");
      }
      gram_columns.push_back(static_cast<int>(it - names.begin()));
    }
    if (gram_columns.empty()) {
      Throw(ErrorCode::kSchema, "auxiliary estimators need covariates");
    }
  }
  auto aux_prediction = [&] {
    const LinearModel model = OlsFromGram(*gram, kOutcomeColumn, gram_columns);
    return PredictRows(model, x);
  };

  // `working` is the sample handed to the estimator (and resampled by the
  // bootstrap). Auxiliary predictions ride along as covariate columns so
  // that each resampled unit keeps its own prediction.
  Eigen::MatrixXd working_x = x;
  Estimator estimator;
  if (a.estimator == "dm") {
    estimator = [](const RctSample& s) { return DiffInMeans(s); };
  } else if (a.estimator == "ols") {
    if (gram) working_x = aux_prediction();
    estimator = [](const RctSample& s) { return RegressionAdjusted(s, s.x()); };
  } else if (a.estimator == "cw" || a.estimator == "acw") {
    const Eigen::VectorXd target =
        CalibrationTarget(*gram, gram_columns, CalibrationMoments::kFirst);
    if (a.estimator == "cw") {
      estimator = [target](const RctSample& s) {
        return CwEstimate(s, SolveCalibrationWeights(s.x(), target));
      };
    } else {
      estimator = [target](const RctSample& s) {
        return AcwEstimate(s, SolveCalibrationWeights(s.x(), target), target);
      };
    }
  } else if (a.estimator == "fipw" || a.estimator == "loop") {
    working_x.conservativeResize(Eigen::NoChange, x.cols() + 1);
    working_x.col(x.cols()) = aux_prediction();
    const bool loop = a.estimator == "loop";
    estimator = [loop](const RctSample& s) {
      const Eigen::Index k = s.x().cols() - 1;
      const Eigen::VectorXd f = s.x().col(k);
      if (!loop) return FipwEstimate(s, f);
      return LoopEstimate(s.WithCovariates(s.x().leftCols(k)), f);
    };
  } else {
    Throw(ErrorCode::kInvalidArgument,
          "unknown --estimator '" + a.estimator + "'");
  }
  const RctSample working = sample.WithCovariates(std::move(working_x));

  const std::uint64_t seed = ResolveSeed(a.seed);
  EstimateResult result = estimator(working);
  if (result.variance) AttachNormalCi(result, a.level);
  if (a.bootstrap > 0) {
    Rng rng = MakeRng(seed, {});
    const BootstrapResult boot = BootstrapCi(estimator, working, result.tau_hat,
                                             a.bootstrap, a.level, rng);
    result.ci_low = boot.ci_low;
    result.ci_high = boot.ci_high;
    result.diagnostics["bootstrap_se"] = boot.standard_error;
    result.diagnostics["bootstrap_successes"] = boot.successes;
    result.diagnostics["bootstrap_failures"] = boot.failures;
  }
  const std::string text = SerializeEstimate(result);
  *common.out << text;
  if (!a.output.empty()) {
    WriteFileAtomic(a.output, text);
    WriteManifest(a.output, common, "estimate",
                  {{"rct", a.rct},
                   {"aux", a.aux},
                   {"estimator", a.estimator},
                   {"outcome", a.outcome},
                   {"treatment", a.treatment},
                   {"pi", FormatSetting(a.pi)},
                   {"bootstrap", std::to_string(a.bootstrap)},
                   {"level", FormatSetting(a.level)},
                   {"output", a.output}},
                  seed);
  }
  return kExitOk;
}

struct SimulateArgs {
  std::string study;
  int p = 10;
  int reps = 1000;
  int generations = 100;
  int assignments = 1000;
  int m = 1000;
  int n = 100;
  int candidate_pool = 1300;
  int bootstrap = 100;
  int max_rct_covariates = 20;
  std::string transforms;
  double lambda = 1.0;
  double delta = 1e-5;
  double selection_intercept = -2.0;
  double xs_coefficient = 0.5;
  bool no_loop = false;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::string output;
};

int RunSimulate(const SimulateArgs& a, const Common& common) {
  const std::uint64_t seed = ResolveSeed(a.seed);
  std::vector<std::pair<std::string, std::string>> settings{
      {"study", a.study}, {"p", std::to_string(a.p)}, {"m", std::to_string(a.m)}};
  StudyResults results;
  if (a.study == "generalization") {
    GeneralizationConfig cfg;
    cfg.p = a.p;
    cfg.candidate_pool = a.candidate_pool;
    cfg.m_aux = a.m;
    cfg.reps = a.reps;
    cfg.bootstrap_B = a.bootstrap;
    cfg.en_lambda = a.lambda;
    cfg.delta = a.delta;
    cfg.base_seed = seed;
    cfg.selection_intercept = a.selection_intercept;
    cfg.xs_coefficient = a.xs_coefficient;
    cfg.threads = a.threads;
    const std::string list =
        a.transforms.empty() ? kGeneralizationTransforms : a.transforms;
    cfg.transforms = ParseTransformList(list, a.lambda);
    Validate(cfg);
    settings.insert(settings.end(),
                    {{"reps", std::to_string(cfg.reps)},
                     {"candidate_pool", std::to_string(cfg.candidate_pool)},
                     {"bootstrap", std::to_string(cfg.bootstrap_B)},
                     {"transforms", list},
                     {"lambda", FormatSetting(cfg.en_lambda)},
                     {"delta", FormatSetting(cfg.delta)},
                     {"selection_intercept", FormatSetting(cfg.selection_intercept)},
                     {"xs_coefficient", FormatSetting(cfg.xs_coefficient)}});
    results = RunGeneralizationStudy(cfg);
  } else if (a.study == "precision") {
    PrecisionConfig cfg;
    cfg.p = a.p;
    cfg.n = a.n;
    cfg.m_aux = a.m;
    cfg.generations = a.generations;
    cfg.assignments = a.assignments;
    cfg.max_rct_covariates = a.max_rct_covariates;
    cfg.en_lambda = a.lambda;
    cfg.delta = a.delta;
    cfg.base_seed = seed;
    cfg.include_loop = !a.no_loop;
    cfg.threads = a.threads;
    const std::string list = a.transforms.empty() ? kPrecisionTransforms : a.transforms;
    cfg.transforms = ParseTransformList(list, a.lambda);
    Validate(cfg);
    settings.insert(settings.end(),
                    {{"n", std::to_string(cfg.n)},
                     {"generations", std::to_string(cfg.generations)},
                     {"assignments", std::to_string(cfg.assignments)},
                     {"max_rct_covariates", std::to_string(cfg.max_rct_covariates)},
                     {"transforms", list},
                     {"lambda", FormatSetting(cfg.en_lambda)},
                     {"delta", FormatSetting(cfg.delta)},
                     {"loop", cfg.include_loop ? "true" : "false"}});
    results = RunPrecisionStudy(cfg);
  } else {
    Throw(ErrorCode::kInvalidArgument,
          "--study must be generalization or precision");
  }
  settings.emplace_back("output", a.output);
  WriteFileAtomic(a.output, SerializeStudyResults(results));
  WriteManifest(a.output, common, "simulate", std::move(settings), seed,
                results.summary);
  *common.out << "wrote " << results.rows.size() << " rows to " << a.output
              << "\n";
  return kExitOk;
}

struct ReportArgs {
  std::string input;
  std::string format = "markdown";
  std::string table;
  std::string output;
};

int RunReport(const ReportArgs& a, const Common& common) {
  const ReportTable table = ParseReportTable(a.table);
  const ReportFormat format = ParseReportFormat(a.format);
  const std::string text =
      RenderReport(ParseStudyResults(ReadFile(a.input)), table, format);
  if (a.output.empty()) {
    *common.out << text;
  } else {
    WriteFileAtomic(a.output, text);
  }
  return kExitOk;
}

int Dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err, bool allow_replay);

int RunReplay(const std::string& manifest_path, std::ostream& out,
              std::ostream& err) {
  const RunManifest manifest = ParseRunManifest(ReadFile(manifest_path));
  if (manifest.arguments.empty() || manifest.arguments[0] == "replay") {
    Throw(ErrorCode::kSchema, "manifest does not record a replayable command");
  }
  std::vector<std::string> args = manifest.arguments;
  // The recorded seed is pinned so that runs that drew a fresh seed replay
  // exactly too.
  bool has_seed = false;
  for (const auto& arg : args) {
    if (arg == "--seed" || arg.rfind("--seed=", 0) == 0) has_seed = true;
  }
  if (!has_seed) {
    args.push_back("--seed");
    args.push_back(std::to_string(manifest.seed));
  }
  return Dispatch(args, out, err, false);
}

int Dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err, bool allow_replay) {
  CLI::App app{"Disclosure-limited auxiliary data for treatment effect estimation",
               "privshift"};
  app.set_version_flag("--version", PRIVSHIFT_VERSION);
  app.require_subcommand(1);
  const Common common{args, &out, &err};

  TransformArgs ta;
  auto* transform = app.add_subcommand(
      "transform", "Release a gram matrix or synthetic data from a CSV file");
  transform->add_option("--input", ta.input, "Input CSV")->required();
  transform->add_option("--method", ta.method, "gram, en-gram, dp-gram or synth")
      ->required()
      ->check(CLI::IsMember({"gram", "en-gram", "dp-gram", "synth"}));
  transform->add_option("--outcome", ta.outcome, "Outcome column name")->required();
  transform->add_option("--epsilon", ta.epsilon, "DP epsilon");
  transform->add_option("--delta", ta.delta, "DP delta")->capture_default_str();
  transform->add_option("--lambda", ta.lambda, "Entry-noise variance")
      ->capture_default_str();
  transform->add_option("--rows", ta.rows, "Synthetic rows (default: input rows)");
  transform->add_option("--seed", ta.seed, "Random seed");
  transform->add_option("--output", ta.output, "Output path")->required();
  transform->add_flag("--clip-eigenvalues", ta.clip_eigenvalues,
                      "Project the noisy correlation matrix onto the PSD cone");

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Estimate a treatment effect");
  estimate->add_option("--rct", ea.rct, "RCT CSV")->required();
  estimate->add_option("--aux", ea.aux, "Auxiliary gram artifact (.json) or CSV");
  estimate->add_option("--estimator", ea.estimator, "dm, ols, cw, acw, fipw, loop")
      ->required()
      ->check(CLI::IsMember({"dm", "ols", "cw", "acw", "fipw", "loop"}));
  estimate->add_option("--outcome", ea.outcome, "Outcome column")->capture_default_str();
  estimate->add_option("--treatment", ea.treatment, "Treatment column")
      ->capture_default_str();
  estimate->add_option("--pi", ea.pi, "Treatment probability")->capture_default_str();
  estimate->add_option("--bootstrap", ea.bootstrap, "Bootstrap replicates (0 = none)")
      ->check(CLI::NonNegativeNumber);
  estimate->add_option("--level", ea.level, "Confidence level")->capture_default_str();
  estimate->add_option("--seed", ea.seed, "Random seed");
  estimate->add_option("--output", ea.output, "Output JSON path");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation study");
  simulate->add_option("--study", sa.study, "generalization or precision")
      ->required()
      ->check(CLI::IsMember({"generalization", "precision"}));
  simulate->add_option("--p", sa.p, "Covariate count")->capture_default_str();
  simulate->add_option("--reps", sa.reps, "Generalization replications")
      ->capture_default_str();
  simulate->add_option("--generations", sa.generations, "Precision data generations")
      ->capture_default_str();
  simulate->add_option("--assignments", sa.assignments,
                       "Treatment assignments per generation")
      ->capture_default_str();
  simulate->add_option("--m", sa.m, "Auxiliary sample size")->capture_default_str();
  simulate->add_option("--n", sa.n, "RCT size (precision study)")->capture_default_str();
  simulate->add_option("--candidate-pool", sa.candidate_pool,
                       "Candidates screened for RCT selection")
      ->capture_default_str();
  simulate->add_option("--bootstrap", sa.bootstrap, "Bootstrap replicates for ACW")
      ->capture_default_str();
  simulate->add_option("--max-rct-covariates", sa.max_rct_covariates,
                       "Cap on RCT regression covariates")
      ->capture_default_str();
  simulate->add_option("--transforms", sa.transforms,
                       "Comma list of gram, en[:lambda], dp:<epsilon>, synth");
  simulate->add_option("--lambda", sa.lambda, "Default entry-noise variance")
      ->capture_default_str();
  simulate->add_option("--delta", sa.delta, "DP delta")->capture_default_str();
  simulate->add_option("--selection-intercept", sa.selection_intercept,
                       "Selection logit intercept")
      ->capture_default_str();
  simulate->add_option("--xs-coefficient", sa.xs_coefficient,
                       "Selection logit coefficient on the effect modifier")
      ->capture_default_str();
  simulate->add_flag("--no-loop", sa.no_loop, "Skip the LOOP estimator");
  simulate->add_option("--threads", sa.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  simulate->add_option("--seed", sa.seed, "Base seed");
  simulate->add_option("--output", sa.output, "Results CSV")->required();

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Render tables from study results");
  report->add_option("--input", ra.input, "Results CSV")->required();
  report->add_option("--format", ra.format, "markdown or csv")->capture_default_str();
  report->add_option("--table", ra.table, "coverage, mse or precision")->required();
  report->add_option("--output", ra.output, "Output path (default: stdout)");

  std::string manifest_path;
  CLI::App* replay = nullptr;
  if (allow_replay) {
    replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    replay->add_option("--manifest", manifest_path, "Run manifest JSON")->required();
  }

  std::vector<std::string> argv_storage{"privshift"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (transform->parsed()) return RunTransform(ta, common);
    if (estimate->parsed()) return RunEstimate(ea, common);
    if (simulate->parsed()) return RunSimulate(sa, common);
    if (report->parsed()) return RunReport(ra, common);
    if (replay && replay->parsed()) return RunReplay(manifest_path, out, err);
  } catch (const InfeasibleError& e) {
    err << "error: " << e.what() << "\nconstraint residual: "
        << FormatReal(e.constraint_residual()) << "\n";
    return kExitNumerical;
  } catch (const privshift::Error& e) {
    err << "error (" << ErrorCodeName(e.code()) << "): " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  return Dispatch(args, out, err, true);
}

}  // namespace privshift::cli
