// Copyright 2026 The svback Authors
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

#include "cli.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "svback/diagnostics.h"
#include "svback/embedding_store.h"
#include "svback/error.h"
#include "svback/evaluation.h"
#include "svback/plda_model.h"
#include "svback/scoring.h"
#include "svback/synthesis.h"
#include "svback/text_io.h"

namespace svback::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::vector<double> parse_ptar_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double p = 0.0;
    try {
      p = parse_double(item, "--ptar");
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (!(p > 0.0 && p < 1.0))
      throw UsageError("--ptar values must lie strictly between 0 and 1");
    out.push_back(p);
  }
  if (out.empty()) throw UsageError("--ptar needs at least one value");
  return out;
}

std::string dcf_key(double p) { return "DCF" + fmt("%g", p); }

PldaKind kind_for_backend(const std::string& backend) {
  if (backend == "plda") return PldaKind::kFull;
  if (backend == "dplda") return PldaKind::kDiagonal;
  throw UsageError("backend '" + backend + "' has no trainable parameters");
}

// Projects and re-length-normalizes; projected data is already centered.
EmbeddingSet project_and_normalize(const EmbeddingSet& set,
                                   const Matrix& projection) {
  const auto projected = apply_projection(set, projection);
  return preprocess(projected,
                    {Vector::Zero(projected.dim()), StatsSource::kLoadedFromFile});
}

// Reads `key=value` lines and turns them into `--key value` tokens.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config file '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(line_no) +
                       ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r\"");
      const auto b = s.find_last_not_of(" \t\r\"");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw UsageError(path + ":" + std::to_string(line_no) + ": empty key");
    if (value == "false") continue;
    tokens.push_back("--" + key);
    if (value != "true") tokens.push_back(value);
  }
  return tokens;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string provenance;
};

struct SynthArgs {
  std::string preset = "isotropic";
  int dim = 32;
  int speakers = 200;
  int utts = 5;
  int max_utts = 0;
  std::uint64_t seed = 0;
  std::string prefix = "spk";
  std::string out;
  std::string truth;
  std::string trials;
};

int run_synth(const SynthArgs& a, Context& ctx) {
  SynthSpec spec;
  try {
    spec = SynthSpec::from_preset(parse_preset(a.preset), a.dim, a.speakers,
                                  a.utts, a.seed);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (a.max_utts > 0) spec.max_utterances = a.max_utts;
  spec.id_prefix = a.prefix;
  spec.validate();
  const auto result = sample(spec);
  write_embeddings(result.embeddings, a.out, ctx.provenance);
  const std::string truth = a.truth.empty() ? a.out + ".truth" : a.truth;
  save_model(truth_model(spec), truth, ctx.provenance);
  if (!a.trials.empty())
    write_trials(make_trials(result.embeddings), a.trials, ctx.provenance);
  ctx.out << "wrote " << result.embeddings.size() << " embeddings from "
          << spec.speakers << " speakers (D=" << spec.dim << ", preset "
          << preset_name(spec.preset) << ") to " << a.out << "; truth model "
          << truth << '\n';
  return kExitOk;
}

struct PreprocessArgs {
  std::string in;
  std::string out;
  std::string mean_in;
  std::string mean_out;
};

int run_preprocess(const PreprocessArgs& a, Context& ctx) {
  const auto set = read_embeddings(a.in);
  const auto stats = a.mean_in.empty() ? compute_mean(set) : read_stats(a.mean_in);
  const auto out = preprocess(set, stats);
  write_embeddings(out, a.out, ctx.provenance);
  if (!a.mean_out.empty()) write_stats(stats, a.mean_out, ctx.provenance);
  ctx.out << "preprocessed " << out.size() << " embeddings ("
          << (a.mean_in.empty() ? "mean computed from input"
                                : "mean loaded from " + a.mean_in)
          << ")\n";
  return kExitOk;
}

struct TrainArgs {
  std::string in;
  std::string out;
  std::string backend = "plda";
  int iters = 10;
  bool early_stop = false;
  int ldadim = 0;
};

int run_train(const TrainArgs& a, Context& ctx) {
  const PldaKind kind = kind_for_backend(a.backend);
  auto set = read_embeddings(a.in);
  if (a.ldadim > 0) {
    const auto lda = lda_projection(compute_scatter(set), a.ldadim);
    save_projection(lda.projection, a.out + ".lda", ctx.provenance);
    set = project_and_normalize(set, lda.projection);
  }
  TrainOptions options;
  options.iterations = a.iters;
  options.early_stop = a.early_stop;
  const auto model = train(set, kind, options);
  save_model(model, a.out, ctx.provenance);
  ctx.out << "trained " << kind_name(kind) << " PLDA on " << set.size()
          << " utterances, " << set.speaker_groups().size()
          << " speakers, D=" << set.dim() << ", "
          << model.iterations_trained << " iterations; log-likelihood "
          << format_double(log_likelihood(model, set)) << '\n';
  return kExitOk;
}

struct ScoreArgs {
  std::string backend = "plda";
  std::string model;
  std::string embeddings;
  std::string trials;
  std::string out;
  std::string lda;
  std::string multi_session = "centroid";
  int threads = 1;
};

int run_score(const ScoreArgs& a, Context& ctx) {
  ScoringBackend backend = CosineBackend{};
  if (a.backend != "cosine") {
    const PldaKind kind = kind_for_backend(a.backend);
    if (a.model.empty())
      throw UsageError("--model is required for backend " + a.backend);
    auto model = load_model(a.model);
    if (model.kind != kind)
      throw Error("model " + a.model + " is " +
                  std::string(kind_name(model.kind)) + ", backend " +
                  a.backend + " expects " + std::string(kind_name(kind)));
    backend = std::move(model);
  }
  ScoreOptions options;
  options.threads = a.threads;
  if (a.multi_session == "centroid")
    options.policy = MultiSessionPolicy::kCentroidRenorm;
  else if (a.multi_session == "mean")
    options.policy = MultiSessionPolicy::kMeanScore;
  else
    throw UsageError("--multi-session must be 'centroid' or 'mean'");

  auto set = read_embeddings(a.embeddings);
  if (!a.lda.empty()) set = project_and_normalize(set, load_projection(a.lda));
  const auto trials = read_trials(a.trials);
  const auto scores = score_trials(backend, set, trials, options);
  write_scores(scores, a.out, ctx.provenance);
  ctx.out << "scored " << scores.trials.size() << " trials with backend "
          << a.backend << '\n';
  return kExitOk;
}

void print_report(std::ostream& os, const MetricReport& r) {
  os << "EER=" << fmt("%.10g", r.eer);
  for (const auto& [p, dcf] : r.min_dcf)
    os << ' ' << dcf_key(p) << '=' << fmt("%.10g", dcf.value);
  os << '\n';
  os << "  metric        value       threshold\n";
  os << "  EER%    " << fmt("%10.4f", 100.0 * r.eer) << "  "
     << fmt("%14.6g", r.eer_threshold) << '\n';
  for (const auto& [p, dcf] : r.min_dcf) {
    std::string key = dcf_key(p);
    key.resize(8, ' ');
    os << "  " << key << fmt("%10.4f", dcf.value) << "  "
       << fmt("%14.6g", dcf.threshold) << '\n';
  }
  os << "  targets=" << r.num_targets << " nontargets=" << r.num_nontargets
     << '\n';
}

struct EvalArgs {
  std::string scores;
  std::string trials;
  std::string ptar = "0.01,0.001";
  std::string roc;
};

int run_eval(const EvalArgs& a, Context& ctx) {
  const auto p_tars = parse_ptar_list(a.ptar);
  auto scores = read_scores(a.scores);
  if (!a.trials.empty()) attach_labels(scores, read_trials(a.trials));
  const auto report = evaluate(scores, p_tars);
  print_report(ctx.out, report);
  if (!a.roc.empty()) {
    const auto [tar, non] = split_by_label(scores);
    std::ofstream os(a.roc);
    if (!os) throw Error("cannot open '" + a.roc + "' for writing");
    write_comment_block(os, ctx.provenance);
    os << "threshold,p_miss,p_fa\n";
    for (const auto& p : operating_points(tar, non))
      os << format_double(p.threshold) << ',' << format_double(p.p_miss)
         << ',' << format_double(p.p_fa) << '\n';
  }
  return kExitOk;
}

struct DiagArgs {
  std::string in;
  std::string out_dir = ".";
  std::string norm = "n";
};

int run_diag(const DiagArgs& a, Context& ctx) {
  ScatterNormalization norm;
  if (a.norm == "n")
    norm = ScatterNormalization::kByUtterances;
  else if (a.norm == "m")
    norm = ScatterNormalization::kBySpeakers;
  else
    throw UsageError("--norm must be 'n' or 'm'");
  const auto scatter = compute_scatter(read_embeddings(a.in), norm);
  std::filesystem::create_directories(a.out_dir);
  const auto dir = std::filesystem::path(a.out_dir);
  export_heatmap(scatter.between, (dir / "between.csv").string(),
                 ctx.provenance);
  export_heatmap(scatter.within, (dir / "within.csv").string(),
                 ctx.provenance);
  const auto idx = diagonal_indices(scatter);
  auto show = [](const std::optional<double>& v) {
    return v ? fmt("%.6f", *v) : std::string("undefined");
  };
  ctx.out << "between_diagonal_index=" << show(idx.between_index)
          << " within_diagonal_index=" << show(idx.within_index) << '\n';
  return kExitOk;
}

struct SweepArgs {
  std::string train;
  std::string eval;
  std::string trials;
  std::string out;
  std::string backend = "plda";
  int iters = 10;
  std::string ptar = "0.01,0.001";
  int ldadim = 0;
  int threads = 1;
};

int run_sweep(const SweepArgs& a, Context& ctx) {
  const PldaKind kind = kind_for_backend(a.backend);
  const auto p_tars = parse_ptar_list(a.ptar);
  auto train_set = read_embeddings(a.train);
  auto eval_set = read_embeddings(a.eval);
  const auto trials = read_trials(a.trials);
  if (a.ldadim > 0) {
    const auto lda = lda_projection(compute_scatter(train_set), a.ldadim);
    train_set = project_and_normalize(train_set, lda.projection);
    eval_set = project_and_normalize(eval_set, lda.projection);
  }
  ScoreOptions options;
  options.threads = a.threads;

  const auto cosine =
      evaluate(score_trials(CosineBackend{}, eval_set, trials, options), p_tars);

  std::ofstream os(a.out);
  if (!os) throw Error("cannot open '" + a.out + "' for writing");
  write_comment_block(os, ctx.provenance);
  os << "iter,eer";
  for (double p : p_tars) os << ",dcf" << fmt("%g", p);
  os << '\n';

  ctx.out << "cosine: EER%=" << fmt("%.4f", 100.0 * cosine.eer) << '\n';
  ctx.out << "iter   EER%";
  for (double p : p_tars) ctx.out << "  " << dcf_key(p);
  ctx.out << '\n';

  TrainOptions train_options;
  train_options.iterations = a.iters;
  train(train_set, kind, train_options, [&](int it, const PldaModel& model) {
    const auto r =
        evaluate(score_trials(model, eval_set, trials, options), p_tars);
    os << it << ',' << format_double(r.eer);
    ctx.out << fmt("%4.0f", it) << "  " << fmt("%7.4f", 100.0 * r.eer);
    for (const auto& [p, dcf] : r.min_dcf) {
      os << ',' << format_double(dcf.value);
      ctx.out << "  " << fmt("%7.4f", dcf.value);
    }
    os << '\n';
    ctx.out << '\n';
  });
  os.flush();
  if (!os) throw Error("write to '" + a.out + "' failed");
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out,
        std::ostream& err) {
  // Splice `--config FILE` contents in right after the subcommand name so
  // that flags given on the command line (which come later) win.
  std::vector<std::string> args;
  std::string config_path;
  try {
    for (std::size_t i = 0; i < raw_args.size(); ++i) {
      const auto& tok = raw_args[i];
      if (tok == "--config") {
        if (i + 1 >= raw_args.size())
          throw UsageError("--config needs a file argument");
        config_path = raw_args[++i];
      } else if (tok.rfind("--config=", 0) == 0) {
        config_path = tok.substr(9);
      } else {
        args.push_back(tok);
      }
    }
    if (!config_path.empty() && !args.empty()) {
      auto tokens = config_tokens(config_path);
      args.insert(args.begin() + 1, tokens.begin(), tokens.end());
    }
  } catch (const UsageError& e) {
    err << "svback: " << e.what() << '\n';
    return kExitUsageError;
  }

  CLI::App app{"Speaker-verification back-end: cosine, PLDA and diagonal "
               "PLDA scoring, training and evaluation",
               "svback"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.add_option("--config", config_path,
                 "key=value file; command-line flags take precedence");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand(
      "synth", "Sample labeled embeddings from the PLDA generative model");
  synth_cmd->add_option("--preset", synth.preset, "isotropic|correlated-between")
      ->check(CLI::IsMember({"isotropic", "correlated-between"}))
      ->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim, "Embedding dimension")
      ->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--speakers", synth.speakers, "Number of speakers")
      ->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--utts", synth.utts, "Utterances per speaker")
      ->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--max-utts", synth.max_utts,
                        "Draw counts uniformly from [--utts, --max-utts]")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--prefix", synth.prefix, "Speaker id prefix")
      ->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Embedding file")->required();
  synth_cmd->add_option("--truth", synth.truth,
                        "Truth model file (default <out>.truth)");
  synth_cmd->add_option("--trials", synth.trials,
                        "Also write an all-pairs labeled trial file");

  PreprocessArgs prep;
  auto* prep_cmd = app.add_subcommand(
      "preprocess", "Mean-subtract and length-normalize embeddings");
  prep_cmd->add_option("--in", prep.in)->required()->check(CLI::ExistingFile);
  prep_cmd->add_option("--out", prep.out)->required();
  prep_cmd->add_option("--mean-in", prep.mean_in,
                       "Use a stored mean instead of the input mean")
      ->check(CLI::ExistingFile);
  prep_cmd->add_option("--mean-out", prep.mean_out, "Write the mean used");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "EM-train a PLDA model");
  train_cmd->add_option("--in", tr.in, "Preprocessed labeled embeddings")
      ->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", tr.out, "Model file")->required();
  train_cmd->add_option("--backend", tr.backend, "plda|dplda")
      ->check(CLI::IsMember({"cosine", "plda", "dplda"}))->capture_default_str();
  train_cmd->add_option("--iters", tr.iters, "EM iterations")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  train_cmd->add_flag("--early-stop", tr.early_stop,
                      "Stop when the relative log-likelihood change < 1e-8");
  train_cmd->add_option("--ldadim", tr.ldadim,
                        "Fit an LDA projection first (writes <out>.lda)")
      ->check(CLI::NonNegativeNumber)->capture_default_str();

  ScoreArgs sc;
  auto* score_cmd = app.add_subcommand("score", "Score a trial list");
  score_cmd->add_option("--backend", sc.backend, "cosine|plda|dplda")
      ->check(CLI::IsMember({"cosine", "plda", "dplda"}))->capture_default_str();
  score_cmd->add_option("--model", sc.model, "Model file (PLDA backends)")
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--embeddings", sc.embeddings,
                        "Preprocessed embeddings holding every trial id")
      ->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--trials", sc.trials)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--out", sc.out, "Score file")->required();
  score_cmd->add_option("--lda", sc.lda, "LDA projection written by train")
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--multi-session", sc.multi_session,
                        "Cosine enrollment of groups: centroid|mean")
      ->capture_default_str();
  score_cmd->add_option("--threads", sc.threads)->check(CLI::PositiveNumber)
      ->capture_default_str();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "EER and minDCF of a score file");
  eval_cmd->add_option("--scores", ev.scores)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--trials", ev.trials, "Labeled trial file")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--ptar", ev.ptar, "Comma-separated target priors")
      ->capture_default_str();
  eval_cmd->add_option("--roc", ev.roc, "Write ROC operating points as CSV");

  DiagArgs dg;
  auto* diag_cmd = app.add_subcommand(
      "diag", "Between/within-class scatter heatmaps and diagonal indices");
  diag_cmd->add_option("--in", dg.in)->required()->check(CLI::ExistingFile);
  diag_cmd->add_option("--out-dir", dg.out_dir)->capture_default_str();
  diag_cmd->add_option("--norm", dg.norm, "Scatter normalization: n|m")
      ->capture_default_str();

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Evaluate the model after every EM iteration");
  sweep_cmd->add_option("--train", sw.train)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--eval", sw.eval)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--trials", sw.trials)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", sw.out, "CSV file")->required();
  sweep_cmd->add_option("--backend", sw.backend, "plda|dplda")
      ->check(CLI::IsMember({"plda", "dplda"}))->capture_default_str();
  sweep_cmd->add_option("--iters", sw.iters)->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--ptar", sw.ptar)->capture_default_str();
  sweep_cmd->add_option("--ldadim", sw.ldadim)->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--threads", sw.threads)->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::vector<const char*> argv{"svback"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsageError;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::string provenance = "svback " + sub->get_name();
  if (!config_path.empty()) provenance += "\nconfig=" + config_path;
  std::string effective = sub->config_to_str(true, false);
  while (!effective.empty() && effective.back() == '\n') effective.pop_back();
  if (!effective.empty()) provenance += "\n" + effective;
  Context ctx{out, err, provenance};

  try {
    const std::string name = sub->get_name();
    if (name == "synth") return run_synth(synth, ctx);
    if (name == "preprocess") return run_preprocess(prep, ctx);
    if (name == "train") return run_train(tr, ctx);
    if (name == "score") return run_score(sc, ctx);
    if (name == "eval") return run_eval(ev, ctx);
    if (name == "diag") return run_diag(dg, ctx);
    if (name == "sweep") return run_sweep(sw, ctx);
  } catch (const UsageError& e) {
    err << "svback: " << e.what() << '\n';
    return kExitUsageError;
  } catch (const Error& e) {
    err << "svback: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "svback: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitUsageError;
}

}  // namespace svback::cli
