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

#include "svback/scoring.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>
#include <unordered_map>

#include "svback/error.h"
#include "svback/text_io.h"

namespace svback {

namespace {

void check_unit(const Vector& x, std::string_view which) {
  if (std::abs(x.norm() - 1.0) >= 1e-6)
    throw Error("cosine_score: " + std::string(which) +
                " is not unit-norm (norm " + std::to_string(x.norm()) + ")");
}

// Resolved enrollment side of a trial: record indices.
struct ResolvedTrial {
  std::vector<std::size_t> enroll;
  std::size_t test = 0;
};

std::vector<ResolvedTrial> resolve(const EmbeddingSet& set,
                                   std::span<const Trial> trials) {
  std::unordered_map<std::string, std::vector<std::size_t>> groups;
  for (auto& g : set.speaker_groups())
    groups.emplace(g.speaker_id, std::move(g.members));

  std::vector<ResolvedTrial> out;
  out.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    const std::string where = "trial #" + std::to_string(i + 1) + " (" +
                              t.enroll_id + " " + t.test_id + ")";
    ResolvedTrial r;
    if (auto idx = set.find(t.enroll_id)) {
      r.enroll = {*idx};
    } else if (auto it = groups.find(t.enroll_id); it != groups.end()) {
      r.enroll = it->second;
    } else {
      throw Error(where + ": unknown enroll id '" + t.enroll_id + "'");
    }
    if (r.enroll.empty()) throw Error(where + ": empty enroll group");
    auto test = set.find(t.test_id);
    if (!test) throw Error(where + ": unknown test id '" + t.test_id + "'");
    r.test = *test;
    out.push_back(std::move(r));
  }
  return out;
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers =
      std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

double cosine_score(const Vector& x1, const Vector& x2) {
  if (x1.size() != x2.size())
    throw Error("cosine_score: dimension mismatch");
  check_unit(x1, "first input");
  check_unit(x2, "second input");
  return x1.dot(x2);
}

ScoringKernel build_kernel(const PldaModel& model) {
  model.validate();
  const Matrix& b = model.b_precision;
  const Matrix& w = model.w_precision;
  const auto llt1 = factor_spd(symmetrize(b + w), "B + W");
  const auto llt2 = factor_spd(symmetrize(b + 2.0 * w), "B + 2W");
  const auto llt_b = factor_spd(b, "B");

  // W S W with S = (B + kW)^-1, via solves against W.
  const Matrix s2w = llt2.solve(w);
  const Matrix s1w = llt1.solve(w);
  ScoringKernel k;
  k.p = symmetrize(w * s2w);
  k.q = symmetrize(w * (s2w - s1w));
  k.exact_const =
      0.5 * (2.0 * log_det(llt1) - log_det(llt_b) - log_det(llt2));
  k.mu = model.mu;
  return k;
}

KernelDefiniteness check_definiteness(const ScoringKernel& kernel) {
  KernelDefiniteness r;
  r.max_eigenvalue_q = max_eigenvalue(kernel.q);
  const Matrix sum = kernel.p + kernel.q;
  r.min_eigenvalue_p_plus_q = min_eigenvalue(sum);
  const double tol = 1e-10 * std::max(1.0, sum.cwiseAbs().maxCoeff());
  r.ok = r.max_eigenvalue_q < 0.0 && r.min_eigenvalue_p_plus_q >= -tol;
  return r;
}

double pairwise_llr(const ScoringKernel& kernel, const Vector& x1,
                    const Vector& x2, const Vector& model_mu) {
  const Eigen::Index d = kernel.dim();
  if (x1.size() != d || x2.size() != d || model_mu.size() != d)
    throw Error("pairwise_llr: dimension mismatch");
  const Vector z1 = x1 - model_mu;
  const Vector z2 = x2 - model_mu;
  return 0.5 * (z1.dot(kernel.q * z1) + z2.dot(kernel.q * z2) +
                2.0 * z1.dot(kernel.p * z2)) +
         kernel.exact_const;
}

double set_log_marginal(const PldaModel& model, std::span<const Vector> xs) {
  if (xs.empty()) throw Error("set_log_marginal: empty set");
  return LogMarginal(model)(xs);
}

double set_vs_set_llr(const LogMarginal& marginal, const SetStats& s1,
                      const SetStats& s2) {
  if (s1.count < 1 || s2.count < 1)
    throw Error("set_vs_set_llr: empty set");
  return marginal(LogMarginal::merge(s1, s2)) - (marginal(s1) + marginal(s2));
}

double set_vs_set_llr(const PldaModel& model, std::span<const Vector> x1,
                      std::span<const Vector> x2) {
  if (x1.empty() || x2.empty()) throw Error("set_vs_set_llr: empty set");
  LogMarginal marginal(model);
  return set_vs_set_llr(marginal, marginal.accumulate(x1),
                        marginal.accumulate(x2));
}

double closed_form_constant(int k1, int k2, int dim) {
  if (k1 < 1 || k2 < 1) throw Error("closed-form score needs K1, K2 >= 1");
  if (dim < 1) throw Error("closed-form score needs D >= 1");
  const double a = k1, b = k2;
  const double s = 1.0 + a + b;
  return (a * a + b * b) / s - a * a / (1.0 + a) - b * b / (1.0 + b) +
         static_cast<double>(dim) * std::log1p(a * b / s);
}

double closed_form_set_score(int k1, int k2, const Vector& mu1,
                             const Vector& mu2, int dim) {
  const double c = closed_form_constant(k1, k2, dim);
  if (mu1.size() != dim || mu2.size() != dim)
    throw Error("closed_form_set_score: dimension mismatch");
  const double a = k1, b = k2;
  return a * b / (1.0 + a + b) * mu1.dot(mu2) + 0.5 * c;
}

EquivalenceReport check_cosine_equivalence(const ScoringKernel& kernel,
                                           double tol) {
  EquivalenceReport r;
  r.tolerance = tol;
  const Eigen::Index d = kernel.dim();
  r.alpha = kernel.q.diagonal().mean();
  r.beta = kernel.p.diagonal().mean();
  for (Eigen::Index i = 0; i < d; ++i) {
    r.max_diag_deviation =
        std::max({r.max_diag_deviation, std::abs(kernel.q(i, i) - r.alpha),
                  std::abs(kernel.p(i, i) - r.beta)});
    for (Eigen::Index j = 0; j < d; ++j)
      if (i != j)
        r.max_offdiag_deviation =
            std::max({r.max_offdiag_deviation, std::abs(kernel.q(i, j)),
                      std::abs(kernel.p(i, j))});
  }
  r.is_cosine_equivalent = r.max_offdiag_deviation <= tol &&
                           r.max_diag_deviation <= tol && r.alpha < 0.0 &&
                           r.alpha + r.beta >= -tol;
  return r;
}

PldaModel cosine_equivalent_model(double alpha, double beta, int dim) {
  if (!(alpha < 0.0) || !(alpha + beta > 0.0))
    throw Error("cosine-equivalent model needs alpha < 0 < alpha + beta");
  const double w = beta * (beta - alpha) / -alpha;
  const double b = beta * (beta + alpha) * (beta - alpha) / (alpha * alpha);
  PldaModel m = init_identity(dim);
  m.w_precision *= w;
  m.b_precision *= b;
  return m;
}

ScoreSet score_trials(const ScoringBackend& backend,
                      const EmbeddingSet& embeddings,
                      std::span<const Trial> trials,
                      const ScoreOptions& options) {
  const auto resolved = resolve(embeddings, trials);
  ScoreSet out;
  out.trials.resize(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i)
    out.trials[i] = {trials[i].enroll_id, trials[i].test_id, 0.0,
                     trials[i].label};

  if (std::holds_alternative<CosineBackend>(backend)) {
    parallel_for(trials.size(), options.threads, [&](std::size_t i) {
      const auto& r = resolved[i];
      const Vector& test = embeddings[r.test].vector;
      double score = 0.0;
      if (r.enroll.size() == 1) {
        score = cosine_score(embeddings[r.enroll[0]].vector, test);
      } else if (options.policy == MultiSessionPolicy::kCentroidRenorm) {
        Vector centroid = Vector::Zero(embeddings.dim());
        for (std::size_t idx : r.enroll) centroid += embeddings[idx].vector;
        score = cosine_score(
            center_and_normalize(centroid, Vector::Zero(embeddings.dim()),
                                 trials[i].enroll_id),
            test);
      } else {
        for (std::size_t idx : r.enroll)
          score += cosine_score(embeddings[idx].vector, test);
        score /= static_cast<double>(r.enroll.size());
      }
      out.trials[i].score = score;
    });
    return out;
  }

  const auto& model = std::get<PldaModel>(backend);
  if (model.dim() != embeddings.dim())
    throw Error("score_trials: model dimension " +
                std::to_string(model.dim()) + " does not match embeddings (" +
                std::to_string(embeddings.dim()) + ")");
  LogMarginal marginal(model);
  std::size_t max_enroll = 1;
  for (const auto& r : resolved) max_enroll = std::max(max_enroll, r.enroll.size());
  marginal.prepare(static_cast<int>(max_enroll) + 1);

  // Per-utterance statistics and log marginals are shared across trials; the
  // arithmetic matches set_vs_set_llr term for term.
  std::vector<SetStats> single(embeddings.size());
  std::vector<double> single_lm(embeddings.size(), 0.0);
  std::vector<char> needed(embeddings.size(), 0);
  for (const auto& r : resolved) {
    needed[r.test] = 1;
    for (std::size_t idx : r.enroll) needed[idx] = 1;
  }
  parallel_for(embeddings.size(), options.threads, [&](std::size_t i) {
    if (!needed[i]) return;
    single[i] = marginal.accumulate(embeddings[i].vector);
    single_lm[i] = marginal(single[i]);
  });

  parallel_for(trials.size(), options.threads, [&](std::size_t i) {
    const auto& r = resolved[i];
    SetStats enroll = single[r.enroll[0]];
    for (std::size_t k = 1; k < r.enroll.size(); ++k)
      enroll = LogMarginal::merge(enroll, single[r.enroll[k]]);
    const double enroll_lm =
        r.enroll.size() == 1 ? single_lm[r.enroll[0]] : marginal(enroll);
    out.trials[i].score =
        marginal(LogMarginal::merge(enroll, single[r.test])) -
        (enroll_lm + single_lm[r.test]);
  });
  return out;
}

void write_scores(const ScoreSet& scores, std::ostream& os,
                  std::string_view provenance) {
  if (!provenance.empty()) write_comment_block(os, provenance);
  for (const auto& t : scores.trials)
    os << t.enroll_id << ' ' << t.test_id << ' ' << format_double(t.score)
       << '\n';
}

void write_scores(const ScoreSet& scores, const std::string& path,
                  std::string_view provenance) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_scores(scores, os, provenance);
  os.flush();
  if (!os) throw Error("write to '" + path + "' failed");
}

ScoreSet read_scores(std::istream& is, const std::string& source) {
  LineReader reader(is, source);
  ScoreSet out;
  std::string line;
  while (reader.next(line)) {
    const auto f = split_fields(line);
    if (f.size() != 3 && f.size() != 4)
      throw Error(reader.where() +
                  ": expected '<enroll_id> <test_id> <score> [label]'");
    ScoredTrial t{std::string(f[0]), std::string(f[1]),
                  parse_double(f[2], reader.where()), std::nullopt};
    if (!std::isfinite(t.score))
      throw Error(reader.where() + ": non-finite score");
    if (f.size() == 4) {
      if (f[3] == "target")
        t.label = TrialLabel::kTarget;
      else if (f[3] == "nontarget")
        t.label = TrialLabel::kNontarget;
      else
        throw Error(reader.where() + ": unknown label '" + std::string(f[3]) +
                    "'");
    }
    out.trials.push_back(std::move(t));
  }
  return out;
}

ScoreSet read_scores(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "' for reading");
  return read_scores(is, path);
}

void attach_labels(ScoreSet& scores, std::span<const Trial> trials) {
  if (scores.trials.size() != trials.size())
    throw Error("score file has " + std::to_string(scores.trials.size()) +
                " lines, trial file has " + std::to_string(trials.size()));
  for (std::size_t i = 0; i < trials.size(); ++i) {
    auto& s = scores.trials[i];
    if (s.enroll_id != trials[i].enroll_id || s.test_id != trials[i].test_id)
      throw Error("score line " + std::to_string(i + 1) + " (" + s.enroll_id +
                  " " + s.test_id + ") does not match the trial list");
    if (trials[i].label) s.label = trials[i].label;
  }
}

}  // namespace svback
