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

#ifndef SVBACK_SCORING_H_
#define SVBACK_SCORING_H_

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "svback/embedding_store.h"
#include "svback/evaluation.h"
#include "svback/linalg.h"
#include "svback/plda_model.h"

namespace svback {

// Inner product of two unit vectors. Throws if either norm is more than
// 1e-6 away from one.
double cosine_score(const Vector& x1, const Vector& x2);

// Precomputed pairwise PLDA scorer:
//   Q = W ((B + 2W)^-1 - (B + W)^-1) W
//   P = W (B + 2W)^-1 W
//   exact_const = 1/2 (2 log|B + W| - log|B| - log|B + 2W|)
// so that 1/2 (x1'Q x1 + x2'Q x2 + 2 x1'P x2) + exact_const is the exact
// same-vs-different-speaker log-likelihood ratio of the model.
struct ScoringKernel {
  Matrix p;
  Matrix q;
  double exact_const = 0.0;
  Vector mu;  // model mean, subtracted before scoring

  int dim() const { return static_cast<int>(p.rows()); }
};

ScoringKernel build_kernel(const PldaModel& model);

struct KernelDefiniteness {
  double max_eigenvalue_q = 0.0;        // < 0 expected
  double min_eigenvalue_p_plus_q = 0.0; // >= -tol expected
  bool ok = false;
};

// Q must be negative definite and P + Q positive semidefinite. The
// semidefinite check allows -1e-10 * max(1, max|P + Q|).
KernelDefiniteness check_definiteness(const ScoringKernel& kernel);

double pairwise_llr(const ScoringKernel& kernel, const Vector& x1,
                    const Vector& x2, const Vector& model_mu);
inline double pairwise_llr(const ScoringKernel& kernel, const Vector& x1,
                           const Vector& x2) {
  return pairwise_llr(kernel, x1, x2, kernel.mu);
}

// log p(X) for a same-speaker set; see LogMarginal.
double set_log_marginal(const PldaModel& model, std::span<const Vector> xs);

// log p(X1 u X2) - [log p(X1) + log p(X2)]. The union statistics are formed
// by a commutative merge, so swapping the arguments gives the same bits.
double set_vs_set_llr(const PldaModel& model, std::span<const Vector> x1,
                      std::span<const Vector> x2);
double set_vs_set_llr(const LogMarginal& marginal, const SetStats& s1,
                      const SetStats& s2);

// Many-vs-many score of the B = W = I, mu = 0 model written through the set
// centroids:
//   K1 K2 / (1 + K1 + K2) * mu1'mu2 + C(K1, K2) / 2
//   C = (K1^2 + K2^2)/(1 + K1 + K2) - K1^2/(1 + K1) - K2^2/(1 + K2)
//       + D log(1 + K1 K2 / (1 + K1 + K2))
// Equals set_vs_set_llr under that model whenever both centroids have unit
// norm. The log term carries the factor D from log|B + nW| = D log(1 + n).
double closed_form_set_score(int k1, int k2, const Vector& mu1,
                             const Vector& mu2, int dim);
double closed_form_constant(int k1, int k2, int dim);

struct EquivalenceReport {
  bool is_cosine_equivalent = false;
  double alpha = 0.0;  // mean diagonal of Q
  double beta = 0.0;   // mean diagonal of P
  double max_offdiag_deviation = 0.0;
  double max_diag_deviation = 0.0;
  double tolerance = 0.0;
};

// Cosine-equivalent iff Q = alpha I and P = beta I (entrywise to `tol`),
// alpha < 0 and alpha + beta >= -tol.
EquivalenceReport check_cosine_equivalence(const ScoringKernel& kernel,
                                           double tol = 1e-9);

// The model whose kernel is Q = alpha I, P = beta I:
//   W = beta (beta - alpha) / (-alpha) I
//   B = beta (beta + alpha) (beta - alpha) / alpha^2 I
// Needs alpha < 0 < alpha + beta.
PldaModel cosine_equivalent_model(double alpha, double beta, int dim);

struct CosineBackend {};
using ScoringBackend = std::variant<CosineBackend, PldaModel>;

enum class MultiSessionPolicy {
  kCentroidRenorm,  // cosine: average enroll vectors, length-normalize
  kMeanScore,       // cosine: average per-utterance cosine scores
};

struct ScoreOptions {
  MultiSessionPolicy policy = MultiSessionPolicy::kCentroidRenorm;
  int threads = 1;
};

// One score per trial, in trial order. The enroll id resolves to an
// utterance id first, then to every utterance of the speaker with that id.
// The PLDA backend always scores enroll groups with set_vs_set_llr.
ScoreSet score_trials(const ScoringBackend& backend,
                      const EmbeddingSet& embeddings,
                      std::span<const Trial> trials,
                      const ScoreOptions& options = {});

// Score file: `<enroll_id> <test_id> <score>` per line; a fourth
// target/nontarget field is accepted on read.
void write_scores(const ScoreSet& scores, std::ostream& os,
                  std::string_view provenance = {});
void write_scores(const ScoreSet& scores, const std::string& path,
                  std::string_view provenance = {});
ScoreSet read_scores(std::istream& is, const std::string& source);
ScoreSet read_scores(const std::string& path);

// Copies labels from `trials` onto `scores`, matching by position and ids.
void attach_labels(ScoreSet& scores, std::span<const Trial> trials);

}  // namespace svback

#endif  // SVBACK_SCORING_H_
