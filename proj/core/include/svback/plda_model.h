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

#ifndef SVBACK_PLDA_MODEL_H_
#define SVBACK_PLDA_MODEL_H_

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "svback/embedding_store.h"
#include "svback/linalg.h"

namespace svback {

enum class PldaKind { kFull, kDiagonal };

std::string_view kind_name(PldaKind kind);
PldaKind parse_kind(std::string_view name);

// Two-covariance PLDA. Speaker latents y ~ N(mu, B^-1); utterances
// x ~ N(y, W^-1). B and W are precisions.
struct PldaModel {
  Vector mu;
  Matrix b_precision;
  Matrix w_precision;
  PldaKind kind = PldaKind::kFull;
  int iterations_trained = 0;

  int dim() const { return static_cast<int>(mu.size()); }

  // Throws Error unless B and W are finite, symmetric, SPD and of matching
  // size, and diagonal models have exactly zero off-diagonals.
  void validate() const;
};

// B = W = I, mu = 0. Scores of this model rank trials exactly like cosine.
PldaModel init_identity(int dim, PldaKind kind = PldaKind::kFull);

struct SpeakerPosterior {
  std::string speaker_id;
  int count = 0;
  Vector mean;       // L^-1 (B mu + W sum_n x_n)
  Matrix precision;  // L = B + count * W
};

struct PosteriorStats {
  std::vector<SpeakerPosterior> speakers;  // speaker_groups() order
};

PosteriorStats e_step(const PldaModel& model, const EmbeddingSet& set);

// Closed-form maximizer of the expected complete-data log-likelihood. For
// kDiagonal only the diagonals of the two covariance estimates are kept.
PldaModel m_step(const PosteriorStats& stats, const EmbeddingSet& set,
                 PldaKind kind);

struct TrainOptions {
  int iterations = 10;
  // Stop once |ll_k - ll_{k-1}| < tolerance * |ll_{k-1}|.
  bool early_stop = false;
  double tolerance = 1e-8;
};

// Called with iteration 0 (the identity initialization) and then after every
// EM iteration.
using SnapshotHook = std::function<void(int iteration, const PldaModel&)>;

PldaModel train(const EmbeddingSet& set, PldaKind kind,
                const TrainOptions& options = {},
                const SnapshotHook& hook = {});

// Sufficient statistics of a same-speaker set, centered by the model mean.
struct SetStats {
  int count = 0;
  Vector sum;           // sum_n (x_n - mu)
  double quad = 0.0;    // sum_n (x_n - mu)^T W (x_n - mu)
};

// Exact log p(X) for a set of vectors drawn from one speaker:
//
//   1/2 ( s^T W (B + nW)^-1 W s - sum_n x_n^T W x_n
//         + log|B| + n log|W| - log|B + nW| - n D log(2 pi) )
//
// with s the sum of the centered vectors. W (B + nW)^-1 W and log|B + nW|
// are cached per count up to the bound passed to prepare(); evaluation is
// const and safe to call concurrently after prepare().
class LogMarginal {
 public:
  explicit LogMarginal(const PldaModel& model);

  void prepare(int max_count);

  SetStats accumulate(std::span<const Vector> xs) const;
  SetStats accumulate(const Vector& x) const;
  static SetStats merge(const SetStats& a, const SetStats& b);

  double operator()(const SetStats& stats) const;
  double operator()(std::span<const Vector> xs) const {
    return (*this)(accumulate(xs));
  }

  const PldaModel& model() const { return model_; }

 private:
  struct CountTerms {
    Matrix projector;  // W (B + nW)^-1 W
    double log_det = 0.0;
  };
  CountTerms terms_for(int count) const;

  PldaModel model_;
  double log_det_b_ = 0.0;
  double log_det_w_ = 0.0;
  std::vector<CountTerms> cache_;  // index = count
};

double log_likelihood(const PldaModel& model, const EmbeddingSet& set);

// Model file:
//   PLDA <D> <full|diagonal> <iterations>
//   MU <v_1> ... <v_D>
//   B
//   <D rows of D reals>
//   W
//   <D rows of D reals>
PldaModel read_model(std::istream& is, const std::string& source);
PldaModel load_model(const std::string& path);
void write_model(const PldaModel& model, std::ostream& os,
                 std::string_view provenance = {});
void save_model(const PldaModel& model, const std::string& path,
                std::string_view provenance = {});

}  // namespace svback

#endif  // SVBACK_PLDA_MODEL_H_
