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

#ifndef SVBACK_SYNTHESIS_H_
#define SVBACK_SYNTHESIS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "svback/embedding_store.h"
#include "svback/linalg.h"
#include "svback/plda_model.h"

namespace svback {

enum class SynthPreset {
  kIsotropic,          // b_cov = w_cov = I
  kCorrelatedBetween,  // b_cov = rho^|i-j| with rho = 0.6, w_cov = I
  kCustom,
};

inline constexpr double kCorrelatedRho = 0.6;

std::string_view preset_name(SynthPreset preset);
SynthPreset parse_preset(std::string_view name);

// Toeplitz covariance rho^|i-j|; SPD for |rho| < 1.
Matrix banded_covariance(int dim, double rho);

// Parameters of the generative model in covariance form.
struct SynthSpec {
  int dim = 0;
  int speakers = 0;
  int min_utterances = 1;  // per speaker, inclusive range
  int max_utterances = 1;
  Vector mu;
  Matrix b_cov;  // B^-1
  Matrix w_cov;  // W^-1
  std::uint64_t seed = 0;
  SynthPreset preset = SynthPreset::kCustom;
  std::string id_prefix = "spk";

  static SynthSpec from_preset(SynthPreset preset, int dim, int speakers,
                               int utterances_per_speaker, std::uint64_t seed);

  void validate() const;
};

struct SynthResult {
  EmbeddingSet embeddings;
  std::vector<Vector> speaker_means;  // latent y_m
};

// Draw order, all from one RandomSource(seed): for each speaker, the
// utterance count (only when the range is non-trivial), D normals for y_m,
// then D normals per utterance. Ids are <prefix>NNNNN and
// <prefix>NNNNN-uttNNN.
SynthResult sample(const SynthSpec& spec);

// The PLDA model with B = b_cov^-1, W = w_cov^-1.
PldaModel truth_model(const SynthSpec& spec);

struct GaussianParams {
  Vector mu;
  Matrix b_cov;
  Matrix w_cov;
};

GaussianParams params_of(const SynthSpec& spec);

// log N(stack(X); 1 (x) mu, ones(n, n) (x) b_cov + I_n (x) w_cov), evaluated
// densely on the stacked nD vector.
double oracle_log_marginal(const GaussianParams& params,
                           std::span<const Vector> xs);

double oracle_llr(const GaussianParams& params, std::span<const Vector> x1,
                  std::span<const Vector> x2);

// Every unordered pair (i < j) of records, labeled by speaker identity.
std::vector<Trial> make_trials(const EmbeddingSet& set);

}  // namespace svback

#endif  // SVBACK_SYNTHESIS_H_
