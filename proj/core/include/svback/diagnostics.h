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

#ifndef SVBACK_DIAGNOSTICS_H_
#define SVBACK_DIAGNOSTICS_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "svback/embedding_store.h"
#include "svback/linalg.h"

namespace svback {

enum class ScatterNormalization {
  kByUtterances,  // 1/N; reduces to the sample covariance when n_m = 1
  kBySpeakers,    // 1/M, the literal LDA training formulas
};

// Between- and within-speaker scatter of a labeled set.
//   y_m     = speaker means, mu0 = global mean
//   between = (1/Z) sum_m n_m y_m y_m^T - mu0 mu0^T
//   within  = (1/Z) sum_m sum_n (x - y_m)(x - y_m)^T
// with Z = N or M.
struct ScatterPair {
  Matrix between;
  Matrix within;
  Vector global_mean;
  std::vector<std::string> speaker_ids;
  std::vector<Vector> speaker_means;
};

ScatterPair compute_scatter(
    const EmbeddingSet& set,
    ScatterNormalization norm = ScatterNormalization::kByUtterances);

// trace(G) / sum(G) for an entrywise non-negative matrix.
double diagonal_index(const Matrix& g);

// diagonal_index of |cov|, the form used for covariance heatmaps.
double abs_diagonal_index(const Matrix& cov);

struct DiagonalIndexReport {
  std::optional<double> between_index;  // nullopt for an all-zero matrix
  std::optional<double> within_index;
};

DiagonalIndexReport diagonal_indices(const ScatterPair& scatter);

// Writes |G| as CSV (one row per line, comma separated, 17 significant
// digits) followed by the comment line `# diagonal_index=<v>`.
void export_heatmap(const Matrix& g, const std::string& path,
                    std::string_view provenance = {});

struct Heatmap {
  Matrix values;
  std::optional<double> diagonal_index;
};
Heatmap read_heatmap(const std::string& path);

struct LdaTransform {
  Matrix projection;   // D x K; columns satisfy v^T within v = 1
  Vector eigenvalues;  // descending
};

// Top out_dim generalized eigenvectors of (between, within). Each column's
// largest-magnitude entry is made positive so the result is deterministic.
LdaTransform lda_projection(const ScatterPair& scatter, int out_dim);

// x -> projection^T x for every record.
EmbeddingSet apply_projection(const EmbeddingSet& set, const Matrix& projection);

// LDA file: `LDA <D> <K>` followed by D rows of K reals.
void save_projection(const Matrix& projection, const std::string& path,
                     std::string_view provenance = {});
Matrix load_projection(const std::string& path);

}  // namespace svback

#endif  // SVBACK_DIAGNOSTICS_H_
