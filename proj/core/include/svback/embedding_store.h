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

#ifndef SVBACK_EMBEDDING_STORE_H_
#define SVBACK_EMBEDDING_STORE_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "svback/linalg.h"

namespace svback {

struct EmbeddingRecord {
  std::string utterance_id;
  std::optional<std::string> speaker_id;  // nullopt is written as "-"
  Vector vector;
};

struct SpeakerGroup {
  std::string speaker_id;
  std::vector<std::size_t> members;  // record indices, in file order
};

// Ordered, labeled collection of D-dimensional utterance embeddings.
// Every vector has exactly dim() finite components and utterance ids are
// unique; add() enforces both.
class EmbeddingSet {
 public:
  explicit EmbeddingSet(int dim);

  void add(std::string utterance_id, std::optional<std::string> speaker_id,
           Vector vector);

  int dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const EmbeddingRecord& operator[](std::size_t i) const {
    return records_[i];
  }
  std::span<const EmbeddingRecord> records() const { return records_; }

  std::optional<std::size_t> find(std::string_view utterance_id) const;

  bool fully_labeled() const;

  // Speakers in order of first appearance. Unlabeled records are skipped;
  // callers that need full labels check fully_labeled() first.
  std::vector<SpeakerGroup> speaker_groups() const;

 private:
  int dim_;
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class StatsSource { kComputedFromData, kLoadedFromFile };

// Centering mean applied by preprocess().
struct PreprocessStats {
  Vector mean;
  StatsSource source = StatsSource::kComputedFromData;
};

PreprocessStats compute_mean(const EmbeddingSet& set);

// Mean subtraction followed by length normalization. A record that lands on
// the mean is rejected with its utterance id in the message.
EmbeddingSet preprocess(const EmbeddingSet& set, const PreprocessStats& stats);

// (x - mean) / ||x - mean||; throws Error naming `id` if the norm is zero.
Vector center_and_normalize(const Vector& x, const Vector& mean,
                            std::string_view id);

// Embedding file:
//   EMB <N> <D>
//   <utt_id> <spk_id|-> <v_1> ... <v_D>      (N lines)
// Lines starting with '#' are comments. `provenance`, when non-empty, is
// written as a comment block before the header.
EmbeddingSet read_embeddings(std::istream& is, const std::string& source);
EmbeddingSet read_embeddings(const std::string& path);
void write_embeddings(const EmbeddingSet& set, std::ostream& os,
                      std::string_view provenance = {});
void write_embeddings(const EmbeddingSet& set, const std::string& path,
                      std::string_view provenance = {});

// Mean file:
//   MEAN <D>
//   <v_1> ... <v_D>
PreprocessStats read_stats(const std::string& path);
void write_stats(const PreprocessStats& stats, const std::string& path,
                 std::string_view provenance = {});

enum class TrialLabel { kTarget, kNontarget };

struct Trial {
  std::string enroll_id;  // utterance id, or a speaker id naming a group
  std::string test_id;
  std::optional<TrialLabel> label;
};

// Trial file: `<enroll_id> <test_id> [target|nontarget]` per line.
std::vector<Trial> read_trials(std::istream& is, const std::string& source);
std::vector<Trial> read_trials(const std::string& path);
void write_trials(std::span<const Trial> trials, const std::string& path,
                  std::string_view provenance = {});

std::string_view label_name(TrialLabel label);

}  // namespace svback

#endif  // SVBACK_EMBEDDING_STORE_H_
