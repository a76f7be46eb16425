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

#ifndef SVBACK_EVALUATION_H_
#define SVBACK_EVALUATION_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "svback/embedding_store.h"

namespace svback {

struct ScoredTrial {
  std::string enroll_id;
  std::string test_id;
  double score = 0.0;
  std::optional<TrialLabel> label;
};

struct ScoreSet {
  std::vector<ScoredTrial> trials;
};

// Decision rule: accept when score >= threshold.
//   P_miss(t) = P(target < t)       (false rejection)
//   P_fa(t)   = P(nontarget >= t)   (false acceptance)
// Candidate thresholds are -inf, the midpoints between consecutive distinct
// scores, and +inf, in ascending order.
struct OperatingPoint {
  double threshold = 0.0;
  double p_miss = 0.0;
  double p_fa = 0.0;
};

std::vector<OperatingPoint> operating_points(std::span<const double> targets,
                                             std::span<const double> nontargets);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

struct DcfResult {
  double value = 0.0;
  double threshold = 0.0;
};

// EER where P_miss = P_fa, by linear interpolation between the two adjacent
// operating points that bracket the crossing.
EerResult compute_eer(std::span<const double> targets,
                      std::span<const double> nontargets);
EerResult compute_eer(const ScoreSet& scores);

// min_t [p c_miss P_miss(t) + (1-p) c_fa P_fa(t)] / min(p c_miss, (1-p) c_fa).
// Ties resolve to the lowest threshold.
DcfResult compute_min_dcf(std::span<const double> targets,
                          std::span<const double> nontargets, double p_tar,
                          double c_miss = 1.0, double c_fa = 1.0);
DcfResult compute_min_dcf(const ScoreSet& scores, double p_tar,
                          double c_miss = 1.0, double c_fa = 1.0);

struct MetricReport {
  double eer = 0.0;
  double eer_threshold = 0.0;
  std::vector<std::pair<double, DcfResult>> min_dcf;  // (p_tar, result)
  std::size_t num_targets = 0;
  std::size_t num_nontargets = 0;
};

MetricReport evaluate(const ScoreSet& scores, std::span<const double> p_tars);

// Splits labeled scores by class. Throws if any trial is unlabeled, any score
// is non-finite, or either class is empty.
std::pair<std::vector<double>, std::vector<double>> split_by_label(
    const ScoreSet& scores);

}  // namespace svback

#endif  // SVBACK_EVALUATION_H_
