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

#include "svback/evaluation.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svback/error.h"

namespace svback {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_classes(std::span<const double> targets,
                   std::span<const double> nontargets) {
  if (targets.empty() || nontargets.empty())
    throw Error("metrics need at least one target and one nontarget trial");
  for (auto span : {targets, nontargets})
    for (double s : span)
      if (!std::isfinite(s)) throw Error("metrics: non-finite score");
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> split_by_label(
    const ScoreSet& scores) {
  std::vector<double> targets, nontargets;
  for (std::size_t i = 0; i < scores.trials.size(); ++i) {
    const auto& t = scores.trials[i];
    if (!t.label)
      throw Error("trial #" + std::to_string(i + 1) + " (" + t.enroll_id +
                  " " + t.test_id + ") has no target/nontarget label");
    (*t.label == TrialLabel::kTarget ? targets : nontargets)
        .push_back(t.score);
  }
  check_classes(targets, nontargets);
  return {std::move(targets), std::move(nontargets)};
}

std::vector<OperatingPoint> operating_points(
    std::span<const double> targets, std::span<const double> nontargets) {
  check_classes(targets, nontargets);
  std::vector<double> tar(targets.begin(), targets.end());
  std::vector<double> non(nontargets.begin(), nontargets.end());
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());
  const double n_tar = static_cast<double>(tar.size());
  const double n_non = static_cast<double>(non.size());

  std::vector<OperatingPoint> points;
  points.push_back({-kInf, 0.0, 1.0});
  // Walk the distinct scores upward; after consuming all scores <= u the
  // counts describe the threshold just above u.
  std::size_t i = 0, j = 0;
  while (i < tar.size() || j < non.size()) {
    double u = kInf;
    if (i < tar.size()) u = tar[i];
    if (j < non.size()) u = std::min(u, non[j]);
    while (i < tar.size() && tar[i] == u) ++i;
    while (j < non.size() && non[j] == u) ++j;
    double next = kInf;
    if (i < tar.size()) next = tar[i];
    if (j < non.size()) next = std::min(next, non[j]);
    const double threshold = std::isinf(next) ? kInf : u + (next - u) / 2.0;
    points.push_back({threshold, static_cast<double>(i) / n_tar,
                      static_cast<double>(non.size() - j) / n_non});
  }
  return points;
}

EerResult compute_eer(std::span<const double> targets,
                      std::span<const double> nontargets) {
  const auto points = operating_points(targets, nontargets);
  // p_miss - p_fa rises from -1 at -inf to +1 at +inf.
  std::size_t k = 0;
  while (points[k].p_miss - points[k].p_fa < 0.0) ++k;
  const auto& hi = points[k];
  // Equality never happens at the two infinite thresholds.
  if (hi.p_miss == hi.p_fa) return {hi.p_miss, hi.threshold};
  const auto& lo = points[k - 1];
  const double d_lo = lo.p_miss - lo.p_fa;
  const double d_hi = hi.p_miss - hi.p_fa;
  const double lambda = -d_lo / (d_hi - d_lo);
  const double eer = lo.p_fa + lambda * (hi.p_fa - lo.p_fa);

  double t;
  if (std::isinf(lo.threshold) && std::isinf(hi.threshold)) {
    // Every score is identical.
    t = targets.front();
  } else if (std::isinf(lo.threshold)) {
    t = hi.threshold;
  } else if (std::isinf(hi.threshold)) {
    t = lo.threshold;
  } else {
    t = lo.threshold + lambda * (hi.threshold - lo.threshold);
  }
  return {eer, t};
}

EerResult compute_eer(const ScoreSet& scores) {
  const auto [tar, non] = split_by_label(scores);
  return compute_eer(tar, non);
}

DcfResult compute_min_dcf(std::span<const double> targets,
                          std::span<const double> nontargets, double p_tar,
                          double c_miss, double c_fa) {
  if (!(p_tar > 0.0 && p_tar < 1.0))
    throw Error("p_tar must lie strictly between 0 and 1");
  if (!(c_miss > 0.0) || !(c_fa > 0.0))
    throw Error("detection costs must be positive");
  const auto points = operating_points(targets, nontargets);
  const double w_miss = p_tar * c_miss;
  const double w_fa = (1.0 - p_tar) * c_fa;
  const double norm = std::min(w_miss, w_fa);

  DcfResult best{kInf, 0.0};
  for (const auto& p : points) {
    const double cost = (w_miss * p.p_miss + w_fa * p.p_fa) / norm;
    if (cost < best.value) best = {cost, p.threshold};
  }
  return best;
}

DcfResult compute_min_dcf(const ScoreSet& scores, double p_tar, double c_miss,
                          double c_fa) {
  const auto [tar, non] = split_by_label(scores);
  return compute_min_dcf(tar, non, p_tar, c_miss, c_fa);
}

MetricReport evaluate(const ScoreSet& scores, std::span<const double> p_tars) {
  const auto [tar, non] = split_by_label(scores);
  MetricReport report;
  const auto eer = compute_eer(tar, non);
  report.eer = eer.eer;
  report.eer_threshold = eer.threshold;
  for (double p : p_tars)
    report.min_dcf.emplace_back(p, compute_min_dcf(tar, non, p));
  report.num_targets = tar.size();
  report.num_nontargets = non.size();
  return report;
}

}  // namespace svback
