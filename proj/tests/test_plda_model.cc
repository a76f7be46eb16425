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

#include "svback/plda_model.h"

#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "svback/error.h"
#include "svback/scoring.h"
#include "svback/synthesis.h"
#include "test_util.h"

namespace svback {
namespace {

EmbeddingSet one_speaker(std::initializer_list<std::vector<double>> rows) {
  EmbeddingSet set(static_cast<int>(rows.begin()->size()));
  int i = 0;
  for (const auto& r : rows)
    set.add("u" + std::to_string(i++), "s",
            Eigen::Map<const Vector>(r.data(), r.size()));
  return set;
}

PldaModel random_model(std::mt19937_64& rng, int d) {
  PldaModel m;
  m.mu = testing::random_vector(rng, d, 0.5);
  m.b_precision = testing::lu_inverse(testing::random_spd(rng, d));
  m.w_precision = testing::lu_inverse(testing::random_spd(rng, d));
  return m;
}

EmbeddingSet random_labeled(std::mt19937_64& rng, int d, int speakers,
                            int max_per_speaker) {
  EmbeddingSet set(d);
  std::uniform_int_distribution<int> count(1, max_per_speaker);
  for (int s = 0; s < speakers; ++s) {
    const int n = count(rng);
    for (int i = 0; i < n; ++i)
      set.add("s" + std::to_string(s) + "u" + std::to_string(i),
              "s" + std::to_string(s), testing::random_vector(rng, d));
  }
  return set;
}

TEST(InitIdentityTest, Dim2) {
  const auto m = init_identity(2);
  EXPECT_EQ(m.b_precision, Matrix::Identity(2, 2));
  EXPECT_EQ(m.w_precision, Matrix::Identity(2, 2));
  EXPECT_EQ(m.mu, Vector::Zero(2));
  EXPECT_EQ(m.kind, PldaKind::kFull);
  EXPECT_EQ(m.iterations_trained, 0);
}

TEST(InitIdentityTest, Dim1IsScalar) {
  const auto m = init_identity(1);
  EXPECT_EQ(m.b_precision(0, 0), 1.0);
  EXPECT_EQ(m.w_precision(0, 0), 1.0);
  EXPECT_THROW(init_identity(0), Error);
}

TEST(EStepTest, TwoBasisVectors) {
  const auto stats = e_step(init_identity(2), one_speaker({{1, 0}, {0, 1}}));
  ASSERT_EQ(stats.speakers.size(), 1u);
  const auto& sp = stats.speakers[0];
  EXPECT_EQ(sp.count, 2);
  EXPECT_TRUE(sp.precision.isApprox(3.0 * Matrix::Identity(2, 2)));
  EXPECT_NEAR(sp.mean(0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(sp.mean(1), 1.0 / 3.0, 1e-15);
}

TEST(EStepTest, SingleUtterance) {
  const auto stats = e_step(init_identity(2), one_speaker({{0.6, 0.8}}));
  EXPECT_NEAR(stats.speakers[0].mean(0), 0.3, 1e-15);
  EXPECT_NEAR(stats.speakers[0].mean(1), 0.4, 1e-15);
}

TEST(EStepTest, MatchesIndependentLinearSolve) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = random_model(rng, 3);
    const auto set = random_labeled(rng, 3, 4, 5);
    const auto stats = e_step(model, set);
    const auto groups = set.speaker_groups();
    for (std::size_t s = 0; s < groups.size(); ++s) {
      Vector sum = Vector::Zero(3);
      for (auto idx : groups[s].members) sum += set[idx].vector;
      const double n = static_cast<double>(groups[s].members.size());
      const Matrix l = model.b_precision + n * model.w_precision;
      const Vector expected =
          l.fullPivLu().solve(model.b_precision * model.mu +
                              model.w_precision * sum);
      EXPECT_LT((stats.speakers[s].mean - expected).norm(), 1e-12);
      EXPECT_EQ(stats.speakers[s].precision, l);
    }
  }
}

TEST(EStepTest, RejectsUnlabeledAndMismatchedSets) {
  EmbeddingSet unlabeled(2);
  unlabeled.add("u", std::nullopt, Vector::Ones(2));
  EXPECT_THROW(e_step(init_identity(2), unlabeled), Error);
  EXPECT_THROW(e_step(init_identity(3), one_speaker({{1, 0}})), Error);
}

TEST(MStepTest, DiagonalKindHasExactZeroOffDiagonals) {
  std::mt19937_64 rng(8);
  const auto set = random_labeled(rng, 4, 20, 4);
  const auto m = m_step(e_step(init_identity(4), set), set, PldaKind::kDiagonal);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) {
        EXPECT_EQ(m.b_precision(i, j), 0.0);
        EXPECT_EQ(m.w_precision(i, j), 0.0);
      }
  EXPECT_EQ(m.kind, PldaKind::kDiagonal);
}

TEST(MStepTest, DiagonalKindKeepsDiagonalOfFullEstimate) {
  std::mt19937_64 rng(9);
  const auto set = random_labeled(rng, 3, 15, 4);
  const auto stats = e_step(init_identity(3), set);
  const auto full = m_step(stats, set, PldaKind::kFull);
  const auto diag = m_step(stats, set, PldaKind::kDiagonal);
  const Matrix full_b_cov = testing::lu_inverse(full.b_precision);
  const Matrix full_w_cov = testing::lu_inverse(full.w_precision);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(1.0 / diag.b_precision(i, i), full_b_cov(i, i), 1e-12);
    EXPECT_NEAR(1.0 / diag.w_precision(i, i), full_w_cov(i, i), 1e-12);
  }
  EXPECT_EQ(diag.mu, full.mu);
}

TEST(MStepTest, SingleSpeakerCollapsesToPosteriorCovariance) {
  const auto set = one_speaker({{1.0, 0.5}, {0.2, -0.3}, {0.7, 0.1}});
  const auto stats = e_step(init_identity(2), set);
  const auto m = m_step(stats, set, PldaKind::kFull);
  const Matrix b_cov = testing::lu_inverse(m.b_precision);
  const Matrix expected = testing::lu_inverse(stats.speakers[0].precision);
  EXPECT_LT((b_cov - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((m.mu - stats.speakers[0].mean).norm(), 1e-15);
}

TEST(MStepTest, MatchesBruteForceAccumulation) {
  // Two speakers, D = 2, posterior stats built by hand (not by e_step).
  EmbeddingSet set(2);
  set.add("a1", "A", (Vector(2) << 1.0, 0.0).finished());
  set.add("a2", "A", (Vector(2) << 0.5, 0.5).finished());
  set.add("b1", "B", (Vector(2) << -1.0, 0.25).finished());
  set.add("b2", "B", (Vector(2) << -0.5, -1.0).finished());
  set.add("b3", "B", (Vector(2) << 0.0, 0.75).finished());
  PosteriorStats stats;
  Matrix la(2, 2), lb(2, 2);
  la << 3.0, 0.4, 0.4, 2.5;
  lb << 4.0, -0.3, -0.3, 3.5;
  stats.speakers.push_back({"A", 2, (Vector(2) << 0.6, 0.1).finished(), la});
  stats.speakers.push_back({"B", 3, (Vector(2) << -0.4, 0.0).finished(), lb});

  const auto m = m_step(stats, set, PldaKind::kFull);

  // E[y y^T] = L^-1 + yhat yhat^T, expanded sums written out directly.
  const Matrix ca = testing::lu_inverse(la), cb = testing::lu_inverse(lb);
  const Vector ya = stats.speakers[0].mean, yb = stats.speakers[1].mean;
  const Matrix eyy_a = ca + ya * ya.transpose();
  const Matrix eyy_b = cb + yb * yb.transpose();
  const Vector mu = (ya + yb) / 2.0;
  const Matrix b_cov = (eyy_a + eyy_b) / 2.0 - mu * mu.transpose();
  Matrix w_cov = Matrix::Zero(2, 2);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const bool is_a = *set[i].speaker_id == "A";
    const Matrix& eyy = is_a ? eyy_a : eyy_b;
    const Vector& y = is_a ? ya : yb;
    const Vector& x = set[i].vector;
    w_cov += eyy - y * x.transpose() - x * y.transpose() + x * x.transpose();
  }
  w_cov /= 5.0;

  EXPECT_LT((m.mu - mu).norm(), 1e-14);
  EXPECT_LT((testing::lu_inverse(m.b_precision) - b_cov).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_LT((testing::lu_inverse(m.w_precision) - w_cov).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(MStepTest, InconsistentStatsThrow) {
  const auto set = one_speaker({{1, 0}, {0, 1}});
  auto stats = e_step(init_identity(2), set);
  stats.speakers[0].count = 5;
  EXPECT_THROW(m_step(stats, set, PldaKind::kFull), Error);
}

TEST(MStepTest, DegenerateCovarianceReportsDiagnostic) {
  // Every utterance identical and a single speaker: within covariance is the
  // posterior covariance only, but the between covariance of one speaker in
  // one dimension that never varies is still PD; force failure with NaN.
  const auto set = one_speaker({{1, 0}, {1, 0}});
  auto stats = e_step(init_identity(2), set);
  stats.speakers[0].precision(0, 0) = -1.0;
  EXPECT_THROW(m_step(stats, set, PldaKind::kFull), Error);
}

TEST(TrainTest, ZeroIterationsIsIdentity) {
  std::mt19937_64 rng(1);
  const auto set = random_labeled(rng, 3, 10, 3);
  const auto m = train(set, PldaKind::kFull, {.iterations = 0});
  EXPECT_EQ(m.b_precision, Matrix::Identity(3, 3));
  EXPECT_EQ(m.w_precision, Matrix::Identity(3, 3));
  EXPECT_EQ(m.mu, Vector::Zero(3));
  EXPECT_EQ(m.iterations_trained, 0);
}

TEST(TrainTest, HookSeesEveryIteration) {
  std::mt19937_64 rng(2);
  const auto set = random_labeled(rng, 3, 10, 3);
  std::vector<int> seen;
  train(set, PldaKind::kFull, {.iterations = 4},
        [&](int it, const PldaModel& m) {
          seen.push_back(it);
          EXPECT_EQ(m.iterations_trained, it);
        });
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(TrainTest, RejectsUnlabeledData) {
  EmbeddingSet set(2);
  set.add("a", "s", Vector::Ones(2));
  set.add("b", std::nullopt, Vector::Zero(2));
  EXPECT_THROW(train(set, PldaKind::kFull), Error);
}

TEST(TrainTest, LogLikelihoodIsMonotoneForBothKinds) {
  auto spec = SynthSpec::from_preset(SynthPreset::kCorrelatedBetween, 6, 150, 4, 21);
  spec.min_utterances = 1;
  spec.max_utterances = 6;
  const auto set = sample(spec).embeddings;
  for (auto kind : {PldaKind::kFull, PldaKind::kDiagonal}) {
    std::vector<double> ll;
    train(set, kind, {.iterations = 15},
          [&](int, const PldaModel& m) { ll.push_back(log_likelihood(m, set)); });
    for (std::size_t k = 1; k < ll.size(); ++k)
      EXPECT_GE(ll[k], ll[k - 1] - 1e-8 * std::abs(ll[k - 1]))
          << kind_name(kind) << " iteration " << k;
  }
}

TEST(TrainTest, InvariantsHoldAfterEveryIteration) {
  const auto set =
      sample(SynthSpec::from_preset(SynthPreset::kCorrelatedBetween, 5, 80, 3, 4))
          .embeddings;
  for (auto kind : {PldaKind::kFull, PldaKind::kDiagonal}) {
    train(set, kind, {.iterations = 8}, [&](int, const PldaModel& m) {
      EXPECT_NO_THROW(m.validate());
      EXPECT_TRUE(is_symmetric(m.b_precision, 1e-12));
      EXPECT_TRUE(is_symmetric(m.w_precision, 1e-12));
    });
  }
}

TEST(TrainTest, EarlyStopHaltsOnceConverged) {
  const auto set =
      sample(SynthSpec::from_preset(SynthPreset::kIsotropic, 3, 300, 5, 6)).embeddings;
  const auto m = train(set, PldaKind::kFull,
                       {.iterations = 500, .early_stop = true, .tolerance = 1e-8});
  EXPECT_LT(m.iterations_trained, 500);
  EXPECT_GT(m.iterations_trained, 1);
}

TEST(TrainTest, DriftFromTruthShrinksWithSampleSize) {
  std::mt19937_64 rng(13);
  SynthSpec spec;
  spec.dim = 4;
  spec.mu = Vector::Zero(4);
  spec.b_cov = testing::random_spd(rng, 4, 0.5);
  spec.w_cov = testing::random_spd(rng, 4, 0.5);
  spec.min_utterances = spec.max_utterances = 5;
  spec.speakers = 1;
  const auto truth = truth_model(spec);

  auto drift = [&](int speakers, std::uint64_t seed) {
    spec.speakers = speakers;
    spec.seed = seed;
    const auto set = sample(spec).embeddings;
    const auto next = m_step(e_step(truth, set), set, PldaKind::kFull);
    return testing::relative_frobenius(testing::lu_inverse(next.b_precision),
                                       spec.b_cov) +
           testing::relative_frobenius(testing::lu_inverse(next.w_precision),
                                       spec.w_cov);
  };
  const double small = drift(100, 31);
  const double large = drift(10000, 32);
  EXPECT_LT(large, small);
  EXPECT_LT(large, 0.1);
}

TEST(LogLikelihoodTest, ScalarClosedForm) {
  EmbeddingSet set(1);
  set.add("u", "s", Vector::Ones(1));
  const double expected = -0.5 * std::log(4.0 * std::numbers::pi) - 0.25;
  EXPECT_NEAR(log_likelihood(init_identity(1), set), expected, 1e-14);
  EXPECT_NEAR(expected, -1.5155, 5e-5);
}

TEST(LogLikelihoodTest, PermutationInvariant) {
  std::mt19937_64 rng(17);
  const auto model = random_model(rng, 3);
  std::vector<Vector> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(testing::random_vector(rng, 3));
  EmbeddingSet a(3), b(3);
  for (int i = 0; i < 4; ++i) {
    a.add("u" + std::to_string(i), "s", xs[i]);
    b.add("u" + std::to_string(i), "s", xs[3 - i]);
  }
  EXPECT_NEAR(log_likelihood(model, a), log_likelihood(model, b), 1e-12);
}

TEST(LogLikelihoodTest, MatchesJointGaussianOracle) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + trial % 3;
    GaussianParams params{testing::random_vector(rng, d),
                          testing::random_spd(rng, d),
                          testing::random_spd(rng, d)};
    PldaModel model{params.mu, testing::lu_inverse(params.b_cov),
                    testing::lu_inverse(params.w_cov)};
    const auto set = random_labeled(rng, d, 3, 3);
    double expected = 0.0;
    for (const auto& g : set.speaker_groups()) {
      std::vector<Vector> xs;
      for (auto idx : g.members) xs.push_back(set[idx].vector);
      expected += oracle_log_marginal(params, xs);
    }
    EXPECT_NEAR(log_likelihood(model, set), expected, 1e-8);
  }
}

TEST(ModelIoTest, IdentityRoundTrip) {
  std::stringstream ss;
  write_model(init_identity(3), ss);
  const auto back = read_model(ss, "mem");
  EXPECT_EQ(back.b_precision, Matrix::Identity(3, 3));
  EXPECT_EQ(back.w_precision, Matrix::Identity(3, 3));
  EXPECT_EQ(back.mu, Vector::Zero(3));
  EXPECT_EQ(back.kind, PldaKind::kFull);
}

TEST(ModelIoTest, ExactLayout) {
  std::stringstream ss;
  write_model(init_identity(2, PldaKind::kDiagonal), ss);
  EXPECT_EQ(ss.str(), "PLDA 2 diagonal 0\nMU 0 0\nB\n1 0\n0 1\nW\n1 0\n0 1\n");
}

TEST(ModelIoTest, RejectsInvalidFiles) {
  const char* asymmetric = "PLDA 2 full 0\nMU 0 0\nB\n1 0.5\n0 1\nW\n1 0\n0 1\n";
  const char* indefinite = "PLDA 2 full 0\nMU 0 0\nB\n1 2\n2 1\nW\n1 0\n0 1\n";
  const char* short_rows = "PLDA 2 full 0\nMU 0 0\nB\n1 0\nW\n1 0\n0 1\n";
  const char* bad_kind = "PLDA 1 sparse 0\nMU 0\nB\n1\nW\n1\n";
  const char* diag_offdiag =
      "PLDA 2 diagonal 0\nMU 0 0\nB\n1 0.1\n0.1 1\nW\n1 0\n0 1\n";
  const char* bad_mu = "PLDA 2 full 0\nMU 0\nB\n1 0\n0 1\nW\n1 0\n0 1\n";
  for (const char* text :
       {asymmetric, indefinite, short_rows, bad_kind, diag_offdiag, bad_mu}) {
    std::stringstream ss(text);
    EXPECT_THROW(read_model(ss, "mem"), Error) << text;
  }
}

TEST(ModelIoTest, TrainedModelScoresSurviveRoundTrip) {
  const auto set =
      sample(SynthSpec::from_preset(SynthPreset::kCorrelatedBetween, 8, 100, 4, 2))
          .embeddings;
  const auto model = train(set, PldaKind::kFull, {.iterations = 5});
  testing::TempDir dir("model_io");
  save_model(model, dir.file("m.plda"), "provenance line");
  const auto back = load_model(dir.file("m.plda"));
  EXPECT_EQ(back.iterations_trained, 5);
  const auto k1 = build_kernel(model);
  const auto k2 = build_kernel(back);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const Vector a = testing::random_unit(rng, 8), b = testing::random_unit(rng, 8);
    EXPECT_NEAR(pairwise_llr(k1, a, b), pairwise_llr(k2, a, b), 1e-12);
  }
}

}  // namespace
}  // namespace svback
