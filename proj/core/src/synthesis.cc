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

#include "svback/synthesis.h"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "svback/error.h"
#include "svback/random.h"

namespace svback {

namespace {

// Dense lower Cholesky factor; kept separate from the Eigen path used by the
// model code so the oracle checks an independent computation.
bool cholesky_lower(const Matrix& a, Matrix& l) {
  const Eigen::Index n = a.rows();
  l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) return false;
    l(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  return true;
}

std::string numbered(std::string_view prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*d", width, value);
  return std::string(prefix) + buf;
}

}  // namespace

std::string_view preset_name(SynthPreset preset) {
  switch (preset) {
    case SynthPreset::kIsotropic: return "isotropic";
    case SynthPreset::kCorrelatedBetween: return "correlated-between";
    case SynthPreset::kCustom: return "custom";
  }
  return "custom";
}

SynthPreset parse_preset(std::string_view name) {
  if (name == "isotropic") return SynthPreset::kIsotropic;
  if (name == "correlated-between") return SynthPreset::kCorrelatedBetween;
  if (name == "custom") return SynthPreset::kCustom;
  throw Error("unknown preset '" + std::string(name) + "'");
}

Matrix banded_covariance(int dim, double rho) {
  if (dim < 1) throw Error("banded_covariance: dimension must be positive");
  if (!(std::abs(rho) < 1.0))
    throw Error("banded_covariance: |rho| must be below 1");
  Matrix c(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) c(i, j) = std::pow(rho, std::abs(i - j));
  return c;
}

SynthSpec SynthSpec::from_preset(SynthPreset preset, int dim, int speakers,
                                 int utterances_per_speaker,
                                 std::uint64_t seed) {
  if (dim < 1) throw Error("synthesis: dimension must be positive");
  SynthSpec s;
  s.dim = dim;
  s.speakers = speakers;
  s.min_utterances = s.max_utterances = utterances_per_speaker;
  s.mu = Vector::Zero(dim);
  s.w_cov = Matrix::Identity(dim, dim);
  s.seed = seed;
  s.preset = preset;
  switch (preset) {
    case SynthPreset::kIsotropic:
      s.b_cov = Matrix::Identity(dim, dim);
      break;
    case SynthPreset::kCorrelatedBetween:
      s.b_cov = banded_covariance(dim, kCorrelatedRho);
      break;
    case SynthPreset::kCustom:
      throw Error("the custom preset has no defaults; fill SynthSpec directly");
  }
  s.validate();
  return s;
}

void SynthSpec::validate() const {
  if (dim < 1) throw Error("synthesis: dimension must be positive");
  if (speakers < 1) throw Error("synthesis: need at least one speaker");
  if (min_utterances < 1 || max_utterances < min_utterances)
    throw Error("synthesis: invalid utterances-per-speaker range");
  if (mu.size() != dim || b_cov.rows() != dim || b_cov.cols() != dim ||
      w_cov.rows() != dim || w_cov.cols() != dim)
    throw Error("synthesis: parameter shapes do not match dimension");
  if (!mu.allFinite()) throw Error("synthesis: non-finite mean");
  if (!is_symmetric(b_cov, 1e-12) || !is_spd(b_cov))
    throw Error("synthesis: between-class covariance is not SPD");
  if (!is_symmetric(w_cov, 1e-12) || !is_spd(w_cov))
    throw Error("synthesis: within-class covariance is not SPD");
}

SynthResult sample(const SynthSpec& spec) {
  spec.validate();
  const Eigen::LLT<Matrix> b_llt(spec.b_cov);
  const Eigen::LLT<Matrix> w_llt(spec.w_cov);
  const Matrix b_factor = b_llt.matrixL();
  const Matrix w_factor = w_llt.matrixL();

  RandomSource rng(spec.seed);
  auto draw = [&]() {
    Vector z(spec.dim);
    for (int k = 0; k < spec.dim; ++k) z(k) = rng.normal();
    return z;
  };

  SynthResult out{EmbeddingSet(spec.dim), {}};
  out.speaker_means.reserve(spec.speakers);
  for (int m = 0; m < spec.speakers; ++m) {
    const int count = spec.min_utterances == spec.max_utterances
                          ? spec.min_utterances
                          : rng.uniform_int(spec.min_utterances,
                                            spec.max_utterances);
    Vector y = spec.mu + b_factor * draw();
    const std::string spk = numbered(spec.id_prefix, m, 5);
    for (int n = 0; n < count; ++n) {
      Vector x = y + w_factor * draw();
      out.embeddings.add(numbered(spk + "-utt", n, 3), spk, std::move(x));
    }
    out.speaker_means.push_back(std::move(y));
  }
  return out;
}

PldaModel truth_model(const SynthSpec& spec) {
  spec.validate();
  PldaModel m;
  m.mu = spec.mu;
  m.b_precision = spd_inverse(spec.b_cov, "between-class covariance");
  m.w_precision = spd_inverse(spec.w_cov, "within-class covariance");
  m.kind = PldaKind::kFull;
  return m;
}

GaussianParams params_of(const SynthSpec& spec) {
  return {spec.mu, spec.b_cov, spec.w_cov};
}

double oracle_log_marginal(const GaussianParams& params,
                           std::span<const Vector> xs) {
  if (xs.empty()) throw Error("oracle_log_marginal: empty set");
  const Eigen::Index d = params.mu.size();
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  const Eigen::Index nd = n * d;

  Matrix cov(nd, nd);
  Vector r(nd);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (xs[i].size() != d) throw Error("oracle_log_marginal: dimension mismatch");
    r.segment(i * d, d) = xs[i] - params.mu;
    for (Eigen::Index j = 0; j < n; ++j)
      cov.block(i * d, j * d, d, d) =
          i == j ? Matrix(params.b_cov + params.w_cov) : params.b_cov;
  }
  Matrix l;
  if (!cholesky_lower(cov, l))
    throw Error("oracle_log_marginal: stacked covariance is not SPD");

  // Forward substitution: l u = r, so r^T cov^-1 r = |u|^2.
  Vector u(nd);
  for (Eigen::Index i = 0; i < nd; ++i) {
    double v = r(i);
    for (Eigen::Index k = 0; k < i; ++k) v -= l(i, k) * u(k);
    u(i) = v / l(i, i);
  }
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < nd; ++i) log_det += 2.0 * std::log(l(i, i));
  return -0.5 * (static_cast<double>(nd) * std::log(2.0 * std::numbers::pi) +
                 log_det + u.squaredNorm());
}

double oracle_llr(const GaussianParams& params, std::span<const Vector> x1,
                  std::span<const Vector> x2) {
  std::vector<Vector> both(x1.begin(), x1.end());
  both.insert(both.end(), x2.begin(), x2.end());
  return oracle_log_marginal(params, both) - oracle_log_marginal(params, x1) -
         oracle_log_marginal(params, x2);
}

std::vector<Trial> make_trials(const EmbeddingSet& set) {
  if (!set.fully_labeled())
    throw Error("make_trials: every record needs a speaker id");
  std::vector<Trial> trials;
  const std::size_t n = set.size();
  trials.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      trials.push_back({set[i].utterance_id, set[j].utterance_id,
                        *set[i].speaker_id == *set[j].speaker_id
                            ? TrialLabel::kTarget
                            : TrialLabel::kNontarget});
  return trials;
}

}  // namespace svback
