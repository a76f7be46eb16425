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

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "svback/error.h"
#include "svback/text_io.h"

namespace svback {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void require_labeled(const EmbeddingSet& set, std::string_view op) {
  if (!set.fully_labeled())
    throw Error(std::string(op) +
                ": every record needs a speaker id ('-' is unlabeled)");
}

bool off_diagonal_zero(const Matrix& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j && a(i, j) != 0.0) return false;
  return true;
}

// Turns a covariance estimate into a precision. Diagonal kinds invert
// entrywise so off-diagonals stay exactly zero.
Matrix covariance_to_precision(const Matrix& cov, PldaKind kind,
                               std::string_view what) {
  const Eigen::Index d = cov.rows();
  if (kind == PldaKind::kDiagonal) {
    Vector diag = cov.diagonal();
    const double jitter = 1e-10 * diag.sum() / static_cast<double>(d);
    Matrix prec = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      double v = diag(i);
      if (!(v > 0.0)) v += jitter;
      if (!(v > 0.0) || !std::isfinite(v))
        throw Error(std::string(what) + ": variance " + std::to_string(i) +
                    " is not positive (" + std::to_string(diag(i)) + ")");
      prec(i, i) = 1.0 / v;
    }
    return prec;
  }
  const Matrix sym = symmetrize(cov);
  const auto llt = factor_spd(sym, what);
  return symmetrize(llt.solve(Matrix::Identity(d, d)));
}

}  // namespace

std::string_view kind_name(PldaKind kind) {
  return kind == PldaKind::kFull ? "full" : "diagonal";
}

PldaKind parse_kind(std::string_view name) {
  if (name == "full") return PldaKind::kFull;
  if (name == "diagonal") return PldaKind::kDiagonal;
  throw Error("unknown PLDA kind '" + std::string(name) + "'");
}

void PldaModel::validate() const {
  const Eigen::Index d = mu.size();
  if (d < 1) throw Error("PLDA model has zero dimension");
  if (b_precision.rows() != d || b_precision.cols() != d ||
      w_precision.rows() != d || w_precision.cols() != d)
    throw Error("PLDA model matrices do not match dimension " +
                std::to_string(d));
  if (!mu.allFinite() || !b_precision.allFinite() || !w_precision.allFinite())
    throw Error("PLDA model has non-finite parameters");
  for (const auto* m : {&b_precision, &w_precision}) {
    const char* name = m == &b_precision ? "B" : "W";
    const double scale = std::max(1.0, m->cwiseAbs().maxCoeff());
    if (!is_symmetric(*m, 1e-12 * scale))
      throw Error(std::string("PLDA precision ") + name + " is not symmetric");
    if (!is_spd(*m))
      throw Error(std::string("PLDA precision ") + name +
                  " is not positive definite");
    if (kind == PldaKind::kDiagonal && !off_diagonal_zero(*m))
      throw Error(std::string("diagonal PLDA precision ") + name +
                  " has non-zero off-diagonal entries");
  }
  if (iterations_trained < 0)
    throw Error("PLDA model has negative iteration count");
}

PldaModel init_identity(int dim, PldaKind kind) {
  if (dim < 1) throw Error("PLDA dimension must be positive");
  return {Vector::Zero(dim), Matrix::Identity(dim, dim),
          Matrix::Identity(dim, dim), kind, 0};
}

PosteriorStats e_step(const PldaModel& model, const EmbeddingSet& set) {
  require_labeled(set, "e_step");
  if (set.dim() != model.dim())
    throw Error("e_step: embeddings have dimension " +
                std::to_string(set.dim()) + ", model has " +
                std::to_string(model.dim()));
  const Matrix& b = model.b_precision;
  const Matrix& w = model.w_precision;
  const Vector b_mu = b * model.mu;

  std::map<int, Eigen::LLT<Matrix>> factors;
  PosteriorStats stats;
  for (const auto& group : set.speaker_groups()) {
    const int n = static_cast<int>(group.members.size());
    Vector sum = Vector::Zero(set.dim());
    for (std::size_t idx : group.members) sum += set[idx].vector;

    Matrix precision = b + static_cast<double>(n) * w;
    auto it = factors.find(n);
    if (it == factors.end()) {
      Eigen::LLT<Matrix> llt(precision);
      if (llt.info() != Eigen::Success)
        throw Error("e_step: posterior precision for speaker " +
                    group.speaker_id + " is not positive definite");
      it = factors.emplace(n, std::move(llt)).first;
    }
    Vector mean = it->second.solve(b_mu + w * sum);
    stats.speakers.push_back(
        {group.speaker_id, n, std::move(mean), std::move(precision)});
  }
  return stats;
}

PldaModel m_step(const PosteriorStats& stats, const EmbeddingSet& set,
                 PldaKind kind) {
  require_labeled(set, "m_step");
  const auto groups = set.speaker_groups();
  if (groups.size() != stats.speakers.size())
    throw Error("m_step: posterior stats cover " +
                std::to_string(stats.speakers.size()) + " speakers, set has " +
                std::to_string(groups.size()));
  if (groups.empty()) throw Error("m_step: no speakers");
  const Eigen::Index d = set.dim();
  const double m = static_cast<double>(groups.size());
  const double n_total = static_cast<double>(set.size());

  Vector mu = Vector::Zero(d);
  for (const auto& sp : stats.speakers) mu += sp.mean;
  mu /= m;

  // Posterior covariances depend only on the precision; inverting once per
  // distinct count keeps this O(#counts * D^3).
  std::map<int, Matrix> posterior_cov;
  Matrix between = Matrix::Zero(d, d);
  Matrix within = Matrix::Zero(d, d);
  for (std::size_t s = 0; s < groups.size(); ++s) {
    const auto& sp = stats.speakers[s];
    const auto& group = groups[s];
    if (sp.speaker_id != group.speaker_id ||
        sp.count != static_cast<int>(group.members.size()) ||
        sp.mean.size() != d)
      throw Error("m_step: posterior stats for speaker " + sp.speaker_id +
                  " do not match the embedding set");
    auto it = posterior_cov.find(sp.count);
    if (it == posterior_cov.end())
      it = posterior_cov
               .emplace(sp.count,
                        spd_inverse(sp.precision, "m_step posterior precision"))
               .first;
    const Matrix& cov = it->second;

    const Vector dev = sp.mean - mu;
    between += cov;
    between.noalias() += dev * dev.transpose();

    within += static_cast<double>(sp.count) * cov;
    for (std::size_t idx : group.members) {
      const Vector r = sp.mean - set[idx].vector;
      within.noalias() += r * r.transpose();
    }
  }
  between /= m;
  within /= n_total;

  PldaModel out;
  out.mu = std::move(mu);
  out.kind = kind;
  out.b_precision =
      covariance_to_precision(between, kind, "m_step between-class covariance");
  out.w_precision =
      covariance_to_precision(within, kind, "m_step within-class covariance");
  return out;
}

PldaModel train(const EmbeddingSet& set, PldaKind kind,
                const TrainOptions& options, const SnapshotHook& hook) {
  require_labeled(set, "train");
  if (options.iterations < 0)
    throw Error("train: iteration count must be non-negative");
  PldaModel model = init_identity(set.dim(), kind);
  if (hook) hook(0, model);

  double previous = 0.0;
  if (options.early_stop) previous = log_likelihood(model, set);
  for (int it = 1; it <= options.iterations; ++it) {
    const auto stats = e_step(model, set);
    model = m_step(stats, set, kind);
    model.iterations_trained = it;
    if (hook) hook(it, model);
    if (options.early_stop) {
      const double current = log_likelihood(model, set);
      if (std::abs(current - previous) <
          options.tolerance * std::abs(previous))
        break;
      previous = current;
    }
  }
  return model;
}

LogMarginal::LogMarginal(const PldaModel& model) : model_(model) {
  model_.validate();
  log_det_b_ = log_det(factor_spd(model_.b_precision, "B"));
  log_det_w_ = log_det(factor_spd(model_.w_precision, "W"));
}

void LogMarginal::prepare(int max_count) {
  for (int n = static_cast<int>(cache_.size()); n <= max_count; ++n) {
    if (n == 0) {
      cache_.push_back({});
      continue;
    }
    cache_.push_back(terms_for(n));
  }
}

LogMarginal::CountTerms LogMarginal::terms_for(int count) const {
  const Matrix l =
      model_.b_precision + static_cast<double>(count) * model_.w_precision;
  const Eigen::LLT<Matrix> factor(l);
  if (factor.info() != Eigen::Success)
    throw Error("B + nW is not positive definite for n = " +
                std::to_string(count));
  const Matrix& w = model_.w_precision;
  return {symmetrize(w * factor.solve(w)), log_det(factor)};
}

SetStats LogMarginal::accumulate(std::span<const Vector> xs) const {
  SetStats s{0, Vector::Zero(model_.dim()), 0.0};
  for (const auto& x : xs) s = merge(s, accumulate(x));
  return s;
}

SetStats LogMarginal::accumulate(const Vector& x) const {
  if (x.size() != model_.dim())
    throw Error("vector has dimension " + std::to_string(x.size()) +
                ", model has " + std::to_string(model_.dim()));
  Vector z = x - model_.mu;
  const double quad = z.dot(model_.w_precision * z);
  return {1, std::move(z), quad};
}

SetStats LogMarginal::merge(const SetStats& a, const SetStats& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  return {a.count + b.count, a.sum + b.sum, a.quad + b.quad};
}

double LogMarginal::operator()(const SetStats& stats) const {
  if (stats.count < 1) throw Error("log marginal of an empty set");
  const double n = static_cast<double>(stats.count);
  const double d = static_cast<double>(model_.dim());
  auto evaluate = [&](const CountTerms& t) {
    const double proj = stats.sum.dot(t.projector * stats.sum);
    return 0.5 * (proj - stats.quad + log_det_b_ + n * log_det_w_ -
                  t.log_det - n * d * kLog2Pi);
  };
  if (static_cast<std::size_t>(stats.count) < cache_.size())
    return evaluate(cache_[stats.count]);
  return evaluate(terms_for(stats.count));
}

double log_likelihood(const PldaModel& model, const EmbeddingSet& set) {
  require_labeled(set, "log_likelihood");
  if (set.dim() != model.dim())
    throw Error("log_likelihood: dimension mismatch");
  LogMarginal marginal(model);
  const auto groups = set.speaker_groups();
  int max_count = 0;
  for (const auto& g : groups)
    max_count = std::max(max_count, static_cast<int>(g.members.size()));
  marginal.prepare(max_count);

  double total = 0.0;
  for (const auto& g : groups) {
    SetStats s{0, Vector::Zero(set.dim()), 0.0};
    for (std::size_t idx : g.members)
      s = LogMarginal::merge(s, marginal.accumulate(set[idx].vector));
    total += marginal(s);
  }
  return total;
}

PldaModel read_model(std::istream& is, const std::string& source) {
  LineReader reader(is, source);
  std::string line;
  if (!reader.next(line)) throw Error(source + ": empty model file");
  const auto header = split_fields(line);
  if (header.size() != 4 || header[0] != "PLDA")
    throw Error(reader.where() +
                ": expected header 'PLDA <D> <kind> <iterations>'");
  const long long d = parse_int(header[1], reader.where());
  if (d < 1) throw Error(reader.where() + ": invalid dimension");
  PldaModel model;
  try {
    model.kind = parse_kind(header[2]);
  } catch (const Error& e) {
    throw Error(reader.where() + ": " + e.what());
  }
  model.iterations_trained =
      static_cast<int>(parse_int(header[3], reader.where()));

  if (!reader.next(line)) throw Error(source + ": missing MU line");
  auto fields = split_fields(line);
  if (fields.empty() || fields[0] != "MU" ||
      static_cast<long long>(fields.size()) != d + 1)
    throw Error(reader.where() + ": expected 'MU' followed by " +
                std::to_string(d) + " values");
  model.mu.resize(d);
  for (long long k = 0; k < d; ++k)
    model.mu(k) = parse_double(fields[k + 1], reader.where());

  auto read_matrix = [&](std::string_view tag) {
    if (!reader.next(line) || split_fields(line) !=
                                  std::vector<std::string_view>{tag})
      throw Error(reader.where() + ": expected '" + std::string(tag) + "'");
    Matrix m(d, d);
    for (long long r = 0; r < d; ++r) {
      if (!reader.next(line))
        throw Error(source + ": matrix " + std::string(tag) + " has only " +
                    std::to_string(r) + " rows");
      const auto row = split_fields(line);
      if (static_cast<long long>(row.size()) != d)
        throw Error(reader.where() + ": expected " + std::to_string(d) +
                    " values in matrix " + std::string(tag));
      for (long long c = 0; c < d; ++c)
        m(r, c) = parse_double(row[c], reader.where());
    }
    return m;
  };
  model.b_precision = read_matrix("B");
  model.w_precision = read_matrix("W");
  if (reader.next(line)) throw Error(reader.where() + ": trailing data");
  try {
    model.validate();
  } catch (const Error& e) {
    throw Error(source + ": " + e.what());
  }
  return model;
}

PldaModel load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "' for reading");
  return read_model(is, path);
}

void write_model(const PldaModel& model, std::ostream& os,
                 std::string_view provenance) {
  if (!provenance.empty()) write_comment_block(os, provenance);
  const Eigen::Index d = model.mu.size();
  os << "PLDA " << d << ' ' << kind_name(model.kind) << ' '
     << model.iterations_trained << '\n';
  os << "MU";
  for (Eigen::Index k = 0; k < d; ++k) os << ' ' << format_double(model.mu(k));
  os << '\n';
  auto write_matrix = [&](std::string_view tag, const Matrix& m) {
    os << tag << '\n';
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c)
        os << (c ? " " : "") << format_double(m(r, c));
      os << '\n';
    }
  };
  write_matrix("B", model.b_precision);
  write_matrix("W", model.w_precision);
}

void save_model(const PldaModel& model, const std::string& path,
                std::string_view provenance) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_model(model, os, provenance);
  os.flush();
  if (!os) throw Error("write to '" + path + "' failed");
}

}  // namespace svback
