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

#include "svback/diagnostics.h"

#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "svback/error.h"
#include "svback/text_io.h"

namespace svback {

ScatterPair compute_scatter(const EmbeddingSet& set,
                            ScatterNormalization norm) {
  if (!set.fully_labeled())
    throw Error("compute_scatter: every record needs a speaker id");
  const auto groups = set.speaker_groups();
  if (groups.size() < 2)
    throw Error("compute_scatter: need at least two speakers");
  const Eigen::Index d = set.dim();

  ScatterPair out;
  out.global_mean = compute_mean(set).mean;
  out.between = Matrix::Zero(d, d);
  out.within = Matrix::Zero(d, d);
  for (const auto& g : groups) {
    Vector y = Vector::Zero(d);
    for (std::size_t idx : g.members) y += set[idx].vector;
    y /= static_cast<double>(g.members.size());
    for (std::size_t idx : g.members) {
      const Vector r = set[idx].vector - y;
      out.within.noalias() += r * r.transpose();
    }
    const double n = static_cast<double>(g.members.size());
    if (norm == ScatterNormalization::kByUtterances) {
      const Vector dev = y - out.global_mean;
      out.between.noalias() += n * dev * dev.transpose();
    } else {
      out.between.noalias() += n * y * y.transpose();
    }
    out.speaker_ids.push_back(g.speaker_id);
    out.speaker_means.push_back(std::move(y));
  }
  const double z = norm == ScatterNormalization::kByUtterances
                       ? static_cast<double>(set.size())
                       : static_cast<double>(groups.size());
  out.between /= z;
  out.within /= z;
  if (norm == ScatterNormalization::kBySpeakers)
    out.between.noalias() -= out.global_mean * out.global_mean.transpose();
  out.between = symmetrize(out.between);
  out.within = symmetrize(out.within);
  return out;
}

double diagonal_index(const Matrix& g) {
  if (g.rows() != g.cols() || g.rows() == 0)
    throw Error("diagonal_index: matrix must be square and non-empty");
  if (!g.allFinite()) throw Error("diagonal_index: non-finite entries");
  if ((g.array() < 0.0).any())
    throw Error("diagonal_index: entries must be non-negative");
  const double trace = g.trace();
  double off = 0.0;
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      if (i != j) off += g(i, j);
  const double total = trace + off;
  if (!(total > 0.0)) throw Error("diagonal_index: all-zero matrix");
  return trace / total;
}

double abs_diagonal_index(const Matrix& cov) {
  return diagonal_index(cov.cwiseAbs());
}

DiagonalIndexReport diagonal_indices(const ScatterPair& scatter) {
  auto index_or_none = [](const Matrix& m) -> std::optional<double> {
    if (!(m.cwiseAbs().sum() > 0.0)) return std::nullopt;
    return abs_diagonal_index(m);
  };
  return {index_or_none(scatter.between), index_or_none(scatter.within)};
}

void export_heatmap(const Matrix& g, const std::string& path,
                    std::string_view provenance) {
  if (!g.allFinite()) throw Error("export_heatmap: non-finite entries");
  const Matrix a = g.cwiseAbs();
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  if (!provenance.empty()) write_comment_block(os, provenance);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      os << (c ? "," : "") << format_double(a(r, c));
    os << '\n';
  }
  if (a.sum() > 0.0)
    os << "# diagonal_index=" << format_double(diagonal_index(a)) << '\n';
  else
    os << "# diagonal_index=undefined\n";
  os.flush();
  if (!os) throw Error("write to '" + path + "' failed");
}

Heatmap read_heatmap(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "' for reading");
  Heatmap out;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  const std::string tag = "# diagonal_index=";
  while (std::getline(is, line)) {
    ++line_no;
    if (line.rfind(tag, 0) == 0) {
      const std::string v = line.substr(tag.size());
      if (v != "undefined")
        out.diagonal_index = parse_double(v, path + ":" + std::to_string(line_no));
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto cell = std::string_view(line).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      row.push_back(parse_double(cell, path + ":" + std::to_string(line_no)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(path + ":" + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index m = n ? static_cast<Eigen::Index>(rows.front().size()) : 0;
  out.values.resize(n, m);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < m; ++c) out.values(r, c) = rows[r][c];
  return out;
}

LdaTransform lda_projection(const ScatterPair& scatter, int out_dim) {
  const Eigen::Index d = scatter.within.rows();
  if (out_dim < 1 || out_dim > d)
    throw Error("lda_projection: output dimension must be in [1, " +
                std::to_string(d) + "]");
  Matrix within = symmetrize(scatter.within);
  if (!is_spd(within)) {
    const double scale = within.trace() / static_cast<double>(d);
    within.diagonal().array() += 1e-10 * scale;
    if (!(scale > 0.0) || !is_spd(within))
      throw Error("lda_projection: within-class scatter is not positive "
                  "definite");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(
      symmetrize(scatter.between), within,
      Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success)
    throw Error("lda_projection: generalized eigensolver failed");

  LdaTransform out;
  out.projection.resize(d, out_dim);
  out.eigenvalues.resize(out_dim);
  for (int k = 0; k < out_dim; ++k) {
    const Eigen::Index src = d - 1 - k;
    Vector v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.projection.col(k) = v;
    out.eigenvalues(k) = solver.eigenvalues()(src);
  }
  return out;
}

EmbeddingSet apply_projection(const EmbeddingSet& set,
                              const Matrix& projection) {
  if (projection.rows() != set.dim())
    throw Error("projection expects dimension " +
                std::to_string(projection.rows()) + ", embeddings have " +
                std::to_string(set.dim()));
  EmbeddingSet out(static_cast<int>(projection.cols()));
  for (const auto& r : set.records())
    out.add(r.utterance_id, r.speaker_id, projection.transpose() * r.vector);
  return out;
}

void save_projection(const Matrix& projection, const std::string& path,
                     std::string_view provenance) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  if (!provenance.empty()) write_comment_block(os, provenance);
  os << "LDA " << projection.rows() << ' ' << projection.cols() << '\n';
  for (Eigen::Index r = 0; r < projection.rows(); ++r) {
    for (Eigen::Index c = 0; c < projection.cols(); ++c)
      os << (c ? " " : "") << format_double(projection(r, c));
    os << '\n';
  }
  os.flush();
  if (!os) throw Error("write to '" + path + "' failed");
}

Matrix load_projection(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "' for reading");
  LineReader reader(is, path);
  std::string line;
  if (!reader.next(line)) throw Error(path + ": empty LDA file");
  const auto h = split_fields(line);
  if (h.size() != 3 || h[0] != "LDA")
    throw Error(reader.where() + ": expected header 'LDA <D> <K>'");
  const long long d = parse_int(h[1], reader.where());
  const long long k = parse_int(h[2], reader.where());
  if (d < 1 || k < 1 || k > d) throw Error(reader.where() + ": bad shape");
  Matrix m(d, k);
  for (long long r = 0; r < d; ++r) {
    if (!reader.next(line)) throw Error(path + ": truncated LDA matrix");
    const auto f = split_fields(line);
    if (static_cast<long long>(f.size()) != k)
      throw Error(reader.where() + ": expected " + std::to_string(k) +
                  " values");
    for (long long c = 0; c < k; ++c) m(r, c) = parse_double(f[c], reader.where());
  }
  return m;
}

}  // namespace svback
