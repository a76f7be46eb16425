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

#include "svback/embedding_store.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "svback/error.h"
#include "svback/text_io.h"

namespace svback {

namespace {

bool valid_id(std::string_view id) {
  if (id.empty() || id.front() == '#') return false;
  for (char c : id)
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return false;
  return true;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "' for reading");
  return is;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  return os;
}

void finish_output(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw Error("write to '" + path + "' failed");
}

}  // namespace

EmbeddingSet::EmbeddingSet(int dim) : dim_(dim) {
  if (dim < 1) throw Error("embedding dimension must be positive");
}

void EmbeddingSet::add(std::string utterance_id,
                       std::optional<std::string> speaker_id, Vector vector) {
  if (!valid_id(utterance_id))
    throw Error("invalid utterance id '" + utterance_id + "'");
  if (speaker_id && (!valid_id(*speaker_id) || *speaker_id == "-"))
    throw Error("invalid speaker id '" + *speaker_id + "' for utterance " +
                utterance_id);
  if (vector.size() != dim_)
    throw Error("utterance " + utterance_id + " has " +
                std::to_string(vector.size()) + " components, expected " +
                std::to_string(dim_));
  if (!vector.allFinite())
    throw Error("utterance " + utterance_id + " has non-finite components");
  if (index_.contains(utterance_id))
    throw Error("duplicate utterance id '" + utterance_id + "'");
  index_.emplace(utterance_id, records_.size());
  records_.push_back(
      {std::move(utterance_id), std::move(speaker_id), std::move(vector)});
}

std::optional<std::size_t> EmbeddingSet::find(
    std::string_view utterance_id) const {
  const auto it = index_.find(std::string(utterance_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool EmbeddingSet::fully_labeled() const {
  for (const auto& r : records_)
    if (!r.speaker_id) return false;
  return true;
}

std::vector<SpeakerGroup> EmbeddingSet::speaker_groups() const {
  std::vector<SpeakerGroup> groups;
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& spk = records_[i].speaker_id;
    if (!spk) continue;
    auto [it, inserted] = position.emplace(*spk, groups.size());
    if (inserted) groups.push_back({*spk, {}});
    groups[it->second].members.push_back(i);
  }
  return groups;
}

PreprocessStats compute_mean(const EmbeddingSet& set) {
  if (set.empty()) throw Error("cannot compute the mean of an empty set");
  Vector sum = Vector::Zero(set.dim());
  for (const auto& r : set.records()) sum += r.vector;
  return {sum / static_cast<double>(set.size()),
          StatsSource::kComputedFromData};
}

Vector center_and_normalize(const Vector& x, const Vector& mean,
                            std::string_view id) {
  Vector centered = x - mean;
  const double norm = centered.norm();
  if (!(norm > 0.0))
    throw Error("utterance " + std::string(id) +
                " has zero norm after mean subtraction");
  return centered / norm;
}

EmbeddingSet preprocess(const EmbeddingSet& set, const PreprocessStats& stats) {
  if (stats.mean.size() != set.dim())
    throw Error("preprocessing mean has dimension " +
                std::to_string(stats.mean.size()) + ", embeddings have " +
                std::to_string(set.dim()));
  if (!stats.mean.allFinite())
    throw Error("preprocessing mean has non-finite components");
  EmbeddingSet out(set.dim());
  for (const auto& r : set.records())
    out.add(r.utterance_id, r.speaker_id,
            center_and_normalize(r.vector, stats.mean, r.utterance_id));
  return out;
}

EmbeddingSet read_embeddings(std::istream& is, const std::string& source) {
  LineReader reader(is, source);
  std::string line;
  if (!reader.next(line)) throw Error(source + ": empty embedding file");
  const auto header = split_fields(line);
  if (header.size() != 3 || header[0] != "EMB")
    throw Error(reader.where() + ": expected header 'EMB <N> <D>'");
  const long long n = parse_int(header[1], reader.where());
  const long long d = parse_int(header[2], reader.where());
  if (n < 0 || d < 1)
    throw Error(reader.where() + ": invalid header counts");

  EmbeddingSet set(static_cast<int>(d));
  for (long long row = 0; row < n; ++row) {
    if (!reader.next(line))
      throw Error(source + ": expected " + std::to_string(n) +
                  " rows, found " + std::to_string(row));
    const auto fields = split_fields(line);
    if (static_cast<long long>(fields.size()) != d + 2)
      throw Error(reader.where() + ": expected " + std::to_string(d) +
                  " values, found " +
                  std::to_string(static_cast<long long>(fields.size()) - 2));
    Vector v(d);
    for (long long k = 0; k < d; ++k)
      v(k) = parse_double(fields[k + 2], reader.where());
    std::optional<std::string> spk;
    if (fields[1] != "-") spk = std::string(fields[1]);
    try {
      set.add(std::string(fields[0]), std::move(spk), std::move(v));
    } catch (const Error& e) {
      throw Error(reader.where() + ": " + e.what());
    }
  }
  if (reader.next(line))
    throw Error(reader.where() + ": trailing data after " +
                std::to_string(n) + " rows");
  return set;
}

EmbeddingSet read_embeddings(const std::string& path) {
  auto is = open_input(path);
  return read_embeddings(is, path);
}

void write_embeddings(const EmbeddingSet& set, std::ostream& os,
                      std::string_view provenance) {
  if (!provenance.empty()) write_comment_block(os, provenance);
  os << "EMB " << set.size() << ' ' << set.dim() << '\n';
  for (const auto& r : set.records()) {
    os << r.utterance_id << ' ' << (r.speaker_id ? *r.speaker_id : "-");
    for (Eigen::Index k = 0; k < r.vector.size(); ++k)
      os << ' ' << format_double(r.vector(k));
    os << '\n';
  }
}

void write_embeddings(const EmbeddingSet& set, const std::string& path,
                      std::string_view provenance) {
  auto os = open_output(path);
  write_embeddings(set, os, provenance);
  finish_output(os, path);
}

PreprocessStats read_stats(const std::string& path) {
  auto is = open_input(path);
  LineReader reader(is, path);
  std::string line;
  if (!reader.next(line)) throw Error(path + ": empty mean file");
  const auto header = split_fields(line);
  if (header.size() != 2 || header[0] != "MEAN")
    throw Error(reader.where() + ": expected header 'MEAN <D>'");
  const long long d = parse_int(header[1], reader.where());
  if (d < 1) throw Error(reader.where() + ": invalid dimension");
  if (!reader.next(line)) throw Error(path + ": missing mean values");
  const auto fields = split_fields(line);
  if (static_cast<long long>(fields.size()) != d)
    throw Error(reader.where() + ": expected " + std::to_string(d) +
                " values");
  Vector mean(d);
  for (long long k = 0; k < d; ++k)
    mean(k) = parse_double(fields[k], reader.where());
  if (!mean.allFinite()) throw Error(reader.where() + ": non-finite mean");
  return {mean, StatsSource::kLoadedFromFile};
}

void write_stats(const PreprocessStats& stats, const std::string& path,
                 std::string_view provenance) {
  auto os = open_output(path);
  if (!provenance.empty()) write_comment_block(os, provenance);
  os << "MEAN " << stats.mean.size() << '\n';
  for (Eigen::Index k = 0; k < stats.mean.size(); ++k)
    os << (k ? " " : "") << format_double(stats.mean(k));
  os << '\n';
  finish_output(os, path);
}

std::string_view label_name(TrialLabel label) {
  return label == TrialLabel::kTarget ? "target" : "nontarget";
}

std::vector<Trial> read_trials(std::istream& is, const std::string& source) {
  LineReader reader(is, source);
  std::vector<Trial> trials;
  std::string line;
  while (reader.next(line)) {
    const auto fields = split_fields(line);
    if (fields.size() != 2 && fields.size() != 3)
      throw Error(reader.where() +
                  ": expected '<enroll_id> <test_id> [target|nontarget]'");
    Trial t{std::string(fields[0]), std::string(fields[1]), std::nullopt};
    if (fields.size() == 3) {
      if (fields[2] == "target")
        t.label = TrialLabel::kTarget;
      else if (fields[2] == "nontarget")
        t.label = TrialLabel::kNontarget;
      else
        throw Error(reader.where() + ": unknown trial label '" +
                    std::string(fields[2]) + "'");
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

std::vector<Trial> read_trials(const std::string& path) {
  auto is = open_input(path);
  return read_trials(is, path);
}

void write_trials(std::span<const Trial> trials, const std::string& path,
                  std::string_view provenance) {
  auto os = open_output(path);
  if (!provenance.empty()) write_comment_block(os, provenance);
  for (const auto& t : trials) {
    os << t.enroll_id << ' ' << t.test_id;
    if (t.label) os << ' ' << label_name(*t.label);
    os << '\n';
  }
  finish_output(os, path);
}

}  // namespace svback
