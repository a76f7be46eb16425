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

#include "svback/text_io.h"

#include <charconv>
#include <cstdio>
#include <system_error>

#include "svback/error.h"

namespace svback {

std::string format_double(double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

double parse_double(std::string_view token, std::string_view context) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || token.empty())
    throw Error(std::string(context) + ": cannot parse '" +
                std::string(token) + "' as a real number");
  return v;
}

long long parse_int(std::string_view token, std::string_view context) {
  long long v = 0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() ||
      token.empty())
    throw Error(std::string(context) + ": cannot parse '" +
                std::string(token) + "' as an integer");
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' ||
                               line[i] == '\r'))
      ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' &&
           line[j] != '\r')
      ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

void write_comment_block(std::ostream& os, std::string_view text) {
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    if (end > start || start < text.size())
      os << "# " << text.substr(start, end - start) << '\n';
    if (end == text.size()) break;
    start = end + 1;
  }
}

LineReader::LineReader(std::istream& is, std::string source)
    : is_(is), source_(std::move(source)) {}

bool LineReader::next(std::string& line) {
  while (std::getline(is_, line)) {
    ++line_number_;
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    return true;
  }
  return false;
}

std::string LineReader::where() const {
  return source_ + ":" + std::to_string(line_number_);
}

}  // namespace svback
