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

#ifndef SVBACK_TEXT_IO_H_
#define SVBACK_TEXT_IO_H_

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace svback {

// All text formats print reals with 17 significant digits ("%.17g"), which
// round-trips every IEEE double exactly.
std::string format_double(double v);

// Strict parse of a whole token; throws Error with `context` on failure.
double parse_double(std::string_view token, std::string_view context);
long long parse_int(std::string_view token, std::string_view context);

std::vector<std::string_view> split_fields(std::string_view line);

// Writes `text` as '#'-prefixed comment lines. Every reader in this library
// skips lines whose first non-blank character is '#', as well as blank lines.
void write_comment_block(std::ostream& os, std::string_view text);

// Line reader that skips comments and blank lines and remembers the physical
// line number of the last line returned, for error messages.
class LineReader {
 public:
  LineReader(std::istream& is, std::string source);

  // False at end of input.
  bool next(std::string& line);

  std::size_t line_number() const { return line_number_; }
  // "<source>:<line>"
  std::string where() const;

 private:
  std::istream& is_;
  std::string source_;
  std::size_t line_number_ = 0;
};

}  // namespace svback

#endif  // SVBACK_TEXT_IO_H_
