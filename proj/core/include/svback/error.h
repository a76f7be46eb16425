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

#ifndef SVBACK_ERROR_H_
#define SVBACK_ERROR_H_

#include <stdexcept>
#include <string>

namespace svback {

// Raised for malformed inputs and numerical failures (non-SPD matrices,
// unknown ids, bad files). The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace svback

#endif  // SVBACK_ERROR_H_
