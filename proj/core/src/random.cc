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

#include "svback/random.h"

#include <cmath>
#include <numbers>

namespace svback {

namespace {
constexpr double kTwoPowMinus53 = 1.0 / 9007199254740992.0;
}

double RandomSource::uniform() {
  return static_cast<double>(engine_() >> 11) * kTwoPowMinus53;
}

int RandomSource::uniform_int(int lo, int hi) {
  const double span = static_cast<double>(hi) - static_cast<double>(lo) + 1.0;
  return lo + static_cast<int>(std::floor(uniform() * span));
}

double RandomSource::normal() {
  if (cached_normal_) {
    const double v = *cached_normal_;
    cached_normal_.reset();
    return v;
  }
  const double u1 =
      static_cast<double>((engine_() >> 11) + 1) * kTwoPowMinus53;
  const double u2 = static_cast<double>(engine_() >> 11) * kTwoPowMinus53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(angle);
  return r * std::cos(angle);
}

}  // namespace svback
