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

#ifndef SVBACK_RANDOM_H_
#define SVBACK_RANDOM_H_

#include <cstdint>
#include <optional>
#include <random>

namespace svback {

// Portable seeded random source. Every value is derived from std::mt19937_64
// (whose output sequence is fixed by the C++ standard) with conversions
// written out here rather than delegated to the library distributions, whose
// algorithms differ between standard library implementations:
//
//   uniform()  = (raw >> 11) * 2^-53                 in [0, 1)
//   uniform_int(lo, hi) = lo + floor(uniform() * (hi - lo + 1))
//   normal(): Box-Muller on two fresh raw draws u1, u2
//       u1 = ((raw1 >> 11) + 1) * 2^-53               in (0, 1]
//       u2 = (raw2 >> 11) * 2^-53
//       r  = sqrt(-2 ln u1)
//       returns r cos(2 pi u2), and caches r sin(2 pi u2) for the next call.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  int uniform_int(int lo, int hi);
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> cached_normal_;
};

}  // namespace svback

#endif  // SVBACK_RANDOM_H_
