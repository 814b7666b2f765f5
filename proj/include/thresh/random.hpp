// Copyright 2026 The Thresh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef THRESH_RANDOM_HPP_
#define THRESH_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace thresh {

using Rng = std::mt19937_64;

// Independent stream families derived from one master seed. A user's
// protocol stream and data stream never share state.
enum class StreamDomain : std::uint32_t {
  kProtocol = 1,
  kData = 2,
  kCenter = 3,
  kProjection = 4,
  kAudit = 5,
};

// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng MakeStream(std::uint64_t master_seed, StreamDomain domain,
                      std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(domain),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline std::uint64_t DeriveSeed(std::uint64_t master_seed, StreamDomain domain,
                                std::uint64_t index = 0) {
  return Mix64(Mix64(master_seed ^ (static_cast<std::uint64_t>(domain) << 56)) +
               index);
}

// Uniform on [0, 1) with 53 random bits.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool BernoulliDraw(Rng& rng, double p) { return Uniform01(rng) < p; }

}  // namespace thresh

#endif  // THRESH_RANDOM_HPP_
