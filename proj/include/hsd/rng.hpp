/*
 * Copyright 2026 the hsd authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace hsd {

// Deterministic randomness contract: every randomized operation is a pure
// function of its inputs and a (master_seed, stream_label, index) triple.
// Distinct indices map to distinct engine seeds (splitmix64 finalizer is a
// bijection composed with an odd-stride index walk).
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::string stream_label;

  // New spec for a named sub-stream, e.g. seed.stream("bootstrap").
  SeedSpec stream(const std::string& label) const;

  // Engine seed for repetition/index `index` of this stream.
  std::uint64_t derive(std::uint64_t index = 0) const;
};

std::uint64_t splitmix64(std::uint64_t x);

// All draws are produced from raw mt19937_64 output by portable arithmetic,
// not std::<distribution> adapters, so results are stable across standard
// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(const SeedSpec& spec, std::uint64_t index = 0) : engine_(spec.derive(index)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_below(std::uint64_t n);

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal (polar method, one spare cached).
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // log of a Gamma(shape, 1) draw. Valid for any shape > 0; computed in log
  // space so shapes far below 1 do not underflow.
  double log_gamma(double shape);

  // Beta(a, b) draw via two log-gamma draws.
  double beta(double a, double b);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hsd
