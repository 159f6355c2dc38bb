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

#include "hsd/rng.hpp"

#include <cmath>
#include <numeric>

#include "hsd/errors.hpp"

namespace hsd {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SeedSpec SeedSpec::stream(const std::string& label) const {
  SeedSpec out;
  out.master_seed = master_seed;
  out.stream_label = stream_label.empty() ? label : stream_label + "/" + label;
  return out;
}

std::uint64_t SeedSpec::derive(std::uint64_t index) const {
  std::uint64_t base = splitmix64(master_seed ^ fnv1a64(stream_label));
  return splitmix64(base + kGolden * (index + 1));
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  if (n == 0) throw ValidationError("uniform_below: n must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

double Rng::log_gamma(double shape) {
  if (!(shape > 0.0)) throw ValidationError("log_gamma: shape must be positive");
  // Shapes below 1 use the boost G_a = G_{a+1} * U^{1/a}, carried out in logs.
  double boost = 0.0;
  double a = shape;
  if (a < 1.0) {
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    boost = std::log(u) / a;
    a += 1.0;
  }
  // Marsaglia-Tsang squeeze for shape >= 1.
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d * v) + boost;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return std::log(d * v) + boost;
  }
}

double Rng::beta(double a, double b) {
  const double lx = log_gamma(a);
  const double ly = log_gamma(b);
  // X/(X+Y) = sigmoid(log X - log Y); stable for extreme magnitudes.
  return 1.0 / (1.0 + std::exp(ly - lx));
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
  if (k > n) throw ValidationError("sample_without_replacement: k exceeds n");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(n - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace hsd
