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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <doctest.h>

#include "test_util.hpp"

#include "hsd/rng.hpp"

TEST_SUITE("rng") {
  TEST_CASE("identical seeds reproduce identical draws") {
    hsd::SeedSpec spec{42, "unit"};
    hsd::Rng a(spec.derive(7));
    hsd::Rng b(spec.derive(7));
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  }

  TEST_CASE("distinct indices and labels give distinct engine seeds") {
    hsd::SeedSpec spec{42, "unit"};
    std::set<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 10000; ++i) seeds.insert(spec.derive(i));
    CHECK(seeds.size() == 10000);

    CHECK(spec.derive(0) != spec.stream("a").derive(0));
    CHECK(spec.stream("a").derive(0) != spec.stream("b").derive(0));
    // Sub-streams chain: stream("a").stream("b") differs from stream("ab").
    CHECK(spec.stream("a").stream("b").derive(0) != spec.stream("ab").derive(0));
  }

  TEST_CASE("uniform01 stays in the half-open unit interval with correct mean") {
    hsd::Rng rng(1234);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform01();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      sum += u;
    }
    // SE of the mean is about 0.00065; allow four of those.
    CHECK(hsd_test::near(sum / n, 0.5, 0.0026));
  }

  TEST_CASE("uniform_below covers its range uniformly") {
    hsd::Rng rng(99);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) counts[rng.uniform_below(7)]++;
    for (int c : counts) CHECK(hsd_test::near(c, 10000, 400));
  }

  TEST_CASE("normal draws have standard moments") {
    hsd::Rng rng(2026);
    const int n = 400000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = rng.normal();
      sum += z;
      sum_sq += z * z;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(hsd_test::near(mean, 0.0, 0.008));
    CHECK(hsd_test::near(var, 1.0, 0.02));
  }

  TEST_CASE("beta draws match analytic moments") {
    hsd::Rng rng(7);
    const int n = 200000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.beta(2.0, 3.0);
      REQUIRE(x >= 0.0);
      REQUIRE(x <= 1.0);
      sum += x;
      sum_sq += x * x;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    // Beta(2,3): mean 0.4, variance 0.04.
    CHECK(hsd_test::near(mean, 0.4, 0.004));
    CHECK(hsd_test::near(var, 0.04, 0.002));
  }

  TEST_CASE("beta survives extreme concentration parameters") {
    // Shapes like (nu*mu, nu*(1-mu)) with nu = 1e-4 push naive gamma
    // samplers to underflow; the draw must stay a valid probability with
    // mean mu.
    hsd::Rng rng(11);
    const double nu = 1e-4;
    const double mu = 0.3;
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.beta(nu * mu, nu * (1.0 - mu));
      REQUIRE(std::isfinite(x));
      REQUIRE(x >= 0.0);
      REQUIRE(x <= 1.0);
      sum += x;
    }
    // Variance approaches mu*(1-mu) as nu -> 0, so SE ~ 0.001.
    CHECK(hsd_test::near(sum / n, mu, 0.005));
  }

  TEST_CASE("log_gamma matches mean of log for moderate shape") {
    // E[log Gamma(k,1)] = digamma(k); digamma(3) = 1.5 - gamma_e.
    hsd::Rng rng(13);
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.log_gamma(3.0);
    const double digamma3 = 1.5 - 0.5772156649015329;
    CHECK(hsd_test::near(sum / n, digamma3, 0.01));
  }

  TEST_CASE("shuffle produces a permutation") {
    hsd::Rng rng(5);
    std::vector<int> v(100);
    for (int i = 0; i < 100; ++i) v[i] = i;
    rng.shuffle(v);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 100; ++i) CHECK(sorted[i] == i);
  }

  TEST_CASE("sample_without_replacement returns distinct in-range indices") {
    hsd::Rng rng(17);
    const auto sample = rng.sample_without_replacement(1000, 250);
    CHECK(sample.size() == 250);
    std::set<std::size_t> unique(sample.begin(), sample.end());
    CHECK(unique.size() == 250);
    for (auto idx : sample) CHECK(idx < 1000);
  }

  TEST_CASE("sampling the full range yields a permutation") {
    hsd::Rng rng(19);
    const auto sample = rng.sample_without_replacement(64, 64);
    std::set<std::size_t> unique(sample.begin(), sample.end());
    CHECK(unique.size() == 64);
  }
}
