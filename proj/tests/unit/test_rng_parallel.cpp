// Copyright 2026  The afp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include <gtest/gtest.h>

#include "afp/parallel.hpp"
#include "afp/rng.hpp"

namespace afp {
namespace {

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
}

TEST(Rng, DerivedStreamsDiffer) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 1000; ++s) seeds.insert(Rng::derive(7, s));
  EXPECT_EQ(seeds.size(), 1000u);
  EXPECT_EQ(Rng::derive(7, 3), Rng::derive(7, 3));
  EXPECT_NE(Rng::derive(7, 3), Rng::derive(8, 3));
}

TEST(Rng, UnitAndUniformRanges) {
  Rng rng(1);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    const double v = rng.uniform(-3.0, 5.0);
    ASSERT_GE(v, -3.0);
    ASSERT_LE(v, 5.0);
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.01);
  EXPECT_EQ(rng.uniform(2.5, 2.5), 2.5);
}

TEST(Rng, BelowIsUniformAndInRange) {
  Rng rng(2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  // 4-sigma band around 10000 per bucket.
  for (int c : counts) EXPECT_NEAR(c, 10000, 4 * std::sqrt(70000 * (1.0 / 7) * (6.0 / 7)));
  EXPECT_EQ(rng.below(1), 0u);
}

TEST(Rng, BernoulliRate) {
  Rng rng(3);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += rng.bernoulli(0.3);
  EXPECT_NEAR(hits, 3000, 3 * std::sqrt(10000 * 0.3 * 0.7));
}

TEST(Parallel, VisitsEveryIndexOnce) {
  for (int threads : {1, 2, 8}) {
    std::vector<std::atomic<int>> seen(1000);
    parallel_for(seen.size(), threads, [&](std::size_t i) { ++seen[i]; });
    for (auto& s : seen) ASSERT_EQ(s.load(), 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(Parallel, RethrowsLowestIndexError) {
  for (int threads : {1, 4}) {
    try {
      parallel_for(100, threads, [](std::size_t i) {
        if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
      });
      FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "17");
    }
  }
}

TEST(ResolveThreads, ExplicitThenEnvThenHardware) {
  EXPECT_EQ(resolve_threads(3), 3);
  ::setenv("AFP_THREADS", "5", 1);
  EXPECT_EQ(resolve_threads(0), 5);
  EXPECT_EQ(resolve_threads(2), 2);
  ::setenv("AFP_THREADS", "garbage", 1);
  EXPECT_GE(resolve_threads(0), 1);
  ::unsetenv("AFP_THREADS");
  EXPECT_GE(resolve_threads(0), 1);
}

}  // namespace
}  // namespace afp
