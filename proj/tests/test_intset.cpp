#include <gtest/gtest.h>

#include "spb/intset.hpp"
#include "spb/oracle.hpp"
#include "spb/rng.hpp"

using namespace spb;
using Vec = std::vector<std::uint64_t>;

namespace {

Vec random_subset(std::uint64_t seed, std::uint64_t cap, double density) {
  Vec v;
  for (std::uint64_t x = 0; x <= cap; ++x)
    if (counter_uniform(seed, x) < density) v.push_back(x);
  return v;
}

}  // namespace

TEST(MakeSet, CountsAndMembership) {
  IntSet A = IntSet::from_elements({2, 4, 8}, 10);
  EXPECT_EQ(A.count_upto(5), 2u);
  EXPECT_TRUE(A.contains(8));
  EXPECT_FALSE(A.contains(9));
  EXPECT_EQ(A.size(), 3u);
}

TEST(MakeSet, EmptySet) {
  IntSet A = make_set(Vec{}, 10);
  EXPECT_EQ(A.count_upto(10), 0u);
  EXPECT_TRUE(A.empty());
}

TEST(MakeSet, ZeroIsNotCounted) {
  IntSet A = make_set(Vec{0}, 10);
  EXPECT_EQ(A.count_upto(10), 0u);
  EXPECT_TRUE(A.contains(0));
  EXPECT_EQ(A.count_upto(0), 0u);
}

TEST(MakeSet, RejectsElementAboveCapacity) {
  try {
    make_set(Vec{3, 11}, 10);
    FAIL() << "expected range_error";
  } catch (const range_error& e) {
    EXPECT_NE(std::string(e.what()).find("11"), std::string::npos);
  }
}

TEST(CountUpto, RangeErrorAboveCapacity) {
  IntSet A = make_set(Vec{1}, 10);
  EXPECT_THROW(A.count_upto(11), range_error);
}

TEST(CountUpto, DyadicPrefix) {
  // T ∩ [1, 21] = {1, 2, 4, 5, 16, 17, 20, 21}
  IntSet T = IntSet::from_elements({0, 1, 2, 4, 5, 16, 17, 20, 21}, 21);
  EXPECT_EQ(T.count_upto(21), 8u);
}

TEST(CountUpto, MatchesPopcountAndIsMonotone) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::uint64_t cap = 500 + 97 * s;
    Vec v = random_subset(s, cap, 0.1 + 0.05 * s);
    IntSet A = make_set(v, cap);
    std::uint64_t prev = 0;
    for (std::uint64_t X = 0; X <= cap; ++X) {
      std::uint64_t c = A.count_upto(X);
      EXPECT_GE(c, prev);
      EXPECT_LE(c, X);
      prev = c;
    }
    for (int i = 0; i < 100; ++i) {
      std::uint64_t X = counter_hash(s, i, 3) % (cap + 1);
      EXPECT_EQ(A.count_upto(X), oracle::count_upto(v, X));
    }
  }
}

TEST(IntSet, NextAndExtremes) {
  IntSet A = IntSet::from_elements({3, 64, 129}, 200);
  EXPECT_EQ(A.min_element(), 3u);
  EXPECT_EQ(A.max_element(), 129u);
  EXPECT_EQ(A.next(4), 64u);
  EXPECT_EQ(A.next(130), 201u);
  IntSet E = make_set(Vec{}, 50);
  EXPECT_EQ(E.min_element(), 51u);
}

TEST(Sumset, Examples) {
  IntSet A = IntSet::from_elements({0, 1}, 10), B = IntSet::from_elements({0, 2}, 10);
  EXPECT_EQ(sumset(A, B, 10).elements(), (Vec{0, 1, 2, 3}));
  EXPECT_TRUE(sumset(make_set(Vec{}, 10), B, 10).empty());
  IntSet C = IntSet::interval(1, 5, 10);
  EXPECT_EQ(sumset(C, C, 6).elements(), (Vec{2, 3, 4, 5, 6}));
}

TEST(ProductSet, Examples) {
  IntSet A = IntSet::from_elements({2, 3}, 100), B = IntSet::from_elements({3, 5}, 100);
  EXPECT_EQ(product_set(A, B, 100).elements(), (Vec{6, 9, 10, 15}));
  IntSet U = IntSet::from_elements({0, 1}, 100), D = IntSet::from_elements({7, 40, 90}, 100);
  EXPECT_EQ(product_set(U, D, 50).elements(), (Vec{0, 7, 40}));
}

TEST(PowerSet, Examples) {
  IntSet A = IntSet::from_elements({1, 2}, 10);
  EXPECT_EQ(power_set_k(A, 2, 10).elements(), (Vec{1, 2, 4}));
  EXPECT_EQ(power_set_k(A, 1, 10), A);
  IntSet B = IntSet::from_elements({2, 3}, 30);
  EXPECT_EQ(power_set_k(B, 3, 30).elements(), (Vec{8, 12, 18, 27}));
  EXPECT_THROW(power_set_k(B, 0, 30), precondition_error);
}

TEST(PairCount, Examples) {
  IntSet A = IntSet::from_elements({1, 2, 3}, 10);
  EXPECT_EQ(pair_count_upto(A, A, 6), 8u);
  EXPECT_EQ(pair_count_upto(make_set(Vec{}, 10), A, 6), 0u);
  EXPECT_THROW(pair_count_upto(A, A, 11), range_error);
}

TEST(Dilate, ScalesAndTruncates) {
  IntSet A = IntSet::from_elements({0, 1, 3, 7}, 10);
  EXPECT_EQ(dilate(A, 2, 10).elements(), (Vec{0, 2, 6}));
  EXPECT_EQ(dilate(A, 0, 10).elements(), (Vec{0}));
}

// Every kernel against the exhaustive loops on 1000 random instances.
TEST(OracleEquivalence, ThousandRandomInstances) {
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const std::uint64_t cap = 1 + counter_hash(100, i) % 2000;
    const double da = 0.005 + 0.2 * counter_uniform(101, i), db = 0.005 + 0.2 * counter_uniform(102, i);
    Vec va = random_subset(1000 + i, cap, da), vb = random_subset(5000 + i, cap, db);
    IntSet A = make_set(va, cap), B = make_set(vb, cap);
    const std::uint64_t lim = cap;
    ASSERT_EQ(sumset(A, B, lim).elements(), oracle::sumset(va, vb, lim)) << "instance " << i;
    ASSERT_EQ(product_set(A, B, lim).elements(), oracle::product_set(va, vb, lim)) << "instance " << i;
    ASSERT_EQ(product_set(A, A, lim).elements(), oracle::product_set(va, va, lim)) << "instance " << i;
    const unsigned k = 1 + static_cast<unsigned>(i % 3);
    ASSERT_EQ(power_set_k(A, k, lim).elements(), oracle::power_set_k(va, k, lim)) << "instance " << i;
    const std::uint64_t X = counter_hash(103, i) % (cap + 1);
    ASSERT_EQ(pair_count_upto(A, B, X), oracle::pair_count(va, vb, X)) << "instance " << i;
  }
}

TEST(Sumset, ParallelMatchesSerial) {
  Vec va = random_subset(77, 100000, 0.01), vb = random_subset(78, 100000, 0.2);
  IntSet A = make_set(va, 100000), B = make_set(vb, 100000);
  IntSet serial = sumset(A, B, 100000);
  unsigned saved = limits().threads;
  limits().threads = 4;
  IntSet par = sumset(A, B, 100000);
  limits().threads = saved;
  EXPECT_EQ(serial, par);
}
