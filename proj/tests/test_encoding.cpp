#include <doctest.h>

#include <set>

#include "support.hpp"

using namespace trajq;

namespace {

const EncodingKind kLinear[] = {EncodingKind::binary, EncodingKind::unary, EncodingKind::sequential,
                                EncodingKind::modified};

std::set<int> subset_sums(const std::vector<int>& w) {
  std::set<int> s = {0};
  for (int x : w) {
    std::set<int> next = s;
    for (int v : s) next.insert(v + x);
    s = next;
  }
  return s;
}

std::uint64_t count_decoding_to(const EncodingScheme& e, int v) {
  std::uint64_t n = 0;
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << e.bit_depth); ++c) {
    int sum = 0;
    for (int d = 0; d < e.bit_depth; ++d) sum += ((c >> d) & 1) * e.weights[d];
    n += sum == v;
  }
  return n;
}

}  // namespace

TEST_CASE("build_encoding weights") {
  CHECK(build_encoding(EncodingKind::binary, 5).weights == std::vector<int>{1, 2, 4});
  CHECK(build_encoding(EncodingKind::unary, 5).weights == std::vector<int>{1, 1, 1, 1, 1});
  CHECK(build_encoding(EncodingKind::modified, 10).weights == std::vector<int>{1, 1, 2, 2, 4});
  CHECK(build_encoding(EncodingKind::sequential, 5).weights == std::vector<int>{1, 2, 3});
  CHECK(build_encoding(EncodingKind::binary, 5).bit_depth == 3);
  CHECK(build_encoding(EncodingKind::modified, 10).bit_depth == 5);
  CHECK(build_encoding(EncodingKind::sequential, 3).weights == std::vector<int>{1, 2});
  CHECK_THROWS_AS(build_encoding(EncodingKind::binary, -1), ValidationError);
}

TEST_CASE("bit depth formulas use ceilings") {
  for (int kp = 1; kp <= 40; ++kp) {
    int b = 0;
    while ((1 << b) < kp + 1) ++b;
    CHECK(bit_depth(EncodingKind::binary, kp) == b);
    CHECK(bit_depth(EncodingKind::unary, kp) == kp);
    int s = 0;
    while (s * (s + 1) / 2 < kp) ++s;
    CHECK(bit_depth(EncodingKind::sequential, kp) == s);
  }
}

TEST_CASE("encode_value canonical forms") {
  CHECK(encode_value(build_encoding(EncodingKind::binary, 7), 5) == Bits{1, 0, 1});
  CHECK(encode_value(build_encoding(EncodingKind::unary, 5), 2) == Bits{1, 1, 0, 0, 0});
  CHECK(encode_value(build_encoding(EncodingKind::modified, 10), 10) == Bits{1, 1, 1, 1, 1});
  CHECK_THROWS_AS(encode_value(build_encoding(EncodingKind::binary, 5), 6), RangeError);
  CHECK_THROWS_AS(encode_value(build_encoding(EncodingKind::binary, 5), -1), RangeError);
}

TEST_CASE("decode_bits") {
  const Bits u = {0, 1, 1, 0, 0};
  CHECK(decode_bits(build_encoding(EncodingKind::unary, 5), u) == 2);
  const Bits s = {1, 1, 1};
  CHECK(decode_bits(build_encoding(EncodingKind::sequential, 5), s) == 6);
  const Bits short_bits = {1};
  CHECK_THROWS_AS(decode_bits(build_encoding(EncodingKind::sequential, 5), short_bits), ShapeError);
}

TEST_CASE("round trip for every linear kind") {
  for (EncodingKind k : kLinear)
    for (int kp = 0; kp <= 20; ++kp) {
      const EncodingScheme e = build_encoding(k, kp);
      for (int v = 0; v <= kp; ++v) CHECK(decode_bits(e, encode_value(e, v)) == v);
    }
}

TEST_CASE("canonical encoding minimizes the binary rank among representations") {
  for (EncodingKind k : kLinear)
    for (int kp = 1; kp <= 8; ++kp) {
      const EncodingScheme e = build_encoding(k, kp);
      for (int v = 0; v <= kp; ++v) {
        std::uint64_t best = ~std::uint64_t{0};
        for (std::uint64_t c = 0; c < (std::uint64_t{1} << e.bit_depth); ++c) {
          int sum = 0;
          for (int d = 0; d < e.bit_depth; ++d) sum += ((c >> d) & 1) * e.weights[d];
          if (sum == v) best = std::min(best, c);
        }
        CHECK(encode_value(e, v) == test::bits_of(best, e.bit_depth));
      }
    }
}

TEST_CASE("modified encoding covers exactly 0..K'") {
  for (int kp = 0; kp <= 60; ++kp) {
    const auto w = build_encoding(EncodingKind::modified, kp).weights;
    const auto sums = subset_sums(w);
    CHECK(static_cast<int>(sums.size()) == kp + 1);
    CHECK(*sums.rbegin() == kp);
    CHECK(max_decodable(build_encoding(EncodingKind::modified, kp)) == kp);
  }
}

TEST_CASE("linear encodings cover 0..K'") {
  for (EncodingKind k : kLinear)
    for (int kp = 0; kp <= 30; ++kp) {
      const auto sums = subset_sums(build_encoding(k, kp).weights);
      for (int v = 0; v <= kp; ++v) CHECK(sums.count(v) == 1);
    }
}

TEST_CASE("variable_count reproduces the variable-count table") {
  struct Row {
    int n, t, k, kp;
    long long vb, vu, vs;
  };
  const Row rows[] = {{5, 5, 15, 5, 75, 125, 75},        {10, 10, 15, 5, 300, 500, 300},
                      {10, 15, 15, 5, 450, 750, 450},    {20, 10, 15, 5, 600, 1000, 600},
                      {50, 5, 15, 5, 750, 1250, 750},    {20, 15, 15, 5, 900, 1500, 900},
                      {50, 10, 15, 5, 1500, 2500, 1500}, {50, 15, 15, 5, 2250, 3750, 2250}};
  for (const Row& r : rows) {
    CHECK(variable_count(EncodingKind::binary, r.n, r.t, r.k, r.kp) == r.vb);
    CHECK(variable_count(EncodingKind::unary, r.n, r.t, r.k, r.kp) == r.vu);
    CHECK(variable_count(EncodingKind::sequential, r.n, r.t, r.k, r.kp) == r.vs);
  }
  CHECK(variable_count(EncodingKind::partition, 2, 1, 3, 3) == 4);
}

TEST_CASE("variable counts are ordered unary >= sequential >= binary") {
  for (int kp = 1; kp <= 100; ++kp) {
    const auto u = variable_count(EncodingKind::unary, 3, 2, kp, kp);
    const auto s = variable_count(EncodingKind::sequential, 3, 2, kp, kp);
    const auto b = variable_count(EncodingKind::binary, 3, 2, kp, kp);
    CHECK(u >= s);
    CHECK(s >= b);
  }
}

TEST_CASE("partition count is bounded by the binomial") {
  for (int n = 1; n <= 4; ++n)
    for (int k = 0; k <= 5; ++k) {
      long long binom = 1;
      for (int i = 1; i <= n - 1; ++i) binom = binom * (k + i) / i;
      CHECK(variable_count(EncodingKind::partition, n, 1, k, k) <= binom);
    }
}

TEST_CASE("largest_representable") {
  CHECK(largest_representable(EncodingKind::binary, 0.04, 1) == 9);
  CHECK(largest_representable(EncodingKind::sequential, 0.04, 1) == 15);
  CHECK(largest_representable(EncodingKind::partition, 0.04, 1) == 5);
  CHECK_FALSE(largest_representable(EncodingKind::unary, 0.04, 1).has_value());
  CHECK(largest_representable(EncodingKind::binary, 1, 1) == 1);
  CHECK(largest_representable(EncodingKind::sequential, 1, 1) == 1);
  CHECK(largest_representable(EncodingKind::partition, 1, 1) == 1);
  CHECK_FALSE(largest_representable(EncodingKind::binary, 1e-30, 1).has_value());
  CHECK_THROWS_AS(largest_representable(EncodingKind::binary, 0, 1), ValidationError);
  CHECK_THROWS_AS(largest_representable(EncodingKind::binary, 0.1, -1), ValidationError);
}

TEST_CASE("enumerate_partitions") {
  using P = std::vector<std::vector<int>>;
  CHECK(enumerate_partitions(3, 2, 3) == P{{0, 3}, {1, 2}, {2, 1}, {3, 0}});
  CHECK(enumerate_partitions(3, 2, 1).empty());
  CHECK(enumerate_partitions(0, 3, 0) == P{{0, 0, 0}});
}

TEST_CASE("partitions match brute force and are single-step feasible") {
  for (int n = 1; n <= 3; ++n)
    for (int k = 0; k <= 4; ++k)
      for (int kp = 0; kp <= k; ++kp) {
        std::vector<std::vector<int>> brute;
        int total = 1;
        for (int i = 0; i < n; ++i) total *= kp + 1;
        for (int c = 0; c < total; ++c) {
          std::vector<int> v(n);
          int x = c, sum = 0;
          for (int i = n - 1; i >= 0; --i, x /= kp + 1) sum += v[i] = x % (kp + 1);
          if (sum == k) brute.push_back(v);
        }
        const auto parts = enumerate_partitions(k, n, kp);
        CHECK(parts == brute);
        ProblemSpec s;
        s.n_assets = n;
        s.n_steps = 1;
        s.budget = k;
        s.max_holding = kp;
        for (const auto& p : parts) {
          Eigen::MatrixXi col(n, 1);
          for (int i = 0; i < n; ++i) col(i, 0) = p[i];
          CHECK(is_feasible(s, Trajectory(col)));
        }
      }
}

TEST_CASE("redundancy") {
  CHECK(redundancy(build_encoding(EncodingKind::unary, 3), 1) == 3);
  const auto bin = build_encoding(EncodingKind::binary, 7);
  for (int v = 0; v <= 7; ++v) CHECK(redundancy(bin, v) == 1);
  const auto mod = build_encoding(EncodingKind::modified, 10);
  CHECK(redundancy(mod, 3) == count_decoding_to(mod, 3));
  CHECK(redundancy(mod, 3) == 4);
  for (EncodingKind k : kLinear) {
    const auto e = build_encoding(k, 6);
    for (int v = 0; v <= 6; ++v) CHECK(redundancy(e, v) == count_decoding_to(e, v));
  }
}

TEST_CASE("encoding names round trip") {
  for (EncodingKind k : {EncodingKind::binary, EncodingKind::unary, EncodingKind::sequential, EncodingKind::modified,
                         EncodingKind::partition})
    CHECK(parse_encoding(to_string(k)) == k);
  CHECK_THROWS_AS(parse_encoding("gray"), ValidationError);
}
