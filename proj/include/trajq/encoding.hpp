#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trajq {

using Bits = std::vector<std::uint8_t>;

enum class EncodingKind { binary, unary, sequential, modified, partition };

std::string to_string(EncodingKind k);
EncodingKind parse_encoding(const std::string& s);

struct EncodingScheme {
  EncodingKind kind = EncodingKind::binary;
  int max_holding = 0;  // K'
  int budget = 0;       // K, partition kind only
  int n_assets = 0;     // N, partition kind only
  std::vector<int> weights;                  // f(1..D), linear kinds
  int bit_depth = 0;                         // D (partition kind: number of partitions)
  std::vector<std::vector<int>> partitions;  // partition kind only

  bool linear() const { return kind != EncodingKind::partition; }
  bool operator==(const EncodingScheme&) const = default;
};

int bit_depth(EncodingKind kind, int max_holding);
std::vector<int> encoding_weights(EncodingKind kind, int max_holding);

EncodingScheme build_encoding(EncodingKind kind, int max_holding, int budget = 0, int n_assets = 0);

// Canonical form: the representation minimizing sum_d x_d 2^d, so unary values
// fill from the first bit.
Bits encode_value(const EncodingScheme& scheme, int v);
int decode_bits(const EncodingScheme& scheme, std::span<const std::uint8_t> bits);

// Largest value any bit vector decodes to (linear kinds).
int max_decodable(const EncodingScheme& scheme);

long long variable_count(EncodingKind kind, int n_assets, int n_steps, int budget, int max_holding);

// Largest K' whose smallest weight survives noise, n = 1/sqrt(epsilon*delta); nullopt means unbounded
// (unary, or any value above cap).
std::optional<long long> largest_representable(EncodingKind kind, double epsilon, double delta,
                                               long long cap = 1'000'000'000LL);

std::vector<std::vector<int>> enumerate_partitions(int budget, int n_assets, int max_holding);

// Number of bit vectors decoding to v.
std::uint64_t redundancy(const EncodingScheme& scheme, int v);

}  // namespace trajq
