#include "trajq/encoding.hpp"

#include <cmath>

#include "trajq/errors.hpp"

namespace trajq {

std::string to_string(EncodingKind k) {
  switch (k) {
    case EncodingKind::binary: return "binary";
    case EncodingKind::unary: return "unary";
    case EncodingKind::sequential: return "sequential";
    case EncodingKind::modified: return "modified";
    case EncodingKind::partition: return "partition";
  }
  return "?";
}

EncodingKind parse_encoding(const std::string& s) {
  for (auto k : {EncodingKind::binary, EncodingKind::unary, EncodingKind::sequential,
                 EncodingKind::modified, EncodingKind::partition})
    if (to_string(k) == s) return k;
  throw ValidationError("unknown encoding '" + s + "'");
}

namespace {

int ceil_log2_plus1(int kp) {
  int d = 0;
  while ((1LL << d) < static_cast<long long>(kp) + 1) ++d;
  return d;
}

int sequential_depth(int kp) {
  int d = 0;
  while (static_cast<long long>(d) * (d + 1) / 2 < kp) ++d;
  return d;
}

void require_linear(const EncodingScheme& s) {
  if (!s.linear()) throw ValidationError("operation requires a linear encoding");
}

}  // namespace

std::vector<int> encoding_weights(EncodingKind kind, int kp) {
  if (kp < 0) throw ValidationError("max_holding must be non-negative");
  std::vector<int> w;
  switch (kind) {
    case EncodingKind::binary:
      for (int d = 0; d < ceil_log2_plus1(kp); ++d) w.push_back(1 << d);
      break;
    case EncodingKind::unary:
      w.assign(kp, 1);
      break;
    case EncodingKind::sequential:
      for (int d = 1; d <= sequential_depth(kp); ++d) w.push_back(d);
      break;
    case EncodingKind::modified: {
      // 1, 1, 2, 2, 4, 8, ... truncated so the subset sums end exactly at K'.
      long long reach = 0;
      for (int k = 0; reach < kp; ++k) {
        const long long step = k < 2 ? 1 : (k < 4 ? 2 : (1LL << (k - 2)));
        const long long wt = std::min(step, kp - reach);
        w.push_back(static_cast<int>(wt));
        reach += wt;
      }
      break;
    }
    case EncodingKind::partition:
      throw ValidationError("partition encoding has no weights");
  }
  return w;
}

int bit_depth(EncodingKind kind, int kp) {
  return static_cast<int>(encoding_weights(kind, kp).size());
}

EncodingScheme build_encoding(EncodingKind kind, int kp, int budget, int n_assets) {
  if (kp < 0) throw ValidationError("max_holding must be non-negative");
  EncodingScheme s;
  s.kind = kind;
  s.max_holding = kp;
  if (kind == EncodingKind::partition) {
    if (n_assets < 1 || budget < 0) throw ValidationError("partition encoding needs budget and n_assets");
    s.budget = budget;
    s.n_assets = n_assets;
    s.partitions = enumerate_partitions(budget, n_assets, kp);
    s.bit_depth = static_cast<int>(s.partitions.size());
  } else {
    s.weights = encoding_weights(kind, kp);
    s.bit_depth = static_cast<int>(s.weights.size());
  }
  return s;
}

Bits encode_value(const EncodingScheme& s, int v) {
  require_linear(s);
  if (v < 0 || v > s.max_holding)
    throw RangeError("value " + std::to_string(v) + " outside 0.." + std::to_string(s.max_holding));
  const int D = s.bit_depth;
  // reach[d][u]: u is a subset sum of weights[0..d).
  std::vector<std::vector<char>> reach(D + 1, std::vector<char>(v + 1, 0));
  reach[0][0] = 1;
  for (int d = 0; d < D; ++d)
    for (int u = 0; u <= v; ++u)
      reach[d + 1][u] = reach[d][u] || (u >= s.weights[d] && reach[d][u - s.weights[d]]);
  if (!reach[D][v]) throw RangeError("value " + std::to_string(v) + " not representable");
  // Clear the highest bits first whenever the remainder stays reachable.
  Bits bits(D, 0);
  int rest = v;
  for (int d = D - 1; d >= 0; --d) {
    if (reach[d][rest]) continue;
    bits[d] = 1;
    rest -= s.weights[d];
  }
  return bits;
}

int decode_bits(const EncodingScheme& s, std::span<const std::uint8_t> bits) {
  require_linear(s);
  if (static_cast<int>(bits.size()) != s.bit_depth) throw ShapeError("bit vector length mismatch");
  int v = 0;
  for (int d = 0; d < s.bit_depth; ++d)
    if (bits[d]) v += s.weights[d];
  return v;
}

int max_decodable(const EncodingScheme& s) {
  require_linear(s);
  int v = 0;
  for (int w : s.weights) v += w;
  return v;
}

long long variable_count(EncodingKind kind, int n, int T, int K, int kp) {
  if (n < 1 || T < 1 || K < 0 || kp < 0) throw ValidationError("invalid dimensions");
  if (kind == EncodingKind::partition)
    return static_cast<long long>(T) * static_cast<long long>(enumerate_partitions(K, n, kp).size());
  return static_cast<long long>(T) * n * bit_depth(kind, kp);
}

std::optional<long long> largest_representable(EncodingKind kind, double epsilon, double delta,
                                               long long cap) {
  if (!(epsilon > 0) || !(delta > 0)) throw ValidationError("epsilon and delta must be positive");
  const double n = 1.0 / std::sqrt(epsilon * delta);
  const double fn = std::floor(n + 1e-9);
  double v = 0;
  switch (kind) {
    case EncodingKind::binary:
    case EncodingKind::modified:
      v = std::floor(2 * n + 1e-9) - 1;
      break;
    case EncodingKind::unary:
      return std::nullopt;
    case EncodingKind::sequential:
      v = fn * (fn + 1) / 2;
      break;
    case EncodingKind::partition:
      v = fn;
      break;
  }
  if (!(v <= static_cast<double>(cap))) return std::nullopt;
  return static_cast<long long>(v);
}

std::vector<std::vector<int>> enumerate_partitions(int K, int N, int kp) {
  if (N < 1 || K < 0 || kp < 0) throw ValidationError("invalid partition parameters");
  std::vector<std::vector<int>> out;
  if (static_cast<long long>(N) * kp < K) return out;
  std::vector<int> cur(N, 0);
  auto rec = [&](auto&& self, int i, int left) -> void {
    if (i == N - 1) {
      if (left <= kp) {
        cur[i] = left;
        out.push_back(cur);
      }
      return;
    }
    for (int v = 0; v <= std::min(left, kp); ++v) {
      cur[i] = v;
      self(self, i + 1, left - v);
    }
  };
  rec(rec, 0, K);
  return out;
}

std::uint64_t redundancy(const EncodingScheme& s, int v) {
  require_linear(s);
  if (v < 0) return 0;
  std::vector<std::uint64_t> ways(v + 1, 0);
  ways[0] = 1;
  for (int w : s.weights)
    for (int u = v; u >= w; --u) ways[u] += ways[u - w];
  return ways[v];
}

}  // namespace trajq
