#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trajq/cli.hpp"
#include "trajq/errors.hpp"

namespace trajq::test {

// Direct transcription of the objective with scalar loops. Independent of
// model.cpp so the two can be compared.
inline double reference_objective(const ProblemSpec& s, const Trajectory& w) {
  const int N = s.n_assets, T = s.n_steps;
  auto held = [&](int n, int t) -> double {
    if (t == 0) return s.initial_holdings[n];
    if (t == T + 1) return s.final_holdings ? (*s.final_holdings)[n] : 0.0;
    return w.holdings(n, t - 1);
  };
  double v = 0.0;
  std::vector<double> r(T, 0.0);
  for (int t = 1; t <= T; ++t) {
    for (int n = 0; n < N; ++n) {
      r[t - 1] += s.returns(n, t - 1) * held(n, t);
      const double d = held(n, t) - held(n, t - 1);
      v -= s.temp_cost(n, t - 1) * d * d;
      v += s.perm_cost(n, t - 1) * d * held(n, t);
      if (s.risk_mode == RiskMode::covariance)
        for (int m = 0; m < N; ++m) v -= 0.5 * s.risk_aversion * held(n, t) * s.covariance[t - 1](n, m) * held(m, t);
    }
    v += r[t - 1];
  }
  if (s.trade_mode == TradeMode::liquidate)
    for (int n = 0; n < N; ++n) {
      const double d = held(n, T + 1) - held(n, T);
      v -= s.temp_cost(n, T - 1) * d * d;
      v += s.perm_cost(n, T - 1) * d * held(n, T + 1);
    }
  if (s.risk_mode == RiskMode::sample_variance) {
    double mean = 0.0, sq = 0.0;
    for (double x : r) mean += x / T;
    for (double x : r) sq += (x - mean) * (x - mean) / T;
    v -= s.risk_aversion * sq;
  }
  return v;
}

// Brute-force penalty from the bits themselves: budget gap (with slack) for
// linear encodings, one-hot gap for partitions.
inline double reference_penalty(const ProblemSpec& s, const QuadraticProgram& qp, const Bits& x) {
  const int T = s.n_steps;
  std::vector<long long> sum(T, 0), slack(T, 0), hot(T, 0);
  const bool partition = qp.layout->scheme.kind == EncodingKind::partition;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& role = qp.variable_map[i];
    if (!x[i]) continue;
    if (role.kind == VariableKind::holding) sum[role.step] += role.weight;
    if (role.kind == VariableKind::slack) slack[role.step] += role.weight;
    if (role.kind == VariableKind::partition) ++hot[role.step];
  }
  double acc = 0.0;
  for (int t = 0; t < T; ++t) {
    const long long gap = partition ? hot[t] - 1 : s.budget - sum[t] - slack[t];
    acc += static_cast<double>(gap * gap);
  }
  return -s.penalty_strength * acc;
}

inline Bits bits_of(std::uint64_t code, int n) {
  Bits b(n);
  for (int i = 0; i < n; ++i) b[i] = (code >> i) & 1;
  return b;
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Energy of every state of a small Ising model, by definition.
inline std::vector<double> ising_spectrum(const IsingModel& m) {
  const int n = m.size();
  std::vector<double> out;
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << n); ++c) {
    double e = m.offset;
    for (int i = 0; i < n; ++i) {
      const double si = ((c >> i) & 1) ? 1.0 : -1.0;
      e += m.h[i] * si;
      for (int j = i + 1; j < n; ++j) e += m.J(i, j) * si * (((c >> j) & 1) ? 1.0 : -1.0);
    }
    out.push_back(e);
  }
  return out;
}

inline IsingModel random_ising(int n, Rng& rng, double density = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), coin(0.0, 1.0);
  IsingModel m;
  m.h = Eigen::VectorXd::Zero(n);
  m.J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    m.h[i] = u(rng);
    for (int j = i + 1; j < n; ++j)
      if (coin(rng) < density) m.J(i, j) = m.J(j, i) = u(rng);
  }
  m.offset = u(rng);
  return m;
}

// Dense covariance, nonzero costs.
inline GeneratorParams family(int n, int t, int k, RiskMode risk = RiskMode::covariance,
                              TradeMode trade = TradeMode::rebalance) {
  GeneratorParams g;
  g.n_assets = n;
  g.n_steps = t;
  g.budget = k;
  g.risk_mode = risk;
  g.trade_mode = trade;
  g.perm_cost_min = 0.01;
  return g;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("trajq_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace trajq::test
