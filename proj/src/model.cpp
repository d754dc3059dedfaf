#include "trajq/model.hpp"

#include <algorithm>
#include <cmath>

#include "trajq/errors.hpp"
#include "trajq/rng.hpp"

namespace trajq {

std::string to_string(RiskMode m) {
  return m == RiskMode::covariance ? "covariance" : "sample_variance";
}

std::string to_string(TradeMode m) { return m == TradeMode::rebalance ? "rebalance" : "liquidate"; }

RiskMode parse_risk_mode(const std::string& s) {
  if (s == "covariance") return RiskMode::covariance;
  if (s == "sample_variance") return RiskMode::sample_variance;
  throw ValidationError("unknown risk_mode '" + s + "'");
}

TradeMode parse_trade_mode(const std::string& s) {
  if (s == "rebalance") return TradeMode::rebalance;
  if (s == "liquidate") return TradeMode::liquidate;
  throw ValidationError("unknown trade_mode '" + s + "'");
}

namespace {

void expect_shape(const Eigen::MatrixXd& m, int rows, int cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols)
    throw ShapeError(std::string(name) + " has shape " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
}

bool finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

// Holdings at step t in 0..T+1 (0 = w0, T+1 = final holdings).
Eigen::VectorXd holdings_at(const ProblemSpec& spec, const Trajectory& traj, int t) {
  if (t == 0) return spec.initial_holdings.cast<double>();
  if (t <= spec.n_steps) return traj.holdings.col(t - 1).cast<double>();
  return spec.final_holdings->cast<double>();
}

}  // namespace

void validate(const ProblemSpec& spec) {
  const int n = spec.n_assets, T = spec.n_steps;
  if (n < 1) throw ValidationError("n_assets must be positive");
  if (T < 1) throw ValidationError("n_steps must be positive");
  if (spec.budget < 0) throw ValidationError("budget must be non-negative");
  if (spec.max_holding < 0) throw ValidationError("max_holding must be non-negative");
  if (spec.max_holding > spec.budget) throw ValidationError("max_holding exceeds budget");
  expect_shape(spec.returns, n, T, "returns");
  expect_shape(spec.temp_cost, n, T, "temp_cost");
  expect_shape(spec.perm_cost, n, T, "perm_cost");
  if (static_cast<int>(spec.covariance.size()) != T)
    throw ShapeError("covariance must have one page per step");
  for (int t = 0; t < T; ++t) {
    const auto& s = spec.covariance[t];
    expect_shape(s, n, n, "covariance page");
    if (!finite(s)) throw ValidationError("covariance contains non-finite values");
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ValidationError("covariance page " + std::to_string(t) + " is not symmetric");
  }
  if (!finite(spec.returns) || !finite(spec.temp_cost) || !finite(spec.perm_cost))
    throw ValidationError("non-finite coefficient");
  if ((spec.temp_cost.array() < 0).any()) throw ValidationError("temp_cost must be non-negative");
  if (!std::isfinite(spec.risk_aversion) || spec.risk_aversion < 0)
    throw ValidationError("risk_aversion must be non-negative");
  if (spec.initial_holdings.size() != n) throw ShapeError("initial_holdings must have length n_assets");
  if ((spec.initial_holdings.array() < 0).any())
    throw ValidationError("initial_holdings must be non-negative");
  if (spec.final_holdings) {
    if (spec.final_holdings->size() != n) throw ShapeError("final_holdings must have length n_assets");
    if ((spec.final_holdings->array() < 0).any())
      throw ValidationError("final_holdings must be non-negative");
  }
  if (spec.trade_mode == TradeMode::liquidate &&
      (!spec.final_holdings || (spec.final_holdings->array() != 0).any()))
    throw ValidationError("liquidate mode requires all-zero final_holdings");
  if (!std::isfinite(spec.penalty_strength) || spec.penalty_strength <= 0)
    throw ValidationError("penalty_strength must be positive");
}

void check_shape(const ProblemSpec& spec, const Trajectory& traj) {
  if (traj.n_assets() != spec.n_assets || traj.n_steps() != spec.n_steps)
    throw ShapeError("trajectory shape does not match problem");
}

double risk_covariance(const ProblemSpec& spec, const Trajectory& traj, int t) {
  check_shape(spec, traj);
  if (t < 1 || t > spec.n_steps) throw RangeError("step index out of range");
  const Eigen::VectorXd w = traj.holdings.col(t - 1).cast<double>();
  return w.dot(spec.covariance[t - 1] * w);
}

double risk_sample_variance(const ProblemSpec& spec, const Trajectory& traj) {
  check_shape(spec, traj);
  const int T = spec.n_steps;
  Eigen::VectorXd r(T);
  for (int t = 0; t < T; ++t) r[t] = spec.returns.col(t).dot(traj.holdings.col(t).cast<double>());
  const double sum = r.sum();
  double acc = 0.0;
  for (int t = 0; t < T; ++t) acc += r[t] * r[t] - r[t] * sum / T;
  return spec.risk_aversion / T * acc;
}

double objective(const ProblemSpec& spec, const Trajectory& traj) {
  check_shape(spec, traj);
  const int T = spec.n_steps;
  const double gamma = spec.risk_aversion;
  double value = 0.0;
  for (int t = 1; t <= T; ++t) {
    const Eigen::VectorXd w = holdings_at(spec, traj, t);
    const Eigen::VectorXd dw = w - holdings_at(spec, traj, t - 1);
    value += spec.returns.col(t - 1).dot(w);
    if (spec.risk_mode == RiskMode::covariance) value -= 0.5 * gamma * w.dot(spec.covariance[t - 1] * w);
    value -= dw.dot(spec.temp_cost.col(t - 1).cwiseProduct(dw));
    value += dw.dot(spec.perm_cost.col(t - 1).cwiseProduct(w));
  }
  if (spec.trade_mode == TradeMode::liquidate) {
    const Eigen::VectorXd w = holdings_at(spec, traj, T + 1);
    const Eigen::VectorXd dw = w - holdings_at(spec, traj, T);
    value -= dw.dot(spec.temp_cost.col(T - 1).cwiseProduct(dw));
    value += dw.dot(spec.perm_cost.col(T - 1).cwiseProduct(w));
  }
  if (spec.risk_mode == RiskMode::sample_variance) value -= risk_sample_variance(spec, traj);
  return value;
}

bool is_feasible(const ProblemSpec& spec, const Trajectory& traj) {
  check_shape(spec, traj);
  if ((traj.holdings.array() < 0).any() || (traj.holdings.array() > spec.max_holding).any())
    return false;
  for (int t = 0; t < spec.n_steps; ++t) {
    const long long sum = traj.holdings.col(t).cast<long long>().sum();
    if (spec.trade_mode == TradeMode::rebalance ? sum != spec.budget : sum > spec.budget) return false;
  }
  return true;
}

double penalty(const ProblemSpec& spec, const Trajectory& traj) {
  check_shape(spec, traj);
  double acc = 0.0;
  for (int t = 0; t < spec.n_steps; ++t) {
    long long gap = spec.budget - traj.holdings.col(t).cast<long long>().sum();
    if (spec.trade_mode == TradeMode::liquidate) gap = std::min(gap, 0LL);
    acc += static_cast<double>(gap * gap);
  }
  return -spec.penalty_strength * acc;
}

double penalty(const ProblemSpec& spec, const Trajectory& traj, std::span<const int> slack) {
  check_shape(spec, traj);
  if (static_cast<int>(slack.size()) != spec.n_steps) throw ShapeError("slack must have one entry per step");
  double acc = 0.0;
  for (int t = 0; t < spec.n_steps; ++t) {
    const long long gap = spec.budget - traj.holdings.col(t).cast<long long>().sum() - slack[t];
    acc += static_cast<double>(gap * gap);
  }
  return -spec.penalty_strength * acc;
}

double objective_bound(const ProblemSpec& spec, int holding_bound) {
  const int n = spec.n_assets, T = spec.n_steps;
  const double W = holding_bound;
  const double gamma = spec.risk_aversion;
  // Largest |w_t - w_{t-1}| for asset i when entering step t (1..T+1).
  auto max_delta = [&](int i, int t) {
    if (t == 1) return std::max(W, static_cast<double>(spec.initial_holdings[i]));
    if (t == T + 1) return std::max(W, static_cast<double>((*spec.final_holdings)[i]));
    return W;
  };
  double bound = 0.0;
  double sum_r2 = 0.0;
  for (int t = 1; t <= T; ++t) {
    double r = 0.0;
    for (int i = 0; i < n; ++i) {
      r += std::abs(spec.returns(i, t - 1)) * W;
      const double d = max_delta(i, t);
      bound += spec.temp_cost(i, t - 1) * d * d + std::abs(spec.perm_cost(i, t - 1)) * d * W;
    }
    bound += r;
    sum_r2 += r * r;
    if (spec.risk_mode == RiskMode::covariance)
      bound += 0.5 * gamma * spec.covariance[t - 1].cwiseAbs().sum() * W * W;
  }
  if (spec.risk_mode == RiskMode::sample_variance) bound += gamma / T * sum_r2;
  if (spec.trade_mode == TradeMode::liquidate) {
    for (int i = 0; i < n; ++i) {
      const double d = max_delta(i, T + 1);
      const double wf = (*spec.final_holdings)[i];
      bound += spec.temp_cost(i, T - 1) * d * d + std::abs(spec.perm_cost(i, T - 1)) * d * wf;
    }
  }
  return bound;
}

int encodable_ceiling(int max_holding) {
  if (max_holding <= 0) return 0;
  int bits = 0;
  while ((1 << bits) - 1 < max_holding) ++bits;
  int seq = 0;
  while (seq * (seq + 1) / 2 < max_holding) ++seq;
  return std::max((1 << bits) - 1, seq * (seq + 1) / 2);
}

double default_penalty_strength(const ProblemSpec& spec, std::optional<int> holding_bound) {
  const double b = objective_bound(spec, holding_bound.value_or(spec.max_holding));
  return b > 0.0 ? 2.0 * b : 1.0;
}

void validate(const GeneratorParams& p) {
  if (p.n_assets < 1 || p.n_steps < 1) throw ValidationError("n_assets and n_steps must be positive");
  if (p.budget < 0) throw ValidationError("budget must be non-negative");
  if (p.max_holding > p.budget) throw ValidationError("max_holding exceeds budget");
  const int kp = p.max_holding < 0 ? p.budget : p.max_holding;
  if (p.trade_mode == TradeMode::rebalance && static_cast<long long>(kp) * p.n_assets < p.budget)
    throw ValidationError("no feasible portfolio: n_assets * max_holding < budget");
  auto range = [](double lo, double hi, const char* name) {
    if (!(lo <= hi)) throw ValidationError(std::string(name) + " range is empty");
  };
  range(p.returns_min, p.returns_max, "returns");
  range(p.idio_min, p.idio_max, "idiosyncratic variance");
  range(p.temp_cost_min, p.temp_cost_max, "temp_cost");
  range(p.perm_cost_min, p.perm_cost_max, "perm_cost");
  if (p.temp_cost_min < 0) throw ValidationError("temp_cost must be non-negative");
  if (p.idio_min < 0) throw ValidationError("idiosyncratic variance must be non-negative");
  if (p.risk_aversion < 0) throw ValidationError("risk_aversion must be non-negative");
  if (p.factors < 0 || p.factor_scale < 0 || p.raw_scale < 0)
    throw ValidationError("covariance scales must be non-negative");
  if (p.penalty_rule == PenaltyRule::fixed && !(p.penalty_value > 0))
    throw ValidationError("fixed penalty must be positive");
  if (!(p.penalty_scale > 0)) throw ValidationError("penalty_scale must be positive");
}

ProblemSpec random_instance(const GeneratorParams& p, std::uint64_t seed) {
  validate(p);
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const int n = p.n_assets, T = p.n_steps;
  ProblemSpec s;
  s.n_assets = n;
  s.n_steps = T;
  s.budget = p.budget;
  s.max_holding = p.max_holding < 0 ? p.budget : p.max_holding;
  s.risk_aversion = p.risk_aversion;
  s.risk_mode = p.risk_mode;
  s.trade_mode = p.trade_mode;

  s.returns.resize(n, T);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) s.returns(i, t) = uniform(p.returns_min, p.returns_max);

  for (int t = 0; t < T; ++t) {
    Eigen::MatrixXd c(n, n);
    if (p.covariance_mode == CovarianceMode::factor) {
      Eigen::MatrixXd f(n, p.factors);
      for (int k = 0; k < p.factors; ++k)
        for (int i = 0; i < n; ++i) f(i, k) = p.factor_scale * normal(rng);
      c = f * f.transpose();
      for (int i = 0; i < n; ++i) c(i, i) += uniform(p.idio_min, p.idio_max);
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) c(i, j) = c(j, i) = p.raw_scale * normal(rng);
    }
    c = 0.5 * (c + c.transpose()).eval();
    s.covariance.push_back(c);
  }

  s.temp_cost.resize(n, T);
  s.perm_cost.resize(n, T);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      s.temp_cost(i, t) = uniform(p.temp_cost_min, p.temp_cost_max);
      s.perm_cost(i, t) = uniform(p.perm_cost_min, p.perm_cost_max);
    }

  // A random composition of K into N parts capped at K' (units dealt one at a time).
  s.initial_holdings = Eigen::VectorXi::Zero(n);
  if (p.random_initial) {
    for (int k = 0; k < s.budget; ++k) {
      std::vector<int> open;
      for (int i = 0; i < n; ++i)
        if (s.initial_holdings[i] < s.max_holding) open.push_back(i);
      if (open.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
      ++s.initial_holdings[open[pick(rng)]];
    }
  }
  if (s.trade_mode == TradeMode::liquidate) s.final_holdings = Eigen::VectorXi::Zero(n);

  if (p.penalty_rule == PenaltyRule::fixed) {
    s.penalty_strength = p.penalty_value;
  } else {
    const int bound = p.penalty_holding_bound < 0 ? encodable_ceiling(s.max_holding) : p.penalty_holding_bound;
    s.penalty_strength = p.penalty_scale * default_penalty_strength(s, bound);
  }
  validate(s);
  return s;
}

}  // namespace trajq
