#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace trajq {

enum class RiskMode { covariance, sample_variance };
enum class TradeMode { rebalance, liquidate };

std::string to_string(RiskMode m);
std::string to_string(TradeMode m);
RiskMode parse_risk_mode(const std::string& s);
TradeMode parse_trade_mode(const std::string& s);

// One instance of the discrete trajectory problem. Matrices indexed (asset, step).
struct ProblemSpec {
  int n_assets = 0;
  int n_steps = 0;
  int budget = 0;       // K
  int max_holding = 0;  // K'
  Eigen::MatrixXd returns;                  // N x T
  double risk_aversion = 0.0;               // gamma
  std::vector<Eigen::MatrixXd> covariance;  // T pages of N x N
  Eigen::MatrixXd temp_cost;                // N x T
  Eigen::MatrixXd perm_cost;                // N x T
  Eigen::VectorXi initial_holdings;         // N
  std::optional<Eigen::VectorXi> final_holdings;
  double penalty_strength = 1.0;  // M
  RiskMode risk_mode = RiskMode::covariance;
  TradeMode trade_mode = TradeMode::rebalance;
};

struct Trajectory {
  Eigen::MatrixXi holdings;  // N x T

  Trajectory() = default;
  explicit Trajectory(Eigen::MatrixXi w) : holdings(std::move(w)) {}
  Trajectory(int n_assets, int n_steps) : holdings(Eigen::MatrixXi::Zero(n_assets, n_steps)) {}

  int n_assets() const { return static_cast<int>(holdings.rows()); }
  int n_steps() const { return static_cast<int>(holdings.cols()); }
  bool operator==(const Trajectory& o) const {
    return holdings.rows() == o.holdings.rows() && holdings.cols() == o.holdings.cols() &&
           holdings == o.holdings;
  }
};

// Throws ValidationError / ShapeError on any violated invariant.
void validate(const ProblemSpec& spec);
void check_shape(const ProblemSpec& spec, const Trajectory& traj);

// Maximization convention. Liquidate mode adds the unwind step T+1 towards
// final_holdings, reusing the step-T cost coefficients.
double objective(const ProblemSpec& spec, const Trajectory& traj);

// w_t' Sigma_t w_t for step t in 1..T.
double risk_covariance(const ProblemSpec& spec, const Trajectory& traj, int t);

// gamma * population variance of r_t = mu_t' w_t.
double risk_sample_variance(const ProblemSpec& spec, const Trajectory& traj);

bool is_feasible(const ProblemSpec& spec, const Trajectory& traj);

// Rebalance: -M sum_t (K - sum_n w_nt)^2.
// Liquidate: the best penalty over integer slacks 0..K, i.e. -M sum_t max(0, sum_n w_nt - K)^2.
double penalty(const ProblemSpec& spec, const Trajectory& traj);

// Liquidate mode with explicit slack per step: -M sum_t (K - sum_n w_nt - s_t)^2.
double penalty(const ProblemSpec& spec, const Trajectory& traj, std::span<const int> slack);

// Triangle-inequality bound on |objective| over 0 <= w_nt <= holding_bound.
double objective_bound(const ProblemSpec& spec, int holding_bound);

// Largest holding any binary, unary, sequential or modified encoding of K' can decode.
int encodable_ceiling(int max_holding);

// 2 * objective_bound over the box [0, K'] (or the given bound); 1 when the bound is zero.
double default_penalty_strength(const ProblemSpec& spec, std::optional<int> holding_bound = {});

enum class CovarianceMode { factor, raw };
enum class PenaltyRule { bound, fixed };

struct GeneratorParams {
  int n_assets = 2;
  int n_steps = 3;
  int budget = 3;
  int max_holding = -1;  // negative: use budget
  double returns_min = 0.0;
  double returns_max = 1.0;
  double risk_aversion = 1.0;
  CovarianceMode covariance_mode = CovarianceMode::factor;
  int factors = 1;
  double factor_scale = 0.3;
  double idio_min = 0.01;
  double idio_max = 0.1;
  double raw_scale = 0.2;
  double temp_cost_min = 0.01;
  double temp_cost_max = 0.2;
  double perm_cost_min = 0.0;
  double perm_cost_max = 0.05;
  bool random_initial = true;  // false: w0 = 0
  RiskMode risk_mode = RiskMode::covariance;
  TradeMode trade_mode = TradeMode::rebalance;
  PenaltyRule penalty_rule = PenaltyRule::bound;
  double penalty_value = 1.0;  // used by PenaltyRule::fixed
  double penalty_scale = 1.0;  // multiplies the bound rule
  int penalty_holding_bound = -1;  // negative: encodable_ceiling(K')

  bool operator==(const GeneratorParams&) const = default;
};

void validate(const GeneratorParams& params);
ProblemSpec random_instance(const GeneratorParams& params, std::uint64_t seed);

}  // namespace trajq
