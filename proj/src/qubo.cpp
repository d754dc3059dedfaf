#include "trajq/qubo.hpp"

#include <algorithm>
#include <cmath>

#include "trajq/errors.hpp"

namespace trajq {

std::string to_string(VariableKind k) {
  switch (k) {
    case VariableKind::holding: return "holding";
    case VariableKind::partition: return "partition";
    case VariableKind::slack: return "slack";
  }
  return "?";
}

std::string to_string(SlackEncoding k) { return k == SlackEncoding::binary ? "binary" : "unary"; }

SlackEncoding parse_slack_encoding(const std::string& s) {
  if (s == "binary") return SlackEncoding::binary;
  if (s == "unary") return SlackEncoding::unary;
  throw ValidationError("unknown slack encoding '" + s + "'");
}

namespace {

// Affine expression sum_i a_i x_i + c over binary variables.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr& operator+=(const LinExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
  }
  LinExpr scaled(double k) const {
    LinExpr e = *this;
    for (auto& [i, a] : e.terms) a *= k;
    e.constant *= k;
    return e;
  }
};

LinExpr operator-(const LinExpr& a, const LinExpr& b) {
  LinExpr e = a;
  e += b.scaled(-1.0);
  return e;
}

LinExpr constant_expr(double c) {
  LinExpr e;
  e.constant = c;
  return e;
}

class QuboBuilder {
 public:
  explicit QuboBuilder(int n) : q_(Eigen::MatrixXd::Zero(n, n)) {}

  void add(const LinExpr& e, double k) {
    for (const auto& [i, a] : e.terms) q_(i, i) += k * a;
    offset_ += k * e.constant;
  }

  // k * a * b, using x_i^2 = x_i.
  void add_product(const LinExpr& a, const LinExpr& b, double k) {
    for (const auto& [i, ai] : a.terms)
      for (const auto& [j, bj] : b.terms) {
        const double v = k * ai * bj;
        if (i == j) {
          q_(i, i) += v;
        } else {
          q_(i, j) += 0.5 * v;
          q_(j, i) += 0.5 * v;
        }
      }
    for (const auto& [i, ai] : a.terms) q_(i, i) += k * ai * b.constant;
    for (const auto& [j, bj] : b.terms) q_(j, j) += k * bj * a.constant;
    offset_ += k * a.constant * b.constant;
  }

  void add_square(const LinExpr& a, double k) { add_product(a, a, k); }

  Eigen::MatrixXd& matrix() { return q_; }
  double offset() const { return offset_; }

 private:
  Eigen::MatrixXd q_;
  double offset_ = 0.0;
};

std::vector<int> slack_weights(SlackEncoding enc, int budget) {
  return encoding_weights(enc == SlackEncoding::binary ? EncodingKind::binary : EncodingKind::unary,
                          budget);
}

void check_scheme(const ProblemSpec& spec, const EncodingScheme& scheme) {
  if (scheme.max_holding != spec.max_holding)
    throw ValidationError("encoding built for K'=" + std::to_string(scheme.max_holding) +
                          " but problem has K'=" + std::to_string(spec.max_holding));
  if (scheme.kind == EncodingKind::partition) {
    if (scheme.budget != spec.budget || scheme.n_assets != spec.n_assets)
      throw ValidationError("partition encoding built for a different budget or asset count");
    if (scheme.partitions.empty()) throw ValidationError("no partition of the budget satisfies the holding cap");
    if (spec.trade_mode != TradeMode::rebalance)
      throw ValidationError("partition encoding supports rebalance mode only");
  } else if (static_cast<int>(scheme.weights.size()) != scheme.bit_depth) {
    throw ValidationError("encoding weights do not match bit depth");
  }
}

}  // namespace

QuadraticProgram compile(const ProblemSpec& spec, const EncodingScheme& scheme,
                         const CompileOptions& options) {
  validate(spec);
  check_scheme(spec, scheme);
  const int N = spec.n_assets, T = spec.n_steps, D = scheme.bit_depth;
  const bool partition = scheme.kind == EncodingKind::partition;
  const bool liquidate = spec.trade_mode == TradeMode::liquidate;

  ProblemLayout layout;
  layout.n_assets = N;
  layout.n_steps = T;
  layout.budget = spec.budget;
  layout.max_holding = spec.max_holding;
  layout.trade_mode = spec.trade_mode;
  layout.scheme = scheme;
  layout.slack_encoding = options.slack;
  if (liquidate) layout.slack_weights = slack_weights(options.slack, spec.budget);
  const int S = static_cast<int>(layout.slack_weights.size());

  std::vector<VariableRole> roles;
  // W[t][n] for t = 0..T+1 (0 and T+1 are constants).
  std::vector<std::vector<LinExpr>> W(T + 2, std::vector<LinExpr>(N));
  for (int n = 0; n < N; ++n) W[0][n] = constant_expr(spec.initial_holdings[n]);
  if (spec.final_holdings)
    for (int n = 0; n < N; ++n) W[T + 1][n] = constant_expr((*spec.final_holdings)[n]);
  std::vector<LinExpr> slack(T);
  std::vector<LinExpr> one_hot(T);

  for (int t = 0; t < T; ++t) {
    if (partition) {
      for (int p = 0; p < D; ++p) {
        const int idx = static_cast<int>(roles.size());
        roles.push_back({VariableKind::partition, -1, t, p, 0});
        one_hot[t].terms.emplace_back(idx, 1.0);
        for (int n = 0; n < N; ++n)
          if (scheme.partitions[p][n] != 0) W[t + 1][n].terms.emplace_back(idx, scheme.partitions[p][n]);
      }
    } else {
      for (int n = 0; n < N; ++n)
        for (int d = 0; d < D; ++d) {
          const int idx = static_cast<int>(roles.size());
          roles.push_back({VariableKind::holding, n, t, d, scheme.weights[d]});
          W[t + 1][n].terms.emplace_back(idx, scheme.weights[d]);
        }
    }
  }
  for (int t = 0; t < T; ++t)
    for (int d = 0; d < S; ++d) {
      const int idx = static_cast<int>(roles.size());
      roles.push_back({VariableKind::slack, -1, t, d, layout.slack_weights[d]});
      slack[t].terms.emplace_back(idx, layout.slack_weights[d]);
    }

  const int dim = static_cast<int>(roles.size());
  QuboBuilder b(dim);
  const double gamma = spec.risk_aversion;
  const double M = spec.penalty_strength;

  // Energy is the negated objective minus the (non-positive) penalty.
  auto trade_terms = [&](int t, int coef_step) {
    for (int n = 0; n < N; ++n) {
      const LinExpr dw = W[t][n] - W[t - 1][n];
      b.add_square(dw, spec.temp_cost(n, coef_step));
      b.add_product(dw, W[t][n], -spec.perm_cost(n, coef_step));
    }
  };
  for (int t = 1; t <= T; ++t) {
    for (int n = 0; n < N; ++n) b.add(W[t][n], -spec.returns(n, t - 1));
    if (spec.risk_mode == RiskMode::covariance)
      for (int n = 0; n < N; ++n)
        for (int m = 0; m < N; ++m)
          if (spec.covariance[t - 1](n, m) != 0.0)
            b.add_product(W[t][n], W[t][m], 0.5 * gamma * spec.covariance[t - 1](n, m));
    trade_terms(t, t - 1);
  }
  if (liquidate) trade_terms(T + 1, T - 1);

  if (spec.risk_mode == RiskMode::sample_variance && gamma != 0.0) {
    std::vector<LinExpr> r(T);
    LinExpr total;
    for (int t = 0; t < T; ++t) {
      for (int n = 0; n < N; ++n) r[t] += W[t + 1][n].scaled(spec.returns(n, t));
      b.add_square(r[t], gamma / T);
      total += r[t];
    }
    b.add_square(total, -gamma / (static_cast<double>(T) * T));
  }

  for (int t = 0; t < T; ++t) {
    if (partition) {
      b.add_square(one_hot[t] - constant_expr(1.0), M);
      continue;
    }
    LinExpr gap = constant_expr(spec.budget);
    for (int n = 0; n < N; ++n) gap = gap - W[t + 1][n];
    if (liquidate) gap = gap - slack[t];
    b.add_square(gap, M);
  }

  QuadraticProgram qp;
  qp.matrix = std::move(b.matrix());
  qp.offset = b.offset();
  qp.variable_map = std::move(roles);
  qp.layout = std::move(layout);
  return qp;
}

DecodedSolution decode_details(const QuadraticProgram& qp, std::span<const std::uint8_t> bits) {
  if (static_cast<int>(bits.size()) != qp.dimension()) throw ShapeError("bit vector length mismatch");
  if (!qp.layout) throw ValidationError("program has no variable layout to decode");
  const auto& L = *qp.layout;
  DecodedSolution out;
  out.trajectory = Trajectory(L.n_assets, L.n_steps);
  out.slack.assign(L.trade_mode == TradeMode::liquidate ? L.n_steps : 0, 0);
  std::vector<int> first_hot(L.n_steps, -1), hot_count(L.n_steps, 0);
  for (int i = 0; i < qp.dimension(); ++i) {
    if (!bits[i]) continue;
    const auto& r = qp.variable_map[i];
    switch (r.kind) {
      case VariableKind::holding:
        out.trajectory.holdings(r.asset, r.step) += r.weight;
        break;
      case VariableKind::slack:
        out.slack[r.step] += r.weight;
        break;
      case VariableKind::partition:
        if (first_hot[r.step] < 0 || r.bit < first_hot[r.step]) first_hot[r.step] = r.bit;
        ++hot_count[r.step];
        break;
    }
  }
  if (L.scheme.kind == EncodingKind::partition) {
    for (int t = 0; t < L.n_steps; ++t) {
      if (hot_count[t] != 1) ++out.malformed_steps;
      if (first_hot[t] >= 0)
        for (int n = 0; n < L.n_assets; ++n)
          out.trajectory.holdings(n, t) = L.scheme.partitions[first_hot[t]][n];
    }
  }
  return out;
}

Trajectory decode_solution(const QuadraticProgram& qp, std::span<const std::uint8_t> bits) {
  return decode_details(qp, bits).trajectory;
}

bool is_feasible_bits(const QuadraticProgram& qp, std::span<const std::uint8_t> bits) {
  const auto d = decode_details(qp, bits);
  if (d.malformed_steps > 0) return false;
  const auto& L = *qp.layout;
  const auto& w = d.trajectory.holdings;
  if ((w.array() > L.max_holding).any()) return false;
  for (int t = 0; t < L.n_steps; ++t) {
    const long long sum = w.col(t).cast<long long>().sum();
    if (L.trade_mode == TradeMode::rebalance ? sum != L.budget : sum > L.budget) return false;
  }
  return true;
}

Bits encode_trajectory(const QuadraticProgram& qp, const Trajectory& traj) {
  if (!qp.layout) throw ValidationError("program has no variable layout");
  const auto& L = *qp.layout;
  if (traj.n_assets() != L.n_assets || traj.n_steps() != L.n_steps)
    throw ShapeError("trajectory shape does not match program");
  Bits bits(qp.dimension(), 0);
  std::vector<Bits> slack_bits(L.n_steps);
  if (L.trade_mode == TradeMode::liquidate) {
    EncodingScheme s;
    s.kind = L.slack_encoding == SlackEncoding::binary ? EncodingKind::binary : EncodingKind::unary;
    s.weights = L.slack_weights;
    s.bit_depth = static_cast<int>(s.weights.size());
    s.max_holding = L.budget;
    for (int t = 0; t < L.n_steps; ++t) {
      const int gap = L.budget - traj.holdings.col(t).sum();
      slack_bits[t] = encode_value(s, std::clamp(gap, 0, L.budget));
    }
  }
  std::vector<Bits> cells(L.n_assets * L.n_steps);
  std::vector<int> part_index(L.n_steps, -1);
  for (int t = 0; t < L.n_steps; ++t) {
    if (L.scheme.kind == EncodingKind::partition) {
      for (int p = 0; p < L.scheme.bit_depth; ++p) {
        bool match = true;
        for (int n = 0; n < L.n_assets; ++n) match = match && L.scheme.partitions[p][n] == traj.holdings(n, t);
        if (match) part_index[t] = p;
      }
      if (part_index[t] < 0) throw RangeError("trajectory column is not an enumerated partition");
    } else {
      for (int n = 0; n < L.n_assets; ++n) cells[t * L.n_assets + n] = encode_value(L.scheme, traj.holdings(n, t));
    }
  }
  for (int i = 0; i < qp.dimension(); ++i) {
    const auto& r = qp.variable_map[i];
    switch (r.kind) {
      case VariableKind::holding: bits[i] = cells[r.step * L.n_assets + r.asset][r.bit]; break;
      case VariableKind::slack: bits[i] = slack_bits[r.step][r.bit]; break;
      case VariableKind::partition: bits[i] = part_index[r.step] == r.bit; break;
    }
  }
  return bits;
}

double evaluate(const QuadraticProgram& qp, std::span<const std::uint8_t> bits) {
  const int n = qp.dimension();
  if (static_cast<int>(bits.size()) != n) throw ShapeError("bit vector length mismatch");
  std::vector<int> on;
  for (int i = 0; i < n; ++i)
    if (bits[i]) on.push_back(i);
  double e = qp.offset;
  for (int i : on)
    for (int j : on) e += qp.matrix(i, j);
  return e;
}

double density(const QuadraticProgram& qp) {
  const int n = qp.dimension();
  if (n < 2) throw ValidationError("density needs at least two variables");
  long long nz = 0;
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < j; ++i)
      if (qp.matrix(i, j) != 0.0) ++nz;
  return static_cast<double>(nz) / (static_cast<double>(n) * (n - 1) / 2.0);
}

void check_symmetric(const QuadraticProgram& qp, double tol) {
  if (qp.matrix.rows() != qp.matrix.cols()) throw ShapeError("QUBO matrix is not square");
  if (!qp.matrix.allFinite()) throw ValidationError("QUBO matrix has non-finite entries");
  if (qp.matrix.size() == 0) return;
  const double scale = std::max(1.0, qp.matrix.cwiseAbs().maxCoeff());
  if ((qp.matrix - qp.matrix.transpose()).cwiseAbs().maxCoeff() > tol * scale)
    throw ValidationError("QUBO matrix is not symmetric");
}

IsingModel qubo_to_ising(const QuadraticProgram& qp) {
  const int n = qp.dimension();
  IsingModel m;
  m.h = Eigen::VectorXd::Zero(n);
  m.J = Eigen::MatrixXd::Zero(n, n);
  m.offset = qp.offset;
  for (int i = 0; i < n; ++i) {
    m.h[i] += 0.5 * qp.matrix(i, i);
    m.offset += 0.5 * qp.matrix(i, i);
    for (int j = i + 1; j < n; ++j) {
      const double q = 0.5 * (qp.matrix(i, j) + qp.matrix(j, i));
      if (q == 0.0) continue;
      m.J(i, j) = m.J(j, i) = 0.5 * q;
      m.h[i] += 0.5 * q;
      m.h[j] += 0.5 * q;
      m.offset += 0.5 * q;
    }
  }
  return m;
}

QuadraticProgram ising_to_qubo(const IsingModel& m) {
  const int n = m.size();
  QuadraticProgram qp;
  qp.matrix = Eigen::MatrixXd::Zero(n, n);
  qp.offset = m.offset;
  for (int i = 0; i < n; ++i) {
    qp.matrix(i, i) += 2.0 * m.h[i];
    qp.offset -= m.h[i];
    for (int j = i + 1; j < n; ++j) {
      const double J = m.J(i, j);
      if (J == 0.0) continue;
      qp.matrix(i, j) = qp.matrix(j, i) = 2.0 * J;
      qp.matrix(i, i) -= 2.0 * J;
      qp.matrix(j, j) -= 2.0 * J;
      qp.offset += J;
    }
  }
  return qp;
}

double ising_energy(const IsingModel& m, std::span<const std::int8_t> s) {
  const int n = m.size();
  if (static_cast<int>(s.size()) != n) throw ShapeError("spin vector length mismatch");
  double e = m.offset;
  for (int i = 0; i < n; ++i) {
    e += m.h[i] * s[i];
    double acc = 0.0;
    for (int j = i + 1; j < n; ++j) acc += m.J(i, j) * s[j];
    e += s[i] * acc;
  }
  return e;
}

Spins bits_to_spins(std::span<const std::uint8_t> bits) {
  Spins s(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? 1 : -1;
  return s;
}

Bits spins_to_bits(std::span<const std::int8_t> spins) {
  Bits b(spins.size());
  for (std::size_t i = 0; i < spins.size(); ++i) b[i] = spins[i] > 0 ? 1 : 0;
  return b;
}

double max_abs_coefficient(const IsingModel& m) {
  double v = 0.0;
  if (m.h.size()) v = m.h.cwiseAbs().maxCoeff();
  if (m.J.size()) v = std::max(v, m.J.cwiseAbs().maxCoeff());
  return v;
}

}  // namespace trajq
